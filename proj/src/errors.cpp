#include "cbir/errors.hpp"

#include <utility>

namespace cbir {

Error::Error(std::string kind, const std::string& what)
    : std::runtime_error(what), kind_(std::move(kind)) {}

DivergenceError::DivergenceError(int epoch, const std::string& what)
    : Error("divergence", what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}

PhaseError::PhaseError(std::string phase, const Error& cause)
    : Error("phase", "[" + phase + "] " + cause.kind() + " error: " + cause.what()),
      phase_(std::move(phase)),
      cause_kind_(cause.kind()) {}

}  // namespace cbir

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cbir::imagecore {
struct DatasetManifest;
}

namespace cbir::irma {

// Hierarchical label: technical-directional-anatomical-biological axes.
class IrmaCode {
 public:
  IrmaCode() = default;
  // Any number of axes; used for synthetic schemes. Characters must be
  // alphanumeric or '*'.
  static IrmaCode from_axes(std::vector<std::string> axes);

  const std::vector<std::string>& axes() const noexcept { return axes_; }
  const std::string& raw() const noexcept { return raw_; }

  friend bool operator==(const IrmaCode& a, const IrmaCode& b) { return a.axes_ == b.axes_; }
  friend auto operator<=>(const IrmaCode& a, const IrmaCode& b) { return a.axes_ <=> b.axes_; }

 private:
  std::vector<std::string> axes_;
  std::string raw_;
};

inline constexpr std::size_t kAxisCount = 4;
inline constexpr char kWildcard = '*';

// Parses "TTTT-DDD-AAA-BBB". Throws ParseError on a wrong axis count, empty
// axis, or illegal character.
IrmaCode parse_code(std::string_view text);

// Branching factors b_i: for every (axis, prefix) the number of distinct
// characters observed right after that prefix.
class CodeInventory {
 public:
  void add(const IrmaCode& code);
  // At least 1; unseen prefixes report 1.
  std::size_t branching(std::size_t axis, std::string_view prefix) const;

  using Key = std::pair<std::size_t, std::string>;
  const std::map<Key, std::string>& children() const noexcept { return children_; }

  void save_json(const std::filesystem::path& path) const;
  static CodeInventory load_json(const std::filesystem::path& path);

  friend bool operator==(const CodeInventory&, const CodeInventory&) = default;

 private:
  // (axis, prefix) -> sorted distinct child characters
  std::map<Key, std::string> children_;
};

CodeInventory build_inventory(const std::vector<IrmaCode>& codes);

struct ErrorOptions {
  // Penalty for a '*' in the predicted code where the truth is specified.
  // 1.0 treats wildcards as plain mismatches.
  double wildcard_penalty = 0.5;
};

// Hierarchical error in [0,1]. Per axis, positions are scored
// (1/b_i)(1/i) * delta_i; the first wrong specified character makes every
// later position wrong. Axis errors are normalized by the all-wrong score and
// averaged with equal weight. Throws ValidationError on mismatched structure.
double image_error(const IrmaCode& truth, const IrmaCode& predicted, const CodeInventory& inv,
                   const ErrorOptions& options = {});

struct QueryError {
  std::string query_id;
  std::string retrieved_id;
  double error = 0.0;
};

struct ErrorReport {
  std::vector<QueryError> per_query;
  double total_error = 0.0;
  double accuracy_estimate = 1.0;
  // Fraction of queries whose retrieved image carries exactly the query's code.
  double exact_match_rate = 1.0;

  std::size_t query_count() const noexcept { return per_query.size(); }
  void write_csv(const std::filesystem::path& path) const;
  void write_json(const std::filesystem::path& path) const;
};

// 1 - total_error / query_count; 1.0 for an empty query set.
double accuracy_estimate(double total_error, std::size_t query_count);

// Throws LookupError if an id is not in the manifest.
ErrorReport evaluate(const std::vector<std::pair<std::string, std::string>>& results,
                     const imagecore::DatasetManifest& manifest, const CodeInventory& inv,
                     const ErrorOptions& options = {});

}  // namespace cbir::irma

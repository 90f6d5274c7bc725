#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cbir/errors.hpp"
#include "cbir/pipeline.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> threads;
};

cbir::pipeline::PipelineConfig resolve(const Overrides& o) {
  auto config = cbir::pipeline::load_config(o.config_path);
  if (o.seed) config.seed = *o.seed;
  if (o.out_dir) config.paths.out_dir = *o.out_dir;
  if (o.threads) config.threads = *o.threads;
  return config;
}

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config_path, "JSON config file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "override the config seed");
  cmd->add_option("--out-dir", o.out_dir, "override the artifact directory");
  cmd->add_option("-j,--threads", o.threads, "worker threads for feature extraction and evaluation");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Content-based medical image retrieval: train, query, evaluate"};
  app.require_subcommand(1);

  Overrides o;
  auto* train = app.add_subcommand("train", "extract features, train both networks, build the index");
  add_common(train, o);

  auto* query = app.add_subcommand("query", "rank training images against one query image");
  add_common(query, o);
  std::string image;
  query->add_option("image", image, "query image (PNG or PGM)")->required();

  auto* evaluate = app.add_subcommand("evaluate", "score the test split with the IRMA error");
  add_common(evaluate, o);

  auto* inspect = app.add_subcommand("inspect", "print metadata of trained artifacts");
  add_common(inspect, o);

  CLI11_PARSE(app, argc, argv);

  try {
    const auto config = resolve(o);
    if (train->parsed()) {
      const auto summary = cbir::pipeline::cmd_train(config);
      std::cout << summary.report.dump(2) << '\n';
      std::cerr << "artifacts written to " << summary.out_dir.string() << '\n';
    } else if (query->parsed()) {
      const auto engine = cbir::pipeline::Engine::load(config);
      const auto result = cbir::pipeline::cmd_query(config, image);
      std::cout << result.to_json(engine).dump(2) << '\n';
    } else if (evaluate->parsed()) {
      const auto report = cbir::pipeline::cmd_evaluate(config);
      std::cout << "queries:           " << report.query_count() << '\n'
                << "total error:       " << report.total_error << '\n'
                << "accuracy estimate: " << report.accuracy_estimate << '\n'
                << "exact code match:  " << report.exact_match_rate << '\n';
      std::cerr << "reports written to " << config.paths.reports().string() << '\n';
    } else if (inspect->parsed()) {
      std::cout << cbir::pipeline::cmd_inspect(config);
    }
  } catch (const cbir::PhaseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const cbir::Error& e) {
    std::cerr << "error: [config] " << e.kind() << " error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

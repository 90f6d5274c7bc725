#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cbir/errors.hpp"
#include "cbir/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate the five-class synthetic shapes dataset"};
  cbir::synthetic::DatasetOptions opts;
  std::string dir;
  bool square_only = false;
  app.add_option("dir", dir, "output directory")->required();
  app.add_option("--train", opts.train_per_class, "train images per class")->capture_default_str();
  app.add_option("--test", opts.test_per_class, "test images per class")->capture_default_str();
  app.add_option("--classes", opts.classes, "number of shape classes (1-5)")->capture_default_str();
  app.add_option("--side", opts.side, "longest image side in pixels")->capture_default_str();
  app.add_option("--seed", opts.seed, "generator seed")->capture_default_str();
  app.add_flag("--square", square_only, "render every image square");
  CLI11_PARSE(app, argc, argv);
  opts.vary_aspect = !square_only;

  try {
    const auto manifest = cbir::synthetic::write_shapes_dataset(dir, opts);
    std::cout << manifest.string() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

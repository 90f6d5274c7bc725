#include "cbir/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "cbir/errors.hpp"
#include "cbir/imagecore.hpp"

namespace cbir::pipeline {

using nlohmann::json;

namespace {

constexpr int kMetadataVersion = 1;
constexpr const char* kAutoencoderFile = "autoencoder.nnm";
constexpr const char* kClassifierFile = "classifier.nnm";
constexpr const char* kFeaturesFile = "train_features.cbfd";
constexpr const char* kInventoryFile = "inventory.json";
constexpr const char* kMetadataFile = "metadata.json";
constexpr const char* kReportFile = "train_report.json";

template <typename F>
auto in_phase(const std::string& name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const PhaseError&) {
    throw;
  } catch (const Error& e) {
    throw PhaseError(name, e);
  } catch (const json::exception& e) {
    throw PhaseError(name, FormatError(e.what()));
  } catch (const fs::filesystem_error& e) {
    throw PhaseError(name, IoError(e.what()));
  }
}

// Splits [0, n) across `threads` workers; fn(i) must only touch slot i.
template <typename F>
void parallel_for(std::size_t n, std::size_t threads, F&& fn) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += threads) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

json train_config_json(const nn::TrainConfig& t) {
  return {{"batch_size", t.batch_size}, {"learning_rate", t.learning_rate}, {"max_epochs", t.max_epochs},
          {"patience", t.patience},     {"min_delta", t.min_delta},         {"folds", t.folds}};
}

nn::TrainConfig train_config_from(const json& j, nn::TrainConfig t) {
  t.batch_size = j.value("batch_size", t.batch_size);
  t.learning_rate = j.value("learning_rate", t.learning_rate);
  t.max_epochs = j.value("max_epochs", t.max_epochs);
  t.patience = j.value("patience", t.patience);
  t.min_delta = j.value("min_delta", t.min_delta);
  t.folds = j.value("folds", t.folds);
  return t;
}

json feature_json(const features::FeatureConfig& f) {
  return std::visit(
      [](const auto& c) -> json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, features::RadonConfig>) {
          return {{"kind", "radon"}, {"num_projections", c.num_projections}};
        } else if constexpr (std::is_same_v<T, features::HogConfig>) {
          return {{"kind", "hog"},
                  {"num_histograms", c.num_histograms},
                  {"orientation_bins", c.orientation_bins},
                  {"epsilon", c.epsilon}};
        } else {
          return {{"kind", "raw"}, {"factor", c.factor}};
        }
      },
      f);
}

features::FeatureConfig feature_from_json(const json& j) {
  switch (feature_kind_from_string(j.value("kind", std::string("radon")))) {
    case FeatureKind::radon: {
      features::RadonConfig c;
      c.num_projections = j.value("num_projections", c.num_projections);
      return c;
    }
    case FeatureKind::hog: {
      features::HogConfig c;
      c.num_histograms = j.value("num_histograms", c.num_histograms);
      c.orientation_bins = j.value("orientation_bins", c.orientation_bins);
      c.epsilon = j.value("epsilon", c.epsilon);
      return c;
    }
    case FeatureKind::raw: {
      features::RawConfig c;
      c.factor = j.value("factor", c.factor);
      return c;
    }
  }
  throw ParameterError("unknown feature kind");
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return (base / p).lexically_normal();
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

FeatureVector extract_file(const fs::path& file, const features::FeatureConfig& feature, std::size_t side,
                           const std::string& id) {
  const auto img = imagecore::preprocess(imagecore::load_gray(file), side);
  return features::extract(img, feature, id);
}

nn::Matrix to_matrix(const std::vector<FeatureVector>& rows, std::size_t dim) {
  nn::Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < dim; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i].values[j];
  }
  return m;
}

json cv_json(const nn::CvReport& r, const char* metric_name) {
  json folds = json::array();
  for (const auto& f : r.folds) {
    folds.push_back({{metric_name, f.metric},
                     {"val_loss", f.val_loss},
                     {"validation_size", f.validation_size},
                     {"epochs", f.training.history.size()},
                     {"best_epoch", f.training.best_epoch},
                     {"stopped_early", f.training.stopped_early}});
  }
  return {{std::string("mean_") + metric_name, r.mean_metric}, {"best_fold", r.best_fold}, {"folds", folds}};
}

void move_file(const fs::path& from, const fs::path& to) {
  if (!to.parent_path().empty()) fs::create_directories(to.parent_path());
  std::error_code ec;
  fs::rename(from, to, ec);
  if (ec) {
    fs::copy_file(from, to, fs::copy_options::overwrite_existing);
    fs::remove(from);
  }
}

}  // namespace

std::size_t PipelineConfig::feature_dim() const { return features::feature_length(feature, target_side); }

void PipelineConfig::validate() const {
  if (target_side < 1) throw ParameterError("target_side must be at least 1");
  if (const auto* r = std::get_if<features::RadonConfig>(&feature); r && r->num_projections < 1) {
    throw ParameterError("radon num_projections must be at least 1");
  }
  if (const auto* h = std::get_if<features::HogConfig>(&feature)) {
    if (h->num_histograms < 1 || h->orientation_bins < 1) throw ParameterError("HOG grid and bins must be positive");
    if (target_side / h->num_histograms < 2) throw ParameterError("HOG cells would be smaller than 2 pixels");
  }
  const std::size_t dim = feature_dim();
  if (autoencoder.input_dim != 0 && autoencoder.input_dim != dim) {
    throw ValidationError("autoencoder input_dim " + std::to_string(autoencoder.input_dim) + " does not match the " +
                          std::string(to_string(features::kind_of(feature))) + " feature length " +
                          std::to_string(dim));
  }
  models::AutoencoderSpec spec = autoencoder;
  spec.input_dim = dim;
  models::encoder_sizes(spec);
  if (!(autoencoder.dropout >= 0.0 && autoencoder.dropout < 1.0) ||
      !(classifier.dropout >= 0.0 && classifier.dropout < 1.0)) {
    throw ParameterError("dropout must lie in [0,1)");
  }
  if (classifier.num_classes == 1) throw ParameterError("classifier needs at least 2 classes");
  autoencoder_training.validate();
  classifier_training.validate();
  if (fine_tune) fine_tune_training.validate();
  if (retrieval.top_classes < 1 || retrieval.k_per_class < 1) {
    throw ParameterError("top_classes and k_per_class must be at least 1");
  }
  if (!(irma.wildcard_penalty >= 0.0 && irma.wildcard_penalty <= 1.0)) {
    throw ParameterError("wildcard_penalty must lie in [0,1]");
  }
  if (paths.manifest.empty()) throw ParameterError("paths.manifest is required");
}

json PipelineConfig::to_json() const {
  json clf = {{"num_classes", classifier.num_classes},
              {"activation", nn::to_string(classifier.activation)},
              {"dropout", classifier.dropout},
              {"fine_tune", fine_tune}};
  if (classifier.hidden_dims) clf["hidden_dims"] = *classifier.hidden_dims;
  json j = {
      {"seed", seed},
      {"threads", threads},
      {"features", {{"target_side", target_side}}},
      {"autoencoder",
       {{"input_dim", autoencoder.input_dim},
        {"hidden_layers", autoencoder.hidden_layers},
        {"activation", nn::to_string(autoencoder.activation)},
        {"output_activation", nn::to_string(autoencoder.output_activation)},
        {"dropout", autoencoder.dropout}}},
      {"classifier", clf},
      {"training",
       {{"autoencoder", train_config_json(autoencoder_training)},
        {"classifier", train_config_json(classifier_training)},
        {"fine_tune", train_config_json(fine_tune_training)}}},
      {"retrieval", {{"top_classes", retrieval.top_classes}, {"k_per_class", retrieval.k_per_class}}},
      {"irma", {{"wildcard_penalty", irma.wildcard_penalty}}},
      {"paths",
       {{"manifest", paths.manifest.string()},
        {"out_dir", paths.out_dir.string()},
        {"index_file", paths.index_file.string()},
        {"report_dir", paths.report_dir.string()}}},
  };
  const json f = feature_json(feature);
  j["features"]["kind"] = f["kind"];
  json params = f;
  params.erase("kind");
  j["features"][f["kind"].get<std::string>()] = params;
  if (paths.inventory) j["irma"]["inventory"] = paths.inventory->string();
  return j;
}

PipelineConfig config_from_json(const json& doc, const fs::path& base_dir) {
  try {
    PipelineConfig c;
    c.seed = doc.value("seed", c.seed);
    c.threads = doc.value("threads", c.threads);

    const json feats = doc.value("features", json::object());
    c.target_side = feats.value("target_side", c.target_side);
    const std::string kind = feats.value("kind", std::string("radon"));
    json fparams = feats.value(kind, json::object());
    fparams["kind"] = kind;
    c.feature = feature_from_json(fparams);

    const json ae = doc.value("autoencoder", json::object());
    c.autoencoder.input_dim = ae.value("input_dim", c.autoencoder.input_dim);
    c.autoencoder.hidden_layers = ae.value("hidden_layers", c.autoencoder.hidden_layers);
    c.autoencoder.activation = nn::activation_from_string(ae.value("activation", std::string("relu")));
    c.autoencoder.output_activation = nn::activation_from_string(ae.value("output_activation", std::string("linear")));
    c.autoencoder.dropout = ae.value("dropout", c.autoencoder.dropout);

    const json clf = doc.value("classifier", json::object());
    c.classifier.num_classes = clf.value("num_classes", c.classifier.num_classes);
    c.classifier.activation = nn::activation_from_string(clf.value("activation", std::string("relu")));
    c.classifier.dropout = clf.value("dropout", c.classifier.dropout);
    if (clf.contains("hidden_dims")) c.classifier.hidden_dims = clf.at("hidden_dims").get<std::vector<std::size_t>>();
    c.fine_tune = clf.value("fine_tune", false);

    const json training = doc.value("training", json::object());
    c.autoencoder_training = train_config_from(training.value("autoencoder", json::object()), c.autoencoder_training);
    c.classifier_training = train_config_from(training.value("classifier", json::object()), c.classifier_training);
    c.fine_tune_training = train_config_from(training.value("fine_tune", json::object()), c.fine_tune_training);

    const json ret = doc.value("retrieval", json::object());
    c.retrieval.top_classes = ret.value("top_classes", c.retrieval.top_classes);
    c.retrieval.k_per_class = ret.value("k_per_class", c.retrieval.k_per_class);

    const json ir = doc.value("irma", json::object());
    c.irma.wildcard_penalty = ir.value("wildcard_penalty", c.irma.wildcard_penalty);
    if (ir.contains("inventory")) c.paths.inventory = resolve(base_dir, ir.at("inventory").get<std::string>());

    const json paths = doc.value("paths", json::object());
    c.paths.manifest = resolve(base_dir, paths.value("manifest", std::string()));
    c.paths.out_dir = resolve(base_dir, paths.value("out_dir", c.paths.out_dir.string()));
    c.paths.index_file = resolve(base_dir, paths.value("index_file", std::string()));
    c.paths.report_dir = resolve(base_dir, paths.value("report_dir", std::string()));
    return c;
  } catch (const json::exception& e) {
    throw ParameterError(std::string("invalid config: ") + e.what());
  }
}

PipelineConfig load_config(const fs::path& path) {
  return config_from_json(read_json(path), fs::absolute(path).parent_path());
}

TrainSummary cmd_train(const PipelineConfig& config) {
  in_phase("config", [&] { config.validate(); });
  const std::uint64_t seed = config.seed;
  const std::size_t dim = config.feature_dim();

  const auto manifest = in_phase("manifest", [&] { return imagecore::load_manifest(config.paths.manifest); });
  const auto train_rows = manifest.select(imagecore::Split::train);
  std::vector<std::string> class_codes;
  std::map<std::string, std::size_t> class_of;
  std::size_t num_classes = 0;
  in_phase("manifest", [&] {
    if (train_rows.empty()) throw ParameterError("manifest has no train rows");
    std::set<std::string> distinct;
    for (const auto* e : train_rows) distinct.insert(e->irma_code.raw());
    class_codes.assign(distinct.begin(), distinct.end());
    for (std::size_t i = 0; i < class_codes.size(); ++i) class_of[class_codes[i]] = i;
    num_classes = config.classifier.num_classes == 0 ? std::max<std::size_t>(2, class_codes.size())
                                                     : config.classifier.num_classes;
    if (class_codes.size() > num_classes) {
      throw ValidationError("training data has " + std::to_string(class_codes.size()) + " distinct codes but the " +
                            "classifier has " + std::to_string(num_classes) + " classes");
    }
  });

  std::vector<FeatureVector> feats(train_rows.size());
  in_phase("features", [&] {
    parallel_for(train_rows.size(), config.threads, [&](std::size_t i) {
      feats[i] = extract_file(train_rows[i]->file_path, config.feature, config.target_side, train_rows[i]->image_id);
    });
  });
  std::vector<std::size_t> labels;
  for (const auto* e : train_rows) labels.push_back(class_of.at(e->irma_code.raw()));

  models::AutoencoderSpec ae_spec = config.autoencoder;
  ae_spec.input_dim = dim;
  ae_spec.seed = derive_seed(seed, 1);
  nn::TrainConfig ae_cfg = config.autoencoder_training;
  ae_cfg.seed = derive_seed(seed, 2);
  auto ae = in_phase("autoencoder", [&] { return models::train_autoencoder(feats, ae_spec, ae_cfg); });

  const nn::Matrix x = to_matrix(feats, dim);
  nn::Matrix codes = models::encode_batch(ae.model, x);

  models::ClassifierSpec clf_spec = config.classifier;
  clf_spec.input_dim = static_cast<std::size_t>(codes.cols());
  clf_spec.num_classes = num_classes;
  clf_spec.seed = derive_seed(seed, 3);
  nn::TrainConfig clf_cfg = config.classifier_training;
  clf_cfg.seed = derive_seed(seed, 4);
  auto clf = in_phase("classifier", [&] { return models::train_classifier(codes, labels, clf_spec, clf_cfg); });

  if (config.fine_tune) {
    in_phase("fine-tune", [&] {
      nn::TrainConfig ft = config.fine_tune_training;
      ft.seed = derive_seed(seed, 5);
      models::fine_tune(ae.model, clf.model, x, labels, ft);
    });
  }

  auto index = in_phase("index", [&] {
    std::vector<retrieval::IndexItem> items;
    for (std::size_t i = 0; i < feats.size(); ++i) items.push_back({feats[i].values, labels[i], feats[i].source_id});
    return retrieval::ClassIndex::build(items, num_classes);
  });

  const auto inventory = in_phase("inventory", [&] {
    if (config.paths.inventory) return irma::CodeInventory::load_json(*config.paths.inventory);
    std::vector<irma::IrmaCode> codes_seen;
    for (const auto* e : train_rows) codes_seen.push_back(e->irma_code);
    return irma::build_inventory(codes_seen);
  });

  json report = {
      {"train_images", train_rows.size()},
      {"feature_kind", to_string(features::kind_of(config.feature))},
      {"feature_dim", dim},
      {"code_dim", clf_spec.input_dim},
      {"num_classes", num_classes},
      {"autoencoder", cv_json(ae.report, "val_mse")},
      {"classifier", cv_json(clf.report, "val_accuracy")},
  };
  json metadata = {
      {"format_version", kMetadataVersion},
      {"seed", seed},
      {"target_side", config.target_side},
      {"feature", feature_json(config.feature)},
      {"feature_dim", dim},
      {"autoencoder",
       {{"hidden_layers", ae_spec.hidden_layers},
        {"encoder_sizes", models::encoder_sizes(ae_spec)},
        {"activation", nn::to_string(ae_spec.activation)},
        {"output_activation", nn::to_string(ae_spec.output_activation)},
        {"dropout", ae_spec.dropout}}},
      {"code_dim", clf_spec.input_dim},
      {"classifier",
       {{"hidden_dims", clf_spec.resolved_hidden()},
        {"num_classes", num_classes},
        {"activation", nn::to_string(clf_spec.activation)},
        {"dropout", clf_spec.dropout},
        {"fine_tuned", config.fine_tune}}},
      {"classes", class_codes},
      {"index", {{"metric", "l2"}, {"items", index.size()}}},
  };

  const fs::path out = config.paths.out_dir;
  const fs::path staging = out / ".staging";
  in_phase("persist", [&] {
    try {
      fs::remove_all(staging);
      fs::create_directories(staging);
      nn::save_model(ae.model, staging / kAutoencoderFile);
      nn::save_model(clf.model, staging / kClassifierFile);
      features::write_feature_dump(feats, staging / kFeaturesFile);
      index.save(staging / "index.cbidx");
      inventory.save_json(staging / kInventoryFile);
      write_json(staging / kMetadataFile, metadata);
      write_json(staging / kReportFile, report);
      for (const char* name : {kAutoencoderFile, kClassifierFile, kFeaturesFile, kInventoryFile, kReportFile}) {
        move_file(staging / name, out / name);
      }
      move_file(staging / "index.cbidx", config.paths.index_path());
      // metadata last: its presence marks a complete artifact set
      move_file(staging / kMetadataFile, out / kMetadataFile);
      fs::remove_all(staging);
    } catch (...) {
      std::error_code ec;
      fs::remove_all(staging, ec);
      throw;
    }
  });
  return {out, report};
}

Engine Engine::load(const PipelineConfig& config) {
  return in_phase("load", [&] {
    const fs::path out = config.paths.out_dir;
    const fs::path meta_path = out / kMetadataFile;
    if (!fs::exists(meta_path)) {
      throw StateError("no trained artifacts in " + out.string() + "; run `train` first");
    }
    for (const fs::path& p : {out / kAutoencoderFile, out / kClassifierFile, config.paths.index_path()}) {
      if (!fs::exists(p)) throw StateError("missing artifact " + p.string());
    }
    Engine e;
    e.metadata = read_json(meta_path);
    const json expected = feature_json(config.feature);
    if (e.metadata.at("feature") != expected || e.metadata.at("target_side").get<std::size_t>() != config.target_side) {
      throw ValidationError("configured features " + expected.dump() + " at side " + std::to_string(config.target_side) +
                            " differ from the trained " + e.metadata.at("feature").dump() + " at side " +
                            e.metadata.at("target_side").dump());
    }
    e.feature = config.feature;
    e.target_side = config.target_side;
    e.retrieval = config.retrieval;
    e.autoencoder = nn::load_model(out / kAutoencoderFile);
    e.classifier = nn::load_model(out / kClassifierFile);
    e.index = retrieval::ClassIndex::load(config.paths.index_path());
    e.inventory = config.paths.inventory ? irma::CodeInventory::load_json(*config.paths.inventory)
                                         : irma::CodeInventory::load_json(out / kInventoryFile);
    e.class_codes = e.metadata.at("classes").get<std::vector<std::string>>();

    const std::size_t dim = config.feature_dim();
    if (e.autoencoder.input_dim() != dim || e.index.dim() != dim) {
      throw ValidationError("artifact dimensions (autoencoder " + std::to_string(e.autoencoder.input_dim()) +
                            ", index " + std::to_string(e.index.dim()) + ") do not match feature length " +
                            std::to_string(dim));
    }
    const std::size_t depth = models::encoder_depth(e.autoencoder);
    if (e.autoencoder.layers[depth - 1].out() != e.classifier.input_dim()) {
      throw ValidationError("classifier input does not match the autoencoder code size");
    }
    if (e.classifier.output_dim() != e.index.class_count() || e.class_codes.size() > e.index.class_count()) {
      throw ValidationError("classifier classes do not match the index");
    }
    return e;
  });
}

QueryResult run_query(const Engine& engine, const imagecore::GrayImage& image, std::string query_id) {
  const auto pre = imagecore::preprocess(image, engine.target_side);
  const FeatureVector fv = features::extract(pre, engine.feature, query_id);
  const auto code = models::encode(engine.autoencoder, fv);
  QueryResult r;
  r.query = std::move(query_id);
  r.probabilities = models::classify(engine.classifier, code);
  r.retrieval = retrieval::retrieve(engine.index, r.probabilities, fv.values, engine.retrieval);
  return r;
}

json QueryResult::to_json(const Engine& engine) const {
  auto code_of = [&](std::size_t cls) -> std::string {
    return cls < engine.class_codes.size() ? engine.class_codes[cls] : std::string();
  };
  std::vector<std::size_t> order(probabilities.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return probabilities[a] != probabilities[b] ? probabilities[a] > probabilities[b] : a < b;
  });
  json top = json::array();
  for (std::size_t i = 0; i < std::min(order.size(), engine.retrieval.top_classes); ++i) {
    top.push_back({{"class_id", order[i]}, {"irma_code", code_of(order[i])}, {"probability", probabilities[order[i]]}});
  }
  json ranked = json::array();
  for (const auto& c : retrieval.ranked) {
    ranked.push_back({{"image_id", c.image_id},
                      {"class_id", c.class_id},
                      {"irma_code", code_of(c.class_id)},
                      {"raw_distance", c.raw_distance},
                      {"class_probability", c.class_probability},
                      {"weighted_score", c.weighted_score}});
  }
  return {{"query", query},
          {"predicted_class", order.front()},
          {"predicted_code", code_of(order.front())},
          {"top_classes", top},
          {"best_match", ranked.front()},
          {"ranked", ranked}};
}

QueryResult cmd_query(const PipelineConfig& config, const fs::path& image_path) {
  const Engine engine = Engine::load(config);
  return in_phase("query", [&] {
    return run_query(engine, imagecore::load_gray(image_path), image_path.filename().string());
  });
}

irma::ErrorReport cmd_evaluate(const PipelineConfig& config) {
  const Engine engine = Engine::load(config);
  const auto manifest = in_phase("manifest", [&] { return imagecore::load_manifest(config.paths.manifest); });
  const auto test_rows = manifest.select(imagecore::Split::test);
  if (test_rows.empty()) throw PhaseError("manifest", ParameterError("manifest has no test rows"));

  std::vector<std::pair<std::string, std::string>> pairs(test_rows.size());
  in_phase("query", [&] {
    parallel_for(test_rows.size(), config.threads, [&](std::size_t i) {
      const auto* e = test_rows[i];
      const auto r = run_query(engine, imagecore::load_gray(e->file_path), e->image_id);
      pairs[i] = {e->image_id, r.retrieval.best().image_id};
    });
  });
  return in_phase("evaluate", [&] {
    auto report = irma::evaluate(pairs, manifest, engine.inventory, config.irma);
    const fs::path dir = config.paths.reports();
    fs::create_directories(dir);
    report.write_csv(dir / "evaluation.csv");
    report.write_json(dir / "evaluation.json");
    return report;
  });
}

std::string cmd_inspect(const PipelineConfig& config) {
  const Engine e = Engine::load(config);
  std::ostringstream os;
  const auto& m = e.metadata;
  os << "artifacts:      " << config.paths.out_dir.string() << '\n';
  os << "feature:        " << m.at("feature").dump() << " at " << m.at("target_side") << "x" << m.at("target_side")
     << " -> " << m.at("feature_dim") << " values\n";
  os << "seed:           " << m.at("seed") << '\n';
  auto describe = [&os](const char* name, const nn::NeuralModel& model) {
    os << name << model.input_dim();
    for (const auto& l : model.layers) os << " -> " << l.out() << " (" << nn::to_string(l.activation) << ")";
    os << ", dropout " << model.dropout_rate << '\n';
  };
  describe("autoencoder:    ", e.autoencoder);
  describe("classifier:     ", e.classifier);
  os << "index:          " << e.index.size() << " vectors of dim " << e.index.dim() << " in "
     << e.index.classes().size() << " of " << e.index.class_count() << " classes\n";
  for (std::size_t cls : e.index.classes()) {
    os << "  class " << cls << "  " << (cls < e.class_codes.size() ? e.class_codes[cls] : std::string("?")) << "  "
       << e.index.tree(cls).size() << " items\n";
  }
  return os.str();
}

}  // namespace cbir::pipeline

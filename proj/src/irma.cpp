#include "cbir/irma.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include <json.hpp>

#include "cbir/errors.hpp"
#include "cbir/imagecore.hpp"

namespace cbir::irma {

namespace {

bool legal_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == kWildcard;
}

std::string join_axes(const std::vector<std::string>& axes) {
  std::string out;
  for (std::size_t a = 0; a < axes.size(); ++a) {
    if (a != 0) out += '-';
    out += axes[a];
  }
  return out;
}

}  // namespace

IrmaCode IrmaCode::from_axes(std::vector<std::string> axes) {
  if (axes.empty()) throw ParseError("IRMA code has no axes");
  for (std::size_t a = 0; a < axes.size(); ++a) {
    if (axes[a].empty()) throw ParseError("IRMA code axis " + std::to_string(a) + " is empty");
    for (char c : axes[a]) {
      if (!legal_char(c)) {
        throw ParseError("illegal character '" + std::string(1, c) + "' in IRMA code axis " +
                         std::to_string(a));
      }
    }
  }
  IrmaCode code;
  code.raw_ = join_axes(axes);
  code.axes_ = std::move(axes);
  return code;
}

IrmaCode parse_code(std::string_view text) {
  if (text.empty()) throw ParseError("empty IRMA code");
  std::vector<std::string> axes;
  std::size_t start = 0;
  while (true) {
    const auto dash = text.find('-', start);
    axes.emplace_back(text.substr(start, dash == std::string_view::npos ? text.npos : dash - start));
    if (dash == std::string_view::npos) break;
    start = dash + 1;
  }
  if (axes.size() != kAxisCount) {
    throw ParseError("IRMA code '" + std::string(text) + "' has " + std::to_string(axes.size()) +
                     " axes, expected " + std::to_string(kAxisCount));
  }
  try {
    return IrmaCode::from_axes(std::move(axes));
  } catch (const ParseError& e) {
    throw ParseError("IRMA code '" + std::string(text) + "': " + e.what());
  }
}

void CodeInventory::add(const IrmaCode& code) {
  const auto& axes = code.axes();
  for (std::size_t a = 0; a < axes.size(); ++a) {
    for (std::size_t i = 0; i < axes[a].size(); ++i) {
      auto& kids = children_[{a, axes[a].substr(0, i)}];
      const char c = axes[a][i];
      auto it = std::lower_bound(kids.begin(), kids.end(), c);
      if (it == kids.end() || *it != c) kids.insert(it, c);
    }
  }
}

std::size_t CodeInventory::branching(std::size_t axis, std::string_view prefix) const {
  auto it = children_.find({axis, std::string(prefix)});
  if (it == children_.end()) return 1;
  return std::max<std::size_t>(1, it->second.size());
}

void CodeInventory::save_json(const std::filesystem::path& path) const {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [key, kids] : children_) {
    entries.push_back({{"axis", key.first}, {"prefix", key.second}, {"children", kids}});
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write inventory " + path.string());
  out << nlohmann::json{{"branching", entries}}.dump(2) << '\n';
}

CodeInventory CodeInventory::load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read inventory " + path.string());
  CodeInventory inv;
  try {
    const auto doc = nlohmann::json::parse(in);
    for (const auto& e : doc.at("branching")) {
      std::string kids = e.at("children").get<std::string>();
      std::sort(kids.begin(), kids.end());
      kids.erase(std::unique(kids.begin(), kids.end()), kids.end());
      inv.children_[{e.at("axis").get<std::size_t>(), e.at("prefix").get<std::string>()}] = kids;
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed inventory " + path.string() + ": " + e.what());
  }
  return inv;
}

CodeInventory build_inventory(const std::vector<IrmaCode>& codes) {
  CodeInventory inv;
  for (const auto& c : codes) inv.add(c);
  return inv;
}

double image_error(const IrmaCode& truth, const IrmaCode& predicted, const CodeInventory& inv,
                   const ErrorOptions& options) {
  const auto& t_axes = truth.axes();
  const auto& p_axes = predicted.axes();
  if (t_axes.empty() || t_axes.size() != p_axes.size()) {
    throw ValidationError("IRMA codes '" + truth.raw() + "' and '" + predicted.raw() +
                          "' have different axis counts");
  }
  double total = 0.0;
  for (std::size_t a = 0; a < t_axes.size(); ++a) {
    const std::string& t = t_axes[a];
    const std::string& p = p_axes[a];
    if (t.size() != p.size()) {
      throw ValidationError("IRMA codes '" + truth.raw() + "' and '" + predicted.raw() +
                            "' differ in length on axis " + std::to_string(a));
    }
    double penalty = 0.0;
    double norm = 0.0;
    bool wrong = false;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double b = static_cast<double>(inv.branching(a, std::string_view(t).substr(0, i)));
      const double weight = 1.0 / (b * static_cast<double>(i + 1));
      double delta = 0.0;
      if (wrong) {
        delta = 1.0;
      } else if (p[i] == t[i] || t[i] == kWildcard) {
        delta = 0.0;
      } else if (p[i] == kWildcard && options.wildcard_penalty < 1.0) {
        delta = options.wildcard_penalty;
      } else {
        delta = 1.0;
        wrong = true;
      }
      penalty += weight * delta;
      norm += weight;
    }
    total += penalty / norm;
  }
  return total / static_cast<double>(t_axes.size());
}

double accuracy_estimate(double total_error, std::size_t query_count) {
  if (query_count == 0) return 1.0;
  return 1.0 - total_error / static_cast<double>(query_count);
}

ErrorReport evaluate(const std::vector<std::pair<std::string, std::string>>& results,
                     const imagecore::DatasetManifest& manifest, const CodeInventory& inv,
                     const ErrorOptions& options) {
  ErrorReport report;
  std::size_t exact = 0;
  for (const auto& [query_id, retrieved_id] : results) {
    const auto* q = manifest.find(query_id);
    if (q == nullptr) throw LookupError("unknown query image id '" + query_id + "'");
    const auto* r = manifest.find(retrieved_id);
    if (r == nullptr) throw LookupError("unknown retrieved image id '" + retrieved_id + "'");
    const double err = image_error(q->irma_code, r->irma_code, inv, options);
    if (q->irma_code == r->irma_code) ++exact;
    report.per_query.push_back({query_id, retrieved_id, err});
    report.total_error += err;
  }
  report.accuracy_estimate = accuracy_estimate(report.total_error, report.per_query.size());
  report.exact_match_rate =
      results.empty() ? 1.0 : static_cast<double>(exact) / static_cast<double>(results.size());
  return report;
}

void ErrorReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  out << "query_id,retrieved_id,error\n";
  for (const auto& q : per_query) out << q.query_id << ',' << q.retrieved_id << ',' << q.error << '\n';
}

void ErrorReport::write_json(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  nlohmann::json doc{{"total_error", total_error},
                     {"accuracy_estimate", accuracy_estimate},
                     {"query_count", query_count()},
                     {"exact_match_rate", exact_match_rate}};
  out << doc.dump(2) << '\n';
}

}  // namespace cbir::irma

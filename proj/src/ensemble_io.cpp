#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "json.hpp"
#include "mitoforge/csv.hpp"
#include "mitoforge/ensemble.hpp"
#include "mitoforge/error.hpp"

namespace mitoforge {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

PredictionMatrix predictions_from(const csv::Table& table, std::string model_name,
                                  const std::string& source) {
  if (table.header.size() < 2 || table.header[0] != "id") {
    fail(ErrorKind::InvalidInput, source + ": expected header id,prob_0,...");
  }
  PredictionMatrix p;
  p.model_name = std::move(model_name);
  p.classes = table.header.size() - 1;
  for (std::size_t c = 0; c < p.classes; ++c) {
    if (table.header[c + 1] != "prob_" + std::to_string(c)) {
      fail(ErrorKind::InvalidInput,
           source + ": column " + std::to_string(c + 1) + " must be prob_" + std::to_string(c));
    }
  }
  for (const auto& row : table.rows) {
    p.ids.push_back(row[0]);
    double sum = 0.0;
    const std::size_t start = p.probs.size();
    for (std::size_t c = 0; c < p.classes; ++c) {
      const double v = csv::parse_double(row[c + 1], source + " id " + row[0]);
      if (v < 0.0 || v > 1.0) {
        fail(ErrorKind::InvalidInput, source + ": probability outside [0, 1] for " + row[0]);
      }
      p.probs.push_back(v);
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-3) {
      fail(ErrorKind::InvalidInput, source + ": row for " + row[0] + " sums to " +
                                        csv::format_double(sum) + ", not 1");
    }
    if (sum != 1.0) {
      for (std::size_t c = 0; c < p.classes; ++c) p.probs[start + c] /= sum;
    }
  }
  p.validate();
  return p;
}

LabeledSet labels_from(const csv::Table& table, std::size_t classes, const std::string& source) {
  const std::size_t id_col = table.column("id");
  const std::size_t label_col = table.column("label");
  const std::size_t domain_col = table.column("domain");
  if (id_col == csv::Table::npos || label_col == csv::Table::npos) {
    fail(ErrorKind::InvalidInput, source + ": expected header id,label,domain");
  }
  LabeledSet set;
  std::set<std::string> seen;
  int max_label = -1;
  for (const auto& row : table.rows) {
    if (!seen.insert(row[id_col]).second) {
      fail(ErrorKind::InvalidInput, source + ": duplicate id '" + row[id_col] + "'");
    }
    const long long label = csv::parse_int(row[label_col], source + " label");
    if (label < 0) fail(ErrorKind::InvalidInput, source + ": negative label");
    set.ids.push_back(row[id_col]);
    set.labels.push_back(static_cast<int>(label));
    const std::string domain = domain_col == csv::Table::npos ? "" : row[domain_col];
    set.domains.push_back(domain.empty() ? "unknown" : domain);
    max_label = std::max(max_label, static_cast<int>(label));
  }
  set.classes = classes == 0 ? static_cast<std::size_t>(max_label + 1) : classes;
  if (max_label >= static_cast<int>(set.classes)) {
    fail(ErrorKind::InvalidInput, source + ": label exceeds class count");
  }
  return set;
}

}  // namespace

PredictionMatrix read_predictions(const std::filesystem::path& path, std::string model_name) {
  if (model_name.empty()) model_name = path.stem().string();
  return predictions_from(csv::read(path), std::move(model_name), path.string());
}

PredictionMatrix parse_predictions(const std::string& text, std::string model_name) {
  return predictions_from(csv::parse(text, model_name), model_name, model_name);
}

void write_predictions(const PredictionMatrix& preds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  std::vector<std::string> header{"id"};
  for (std::size_t c = 0; c < preds.classes; ++c) header.push_back("prob_" + std::to_string(c));
  csv::write_row(out, header);
  for (std::size_t r = 0; r < preds.rows(); ++r) {
    std::vector<std::string> fields{preds.ids[r]};
    for (double v : preds.row(r)) fields.push_back(csv::format_double(v));
    csv::write_row(out, fields);
  }
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

LabeledSet read_labels(const std::filesystem::path& path, std::size_t classes) {
  return labels_from(csv::read(path), classes, path.string());
}

LabeledSet parse_labels(const std::string& text, std::size_t classes) {
  return labels_from(csv::parse(text, "<labels>"), classes, "<labels>");
}

std::string weights_to_json(const FitResult& fit) {
  ordered_json j;
  j["model_names"] = fit.weights.model_names;
  j["weights"] = fit.weights.w;
  j["fit_balanced_accuracy"] = fit.fit_balanced_accuracy;
  j["iterations"] = fit.iterations;
  j["trace"] = ordered_json::array();
  for (const auto& r : fit.trace) {
    ordered_json t;
    t["round"] = r.round;
    t["chosen"] = r.chosen;
    t["ba"] = r.balanced_accuracy;
    j["trace"].push_back(std::move(t));
  }
  return j.dump(2) + "\n";
}

EnsembleWeights weights_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    EnsembleWeights w;
    w.model_names = j.at("model_names").get<std::vector<std::string>>();
    w.w = j.at("weights").get<std::vector<double>>();
    require(w.model_names.size() == w.w.size(), "weights JSON: names and weights differ in length");
    return w;
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidInput, std::string("weights JSON: ") + e.what());
  }
}

std::string report_to_json(const EvalReport& report) {
  ordered_json j;
  j["overall_ba"] = report.overall_ba;
  j["per_domain_ba"] = ordered_json::object();
  for (const auto& [domain, ba] : report.per_domain_ba) j["per_domain_ba"][domain] = ba;
  j["macro_domain_ba"] = report.macro_domain_ba;
  j["per_class_recall"] = report.per_class_recall;
  j["confusion"] = report.confusion;
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    EvalReport r;
    r.overall_ba = j.at("overall_ba").get<double>();
    r.per_domain_ba = j.at("per_domain_ba").get<std::map<std::string, double>>();
    r.macro_domain_ba = j.at("macro_domain_ba").get<double>();
    r.per_class_recall = j.at("per_class_recall").get<std::vector<double>>();
    r.confusion = j.at("confusion").get<std::vector<std::vector<long long>>>();
    return r;
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidInput, std::string("report JSON: ") + e.what());
  }
}

std::string format_report_table(const EvalReport& report) {
  std::size_t width = 6;
  for (const auto& [domain, _] : report.per_domain_ba) width = std::max(width, domain.size());
  width += 2;

  auto line = [&](const std::string& name, const std::string& value) {
    std::string s = name;
    s.resize(width, ' ');
    char buf[32];
    std::snprintf(buf, sizeof buf, "%10s", value.c_str());
    return s + buf + "\n";
  };
  auto pct = [](double ba) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", ba * 100.0);
    return std::string(buf);
  };

  std::string out = line("domain", "BA (%)");
  for (const auto& [domain, ba] : report.per_domain_ba) out += line(domain, pct(ba));
  out += line("OBA", pct(report.overall_ba));
  return out;
}

}  // namespace mitoforge

#include "mitoforge/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <set>
#include <thread>
#include <unordered_map>

#include "mitoforge/error.hpp"

namespace mitoforge {

void PredictionMatrix::validate() const {
  require(classes >= 1, "predictions '" + model_name + "': need at least one class");
  require(probs.size() == ids.size() * classes,
          "predictions '" + model_name + "': probability count does not match ids");
  std::set<std::string> seen;
  for (const auto& id : ids) {
    require(seen.insert(id).second, "predictions '" + model_name + "': duplicate id '" + id + "'");
  }
  for (std::size_t r = 0; r < rows(); ++r) {
    double sum = 0.0;
    for (double p : row(r)) {
      require(p >= 0.0 && p <= 1.0, "predictions '" + model_name + "': entry outside [0, 1]");
      sum += p;
    }
    require(std::abs(sum - 1.0) <= 1e-6,
            "predictions '" + model_name + "': row for '" + ids[r] + "' does not sum to 1");
  }
}

double balanced_accuracy(std::span<const int> predicted, std::span<const int> truth,
                         std::size_t classes) {
  require(predicted.size() == truth.size(),
          "balanced_accuracy: prediction and label counts differ");
  require(classes >= 1, "balanced_accuracy: need at least one class");
  std::vector<std::size_t> support(classes, 0);
  std::vector<std::size_t> correct(classes, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int y = truth[i];
    require(y >= 0 && static_cast<std::size_t>(y) < classes,
            "balanced_accuracy: label out of range");
    require(predicted[i] >= 0 && static_cast<std::size_t>(predicted[i]) < classes,
            "balanced_accuracy: predicted label out of range");
    ++support[static_cast<std::size_t>(y)];
    if (predicted[i] == y) ++correct[static_cast<std::size_t>(y)];
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    if (support[c] == 0) {
      fail(ErrorKind::DegenerateLabels,
           "balanced_accuracy: class " + std::to_string(c) + " has no samples");
    }
    sum += static_cast<double>(correct[c]) / static_cast<double>(support[c]);
  }
  return sum / static_cast<double>(classes);
}

double balanced_accuracy(std::span<const int> predicted, const LabeledSet& truth) {
  return balanced_accuracy(predicted, truth.labels, truth.classes);
}

std::vector<int> argmax_labels(const PredictionMatrix& preds) {
  std::vector<int> labels(preds.rows());
  for (std::size_t r = 0; r < preds.rows(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < preds.classes; ++c) {
      if (preds(r, c) > preds(r, best)) best = c;
    }
    labels[r] = static_cast<int>(best);
  }
  return labels;
}

std::vector<PredictionMatrix> align_predictions(const std::vector<PredictionMatrix>& preds) {
  require(!preds.empty(), "no prediction matrices given");
  const PredictionMatrix& ref = preds.front();
  std::vector<PredictionMatrix> out;
  out.reserve(preds.size());
  out.push_back(ref);
  for (std::size_t m = 1; m < preds.size(); ++m) {
    const PredictionMatrix& p = preds[m];
    if (p.classes != ref.classes) {
      fail(ErrorKind::AlignmentError, "model '" + p.model_name + "' has " +
                                          std::to_string(p.classes) + " classes, expected " +
                                          std::to_string(ref.classes));
    }
    if (p.rows() != ref.rows()) {
      fail(ErrorKind::AlignmentError,
           "model '" + p.model_name + "' has a different number of samples");
    }
    if (p.ids == ref.ids) {
      out.push_back(p);
      continue;
    }
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t r = 0; r < p.rows(); ++r) index.emplace(p.ids[r], r);
    PredictionMatrix aligned;
    aligned.model_name = p.model_name;
    aligned.ids = ref.ids;
    aligned.classes = p.classes;
    aligned.probs.reserve(p.probs.size());
    for (const auto& id : ref.ids) {
      const auto it = index.find(id);
      if (it == index.end()) {
        fail(ErrorKind::AlignmentError, "model '" + p.model_name + "' has no row for id '" + id + "'");
      }
      const auto row = p.row(it->second);
      aligned.probs.insert(aligned.probs.end(), row.begin(), row.end());
    }
    out.push_back(std::move(aligned));
  }
  return out;
}

namespace {

void validate_weights(const EnsembleWeights& weights, const std::vector<PredictionMatrix>& preds) {
  if (weights.w.size() != preds.size()) {
    fail(ErrorKind::InvalidInput, "ensemble: " + std::to_string(weights.w.size()) +
                                      " weights for " + std::to_string(preds.size()) + " models");
  }
  if (!weights.model_names.empty()) {
    require(weights.model_names.size() == preds.size(),
            "ensemble: weight names do not match the model count");
    for (std::size_t i = 0; i < preds.size(); ++i) {
      require(weights.model_names[i] == preds[i].model_name,
              "ensemble: weight " + std::to_string(i) + " belongs to '" +
                  weights.model_names[i] + "', got predictions for '" + preds[i].model_name + "'");
    }
  }
  double sum = 0.0;
  for (double w : weights.w) {
    require(std::isfinite(w) && w >= 0.0, "ensemble: weights must be nonnegative");
    sum += w;
  }
  require(std::abs(sum - 1.0) <= 1e-9, "ensemble: weights must sum to 1");
}

// Assumes aligned inputs and a weight vector of matching length.
PredictionMatrix blend(const std::vector<PredictionMatrix>& aligned, std::span<const double> w) {
  PredictionMatrix out;
  out.model_name = "ensemble";
  out.ids = aligned.front().ids;
  out.classes = aligned.front().classes;
  out.probs.assign(aligned.front().probs.size(), 0.0);
  for (std::size_t m = 0; m < aligned.size(); ++m) {
    if (w[m] == 0.0) continue;
    const auto& p = aligned[m].probs;
    for (std::size_t i = 0; i < out.probs.size(); ++i) out.probs[i] += w[m] * p[i];
  }
  return out;
}

std::vector<int> labels_in_order(const std::vector<std::string>& ids, const LabeledSet& truth) {
  require(truth.ids.size() == truth.labels.size(), "labels: ids and labels differ in length");
  std::unordered_map<std::string, int> by_id;
  for (std::size_t i = 0; i < truth.ids.size(); ++i) by_id.emplace(truth.ids[i], truth.labels[i]);
  if (by_id.size() != ids.size()) {
    fail(ErrorKind::AlignmentError, "predictions cover " + std::to_string(ids.size()) +
                                        " ids but labels cover " + std::to_string(by_id.size()));
  }
  std::vector<int> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) fail(ErrorKind::AlignmentError, "no label for id '" + id + "'");
    out.push_back(it->second);
  }
  return out;
}

}  // namespace

EnsembleOutput ensemble_predict(const std::vector<PredictionMatrix>& preds,
                                const EnsembleWeights& weights) {
  require(!preds.empty(), "ensemble: no prediction matrices given");
  for (const auto& p : preds) p.validate();
  validate_weights(weights, preds);
  const auto aligned = align_predictions(preds);
  EnsembleOutput out;
  out.probs = blend(aligned, weights.w);
  out.labels = argmax_labels(out.probs);
  return out;
}

FitResult fit_greedy(const std::vector<PredictionMatrix>& preds, const LabeledSet& truth,
                     std::size_t iterations, std::size_t workers) {
  require(!preds.empty(), "fit_greedy: no candidate models");
  require(iterations >= 1, "fit_greedy: iterations must be >= 1");
  for (const auto& p : preds) p.validate();
  const auto aligned = align_predictions(preds);
  const std::size_t models = aligned.size();
  const std::size_t classes = aligned.front().classes;
  const std::vector<int> labels = labels_in_order(aligned.front().ids, truth);
  // Surfaces DegenerateLabels before any scoring.
  balanced_accuracy(labels, labels, classes);

  std::vector<std::size_t> counts(models, 0);
  std::vector<std::size_t> best_counts;
  FitResult result;
  result.iterations = iterations;
  result.fit_balanced_accuracy = -1.0;

  auto score = [&](std::size_t candidate) {
    const double total = static_cast<double>(
        std::accumulate(counts.begin(), counts.end(), std::size_t{0}) + 1);
    std::vector<double> w(models);
    for (std::size_t m = 0; m < models; ++m) {
      w[m] = static_cast<double>(counts[m] + (m == candidate ? 1 : 0)) / total;
    }
    return balanced_accuracy(argmax_labels(blend(aligned, w)), labels, classes);
  };

  std::vector<double> scores(models);
  workers = std::clamp<std::size_t>(workers, 1, models);
  for (std::size_t round = 1; round <= iterations; ++round) {
    if (workers == 1) {
      for (std::size_t m = 0; m < models; ++m) scores[m] = score(m);
    } else {
      std::atomic<std::size_t> next{0};
      std::vector<std::jthread> pool;
      for (std::size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
          for (std::size_t m = next++; m < models; m = next++) scores[m] = score(m);
        });
      }
    }
    std::size_t chosen = 0;
    for (std::size_t m = 1; m < models; ++m) {
      if (scores[m] > scores[chosen]) chosen = m;
    }
    ++counts[chosen];
    result.trace.push_back({round, aligned[chosen].model_name, scores[chosen]});
    if (scores[chosen] > result.fit_balanced_accuracy) {
      result.fit_balanced_accuracy = scores[chosen];
      result.best_round = round;
      best_counts = counts;
    }
  }

  const double size = static_cast<double>(
      std::accumulate(best_counts.begin(), best_counts.end(), std::size_t{0}));
  for (std::size_t m = 0; m < models; ++m) {
    result.weights.model_names.push_back(aligned[m].model_name);
    result.weights.w.push_back(static_cast<double>(best_counts[m]) / size);
  }
  return result;
}

EvalReport evaluate(const std::vector<std::string>& ids, std::span<const int> predicted,
                    const LabeledSet& truth, bool by_domain) {
  require(ids.size() == predicted.size(), "evaluate: ids and predictions differ in length");
  const std::vector<int> labels = labels_in_order(ids, truth);
  std::unordered_map<std::string, std::string> domain_of;
  for (std::size_t i = 0; i < truth.ids.size(); ++i) {
    const std::string& d = i < truth.domains.size() ? truth.domains[i] : std::string();
    domain_of.emplace(truth.ids[i], d.empty() ? "unknown" : d);
  }

  std::size_t classes = truth.classes;
  for (int p : predicted) {
    require(p >= 0, "evaluate: negative predicted label");
    classes = std::max(classes, static_cast<std::size_t>(p) + 1);
  }

  EvalReport report;
  report.overall_ba = balanced_accuracy(predicted, labels, classes);
  report.confusion.assign(classes, std::vector<long long>(classes, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++report.confusion[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(predicted[i])];
  }
  for (std::size_t c = 0; c < classes; ++c) {
    const auto& row = report.confusion[c];
    const long long support = std::accumulate(row.begin(), row.end(), 0LL);
    report.per_class_recall.push_back(static_cast<double>(row[c]) /
                                      static_cast<double>(support));
  }

  if (by_domain) {
    // domain -> per-class (support, correct)
    std::map<std::string, std::vector<std::pair<long long, long long>>> tally;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      auto& t = tally[domain_of.at(ids[i])];
      t.resize(classes);
      auto& cell = t[static_cast<std::size_t>(labels[i])];
      ++cell.first;
      if (predicted[i] == labels[i]) ++cell.second;
    }
    double macro = 0.0;
    for (const auto& [domain, per_class] : tally) {
      double sum = 0.0;
      std::size_t present = 0;
      for (const auto& [support, correct] : per_class) {
        if (support == 0) continue;
        sum += static_cast<double>(correct) / static_cast<double>(support);
        ++present;
      }
      const double ba = sum / static_cast<double>(present);
      report.per_domain_ba.emplace(domain, ba);
      macro += ba;
    }
    report.macro_domain_ba = macro / static_cast<double>(report.per_domain_ba.size());
  }
  return report;
}

EvalReport evaluate(const PredictionMatrix& preds, const LabeledSet& truth, bool by_domain) {
  preds.validate();
  LabeledSet widened = truth;
  widened.classes = std::max(truth.classes, preds.classes);
  return evaluate(preds.ids, argmax_labels(preds), widened, by_domain);
}

}  // namespace mitoforge

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace mitoforge {

// One model's class probabilities: rows aligned with `ids`, N x C row-major.
struct PredictionMatrix {
  std::string model_name;
  std::vector<std::string> ids;
  std::size_t classes = 0;
  std::vector<double> probs;

  std::size_t rows() const noexcept { return ids.size(); }
  double operator()(std::size_t row, std::size_t c) const noexcept {
    return probs[row * classes + c];
  }
  std::span<const double> row(std::size_t r) const noexcept {
    return std::span<const double>(probs).subspan(r * classes, classes);
  }

  // Checks shape, unique ids, entries in [0, 1] and rows summing to 1 within
  // 1e-6. Throws InvalidInput.
  void validate() const;
};

struct LabeledSet {
  std::vector<std::string> ids;
  std::vector<int> labels;
  std::vector<std::string> domains;  // empty tags read as "unknown"
  std::size_t classes = 0;
};

struct EnsembleWeights {
  std::vector<std::string> model_names;
  std::vector<double> w;
};

// Mean of per-class recalls over classes 0..classes-1. Throws
// DegenerateLabels when any class has no support, InvalidInput on length or
// range errors.
double balanced_accuracy(std::span<const int> predicted, std::span<const int> truth,
                         std::size_t classes);
double balanced_accuracy(std::span<const int> predicted, const LabeledSet& truth);

// argmax per row; ties go to the lowest class index.
std::vector<int> argmax_labels(const PredictionMatrix& preds);

struct EnsembleOutput {
  PredictionMatrix probs;
  std::vector<int> labels;
};

// Rows of every matrix are re-ordered by id to match preds[0]. Throws
// AlignmentError if the id sets or class counts differ.
std::vector<PredictionMatrix> align_predictions(const std::vector<PredictionMatrix>& preds);

// P_final = sum_i w_i P_i, label = argmax with lowest-index ties. Inputs are
// aligned by id first. Throws InvalidInput when weights and models disagree.
EnsembleOutput ensemble_predict(const std::vector<PredictionMatrix>& preds,
                                const EnsembleWeights& weights);

struct FitRound {
  std::size_t round = 0;  // 1-based
  std::string chosen;
  double balanced_accuracy = 0.0;
};

struct FitResult {
  EnsembleWeights weights;
  double fit_balanced_accuracy = 0.0;
  std::size_t iterations = 0;
  std::size_t best_round = 0;
  std::vector<FitRound> trace;
};

// Greedy forward selection with replacement. Each round adds the model whose
// inclusion gives the highest balanced accuracy of the averaged bag (lowest
// index on ties); the best bag over all rounds (earliest on ties) becomes the
// weights. Candidate scoring may use `workers` threads; results do not depend
// on it.
FitResult fit_greedy(const std::vector<PredictionMatrix>& preds, const LabeledSet& truth,
                     std::size_t iterations = 25, std::size_t workers = 1);

struct EvalReport {
  double overall_ba = 0.0;  // pooled over all samples (OBA)
  std::map<std::string, double> per_domain_ba;
  double macro_domain_ba = 0.0;  // plain mean of per_domain_ba; 0 when empty
  std::vector<double> per_class_recall;
  std::vector<std::vector<long long>> confusion;  // [truth][predicted]

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Evaluates predicted labels given in `ids` order against `truth`, which is
// matched by id. Per-domain balanced accuracy averages recall over the
// classes present in that domain. Throws AlignmentError for unknown or
// missing ids.
EvalReport evaluate(const std::vector<std::string>& ids, std::span<const int> predicted,
                    const LabeledSet& truth, bool by_domain);
EvalReport evaluate(const PredictionMatrix& preds, const LabeledSet& truth, bool by_domain);

// ---- file formats ----

// `id,prob_0,...,prob_{C-1}`. Rows summing to 1 within 1e-3 are renormalised;
// larger deviations are rejected. The model name defaults to the file stem.
PredictionMatrix read_predictions(const std::filesystem::path& path,
                                  std::string model_name = {});
PredictionMatrix parse_predictions(const std::string& text, std::string model_name);
void write_predictions(const PredictionMatrix& preds, const std::filesystem::path& path);

// `id,label,domain` (domain may be empty). `classes` = 0 infers max label + 1.
LabeledSet read_labels(const std::filesystem::path& path, std::size_t classes = 0);
LabeledSet parse_labels(const std::string& text, std::size_t classes = 0);

// {"model_names", "weights", "fit_balanced_accuracy", "iterations", "trace"}
std::string weights_to_json(const FitResult& fit);
EnsembleWeights weights_from_json(const std::string& text);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

// Domain rows followed by an OBA row, percentages with three decimals.
std::string format_report_table(const EvalReport& report);

}  // namespace mitoforge

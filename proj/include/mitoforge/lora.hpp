#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

namespace mitoforge::lora {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept {
    return data_[r * cols_ + c];
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
// a^T b and a b^T without materialising the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);

// Low-rank factor pair; the update to a frozen d x k weight is
// scale * (a * b) with a: d x r and b: r x k.
struct LoraAdapter {
  Matrix a;
  Matrix b;
  double scale = 1.0;

  std::size_t rank() const noexcept { return a.cols(); }

  // a ~ N(0, init_std^2), b = 0, so the initial update is exactly zero.
  static LoraAdapter init(std::size_t d, std::size_t k, std::size_t rank,
                          std::uint64_t seed, double init_std = 0.02,
                          double scale = 1.0);
};

// w0 + scale * (a * b). Throws InvalidInput on shape mismatch.
Matrix effective_weight(const LoraAdapter& adapter, const Matrix& w0);

// One multi-head self-attention block. Only the optional Q/V adapters are
// trainable; w0_q, w_k, w0_v and w_o stay frozen.
struct MhsaLayer {
  std::size_t d = 0;
  std::size_t heads = 1;
  Matrix w0_q, w_k, w0_v, w_o;
  std::optional<LoraAdapter> lora_q;
  std::optional<LoraAdapter> lora_v;

  Matrix query_weight() const;
  Matrix value_weight() const;
  void validate() const;
};

// FNV-1a over the bytes of the frozen matrices.
std::uint64_t frozen_checksum(const MhsaLayer& layer);

// Attention block -> mean-pool over tokens -> linear head -> softmax.
struct ToyClassifier {
  MhsaLayer layer;
  Matrix head;               // d x C
  std::vector<double> bias;  // C

  std::size_t classes() const noexcept { return bias.size(); }
};

struct ModelShape {
  std::size_t d = 8;
  std::size_t heads = 2;
  std::size_t rank = 2;
  std::size_t classes = 2;
  double scale = 1.0;
};

// Frozen weights ~ N(0, 1/d); head ~ N(0, 0.02^2); bias 0; adapters per
// LoraAdapter::init.
ToyClassifier make_toy_classifier(const ModelShape& shape, std::uint64_t seed);

// One sample is a T x d matrix of token embeddings; a batch holds n samples.
using Batch = std::vector<Matrix>;

// n x C class probabilities. Throws InvalidInput on non-finite input or
// shape mismatch.
Matrix forward(const ToyClassifier& model, const Batch& x);

double mean_cross_entropy(const ToyClassifier& model, const Batch& x,
                          std::span<const int> labels);

// Gradients of the mean cross-entropy for the trainable tensors. Slots for
// absent adapters are empty matrices.
struct Gradients {
  Matrix a_q, b_q, a_v, b_v;
  Matrix head;
  std::vector<double> bias;
  double loss = 0.0;
};

Gradients grad_adapters(const ToyClassifier& model, const Batch& x,
                        std::span<const int> labels);

// Visits every trainable scalar in a fixed order: a_q, b_q, a_v, b_v, head,
// bias. The callback receives a tensor name, flat index and a reference.
template <typename Model, typename Fn>
void for_each_trainable(Model& model, Fn&& fn);

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  std::size_t entries = 0;
};

// Compares grad_adapters against central finite differences with the given
// step. Relative error per entry is |g - fd| / max(|g|, |fd|, floor);
// `floor` keeps entries that are zero analytically from dividing by ~0.
GradCheckReport gradient_check(const ToyClassifier& model, const Batch& x,
                               std::span<const int> labels, double step = 1e-5,
                               double floor = 1e-8);

// A model whose adapters and head are filled with nonzero random values so
// that every gradient entry is exercised.
ToyClassifier make_gradcheck_model(const ModelShape& shape, std::uint64_t seed);

struct ToyDataset {
  Batch x;
  std::vector<int> y;
};

// Two-class token data: every token of a class-c sample is
// (c == 1 ? +offset : -offset) on each coordinate plus N(0, noise^2).
// Labels alternate so both classes are balanced.
ToyDataset make_separable_tokens(std::size_t samples, std::size_t d,
                                 std::size_t tokens, double offset,
                                 double noise, std::uint64_t seed);

struct TrainOptions {
  double lr = 1e-4;
  std::size_t epochs = 50;
  std::size_t patience = 10;
  std::size_t batch_size = 32;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_balanced_accuracy = 0.0;
};

struct TrainResult {
  ToyClassifier model;  // best-validation snapshot
  std::vector<EpochStats> history;  // entry 0 is the untrained model
  std::size_t best_epoch = 0;
  double best_val_balanced_accuracy = 0.0;
  bool stopped_early = false;
};

// Adam on the trainable tensors only. Stops when validation balanced
// accuracy has not improved for `patience` consecutive epochs.
TrainResult train_toy(ToyClassifier model, const ToyDataset& train,
                      const ToyDataset& val, const TrainOptions& options);

// ---- implementation of the template above ----

template <typename Model, typename Fn>
void for_each_trainable(Model& model, Fn&& fn) {
  auto visit = [&](const char* name, auto& span) {
    for (std::size_t i = 0; i < span.size(); ++i) fn(name, i, span[i]);
  };
  if (model.layer.lora_q) {
    auto a = model.layer.lora_q->a.data();
    auto b = model.layer.lora_q->b.data();
    visit("a_q", a);
    visit("b_q", b);
  }
  if (model.layer.lora_v) {
    auto a = model.layer.lora_v->a.data();
    auto b = model.layer.lora_v->b.data();
    visit("a_v", a);
    visit("b_v", b);
  }
  auto head = model.head.data();
  visit("head", head);
  std::span<std::conditional_t<std::is_const_v<Model>, const double, double>> bias(
      model.bias);
  visit("bias", bias);
}

}  // namespace mitoforge::lora

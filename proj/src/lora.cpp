#include "mitoforge/lora.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "mitoforge/error.hpp"
#include "mitoforge/random.hpp"

namespace mitoforge::lora {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == rows_ * cols_, "matrix data length does not match shape");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const double av = a(i, p);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += av * b(p, j);
    }
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "matmul_tn: row counts differ");
  Matrix out(a.cols(), b.cols());
  for (std::size_t p = 0; p < a.rows(); ++p) {
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double av = a(p, i);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += av * b(p, j);
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_nt: column counts differ");
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) s += a(i, p) * b(j, p);
      out(i, j) = s;
    }
  }
  return out;
}

namespace {

void fill_normal(Matrix& m, CounterRng& rng, double stddev) {
  for (double& v : m.data()) v = stddev * rng.normal();
}

}  // namespace

LoraAdapter LoraAdapter::init(std::size_t d, std::size_t k, std::size_t rank,
                              std::uint64_t seed, double init_std, double scale) {
  require(rank >= 1, "lora: rank must be >= 1");
  LoraAdapter adapter{Matrix(d, rank), Matrix(rank, k), scale};
  CounterRng rng(seed);
  fill_normal(adapter.a, rng, init_std);
  return adapter;
}

Matrix effective_weight(const LoraAdapter& adapter, const Matrix& w0) {
  const auto& a = adapter.a;
  const auto& b = adapter.b;
  require(a.rows() == w0.rows() && b.cols() == w0.cols() && a.cols() == b.rows() &&
              a.cols() >= 1,
          "effective_weight: adapter shapes do not conform to the frozen weight");
  Matrix w = w0;
  const Matrix delta = matmul(a, b);
  for (std::size_t i = 0; i < w.data().size(); ++i) {
    w.data()[i] += adapter.scale * delta.data()[i];
  }
  return w;
}

Matrix MhsaLayer::query_weight() const {
  return lora_q ? effective_weight(*lora_q, w0_q) : w0_q;
}

Matrix MhsaLayer::value_weight() const {
  return lora_v ? effective_weight(*lora_v, w0_v) : w0_v;
}

void MhsaLayer::validate() const {
  require(d >= 1 && heads >= 1 && d % heads == 0, "mhsa: heads must divide d");
  for (const Matrix* m : {&w0_q, &w_k, &w0_v, &w_o}) {
    require(m->rows() == d && m->cols() == d, "mhsa: frozen weights must be d x d");
  }
  for (const auto* adapter : {&lora_q, &lora_v}) {
    if (*adapter) {
      require((*adapter)->a.rows() == d && (*adapter)->b.cols() == d &&
                  (*adapter)->a.cols() == (*adapter)->b.rows(),
              "mhsa: adapter shapes must be d x r and r x d");
    }
  }
}

std::uint64_t frozen_checksum(const MhsaLayer& layer) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const Matrix* m : {&layer.w0_q, &layer.w_k, &layer.w0_v, &layer.w_o}) {
    const auto data = m->data();
    const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
    for (std::size_t i = 0; i < data.size_bytes(); ++i) {
      h ^= bytes[i];
      h *= 0x100000001B3ULL;
    }
  }
  return h;
}

ToyClassifier make_toy_classifier(const ModelShape& shape, std::uint64_t seed) {
  ToyClassifier model;
  auto& layer = model.layer;
  layer.d = shape.d;
  layer.heads = shape.heads;
  CounterRng rng(seed);
  const double frozen_std = 1.0 / std::sqrt(static_cast<double>(shape.d));
  for (Matrix* m : {&layer.w0_q, &layer.w_k, &layer.w0_v, &layer.w_o}) {
    *m = Matrix(shape.d, shape.d);
    fill_normal(*m, rng, frozen_std);
  }
  layer.lora_q = LoraAdapter::init(shape.d, shape.d, shape.rank, rng.next_u64(), 0.02,
                                   shape.scale);
  layer.lora_v = LoraAdapter::init(shape.d, shape.d, shape.rank, rng.next_u64(), 0.02,
                                   shape.scale);
  model.head = Matrix(shape.d, shape.classes);
  fill_normal(model.head, rng, 0.02);
  model.bias.assign(shape.classes, 0.0);
  layer.validate();
  return model;
}

ToyClassifier make_gradcheck_model(const ModelShape& shape, std::uint64_t seed) {
  ToyClassifier model = make_toy_classifier(shape, seed);
  CounterRng rng(derive_seed(seed, 1));
  for_each_trainable(model, [&](const char*, std::size_t, double& v) {
    v = 0.5 * rng.normal();
  });
  return model;
}

// ---- forward / backward -----------------------------------------------------

namespace {

struct SampleCache {
  Matrix q, k, v;
  std::vector<Matrix> attn;  // per head, T x T row-stochastic
  Matrix concat;             // T x d, heads side by side
  std::vector<double> pooled;
  std::vector<double> probs;
};

void softmax_inplace(std::span<double> row) {
  const double m = *std::max_element(row.begin(), row.end());
  double s = 0.0;
  for (double& v : row) {
    v = std::exp(v - m);
    s += v;
  }
  for (double& v : row) v /= s;
}

void check_inputs(const ToyClassifier& model, const Batch& x) {
  model.layer.validate();
  require(model.head.rows() == model.layer.d && model.head.cols() == model.classes() &&
              model.classes() >= 1,
          "toy classifier: head must be d x C with a length-C bias");
  for (const auto& s : x) {
    require(s.cols() == model.layer.d && s.rows() >= 1,
            "toy classifier: each sample must be a T x d token matrix");
    for (double v : s.data()) require(std::isfinite(v), "toy classifier: non-finite input");
  }
}

SampleCache forward_sample(const ToyClassifier& model, const Matrix& wq,
                           const Matrix& wv, const Matrix& x) {
  const auto& layer = model.layer;
  const std::size_t t = x.rows();
  const std::size_t d = layer.d;
  const std::size_t dh = d / layer.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

  SampleCache c;
  c.q = matmul(x, wq);
  c.k = matmul(x, layer.w_k);
  c.v = matmul(x, wv);
  c.concat = Matrix(t, d);
  for (std::size_t h = 0; h < layer.heads; ++h) {
    const std::size_t off = h * dh;
    Matrix p(t, t);
    for (std::size_t i = 0; i < t; ++i) {
      for (std::size_t j = 0; j < t; ++j) {
        double s = 0.0;
        for (std::size_t e = 0; e < dh; ++e) s += c.q(i, off + e) * c.k(j, off + e);
        p(i, j) = s * inv_sqrt;
      }
      softmax_inplace(p.data().subspan(i * t, t));
    }
    for (std::size_t i = 0; i < t; ++i) {
      for (std::size_t j = 0; j < t; ++j) {
        const double pij = p(i, j);
        for (std::size_t e = 0; e < dh; ++e) c.concat(i, off + e) += pij * c.v(j, off + e);
      }
    }
    c.attn.push_back(std::move(p));
  }
  const Matrix z = matmul(c.concat, layer.w_o);
  c.pooled.assign(d, 0.0);
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t e = 0; e < d; ++e) c.pooled[e] += z(i, e);
  }
  for (double& v : c.pooled) v /= static_cast<double>(t);

  c.probs = model.bias;
  for (std::size_t e = 0; e < d; ++e) {
    for (std::size_t k = 0; k < c.probs.size(); ++k) c.probs[k] += c.pooled[e] * model.head(e, k);
  }
  softmax_inplace(c.probs);
  return c;
}

void check_labels(const ToyClassifier& model, const Batch& x, std::span<const int> labels) {
  require(labels.size() == x.size(), "toy classifier: label count differs from batch size");
  require(!x.empty(), "toy classifier: empty batch");
  for (int y : labels) {
    require(y >= 0 && static_cast<std::size_t>(y) < model.classes(),
            "toy classifier: label out of range");
  }
}

}  // namespace

Matrix forward(const ToyClassifier& model, const Batch& x) {
  check_inputs(model, x);
  const Matrix wq = model.layer.query_weight();
  const Matrix wv = model.layer.value_weight();
  Matrix out(x.size(), model.classes());
  for (std::size_t n = 0; n < x.size(); ++n) {
    const auto c = forward_sample(model, wq, wv, x[n]);
    std::copy(c.probs.begin(), c.probs.end(), out.data().begin() + n * model.classes());
  }
  return out;
}

double mean_cross_entropy(const ToyClassifier& model, const Batch& x,
                          std::span<const int> labels) {
  check_labels(model, x, labels);
  const Matrix p = forward(model, x);
  double loss = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    loss -= std::log(p(n, static_cast<std::size_t>(labels[n])));
  }
  return loss / static_cast<double>(x.size());
}

Gradients grad_adapters(const ToyClassifier& model, const Batch& x,
                        std::span<const int> labels) {
  check_inputs(model, x);
  check_labels(model, x, labels);
  const auto& layer = model.layer;
  const std::size_t d = layer.d;
  const std::size_t dh = d / layer.heads;
  const std::size_t classes = model.classes();
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const double inv_n = 1.0 / static_cast<double>(x.size());

  const Matrix wq = layer.query_weight();
  const Matrix wv = layer.value_weight();

  Gradients g;
  g.head = Matrix(d, classes);
  g.bias.assign(classes, 0.0);
  Matrix d_wq(d, d);
  Matrix d_wv(d, d);

  for (std::size_t n = 0; n < x.size(); ++n) {
    const Matrix& xs = x[n];
    const std::size_t t = xs.rows();
    const auto c = forward_sample(model, wq, wv, xs);
    const auto y = static_cast<std::size_t>(labels[n]);
    g.loss -= std::log(c.probs[y]) * inv_n;

    std::vector<double> d_logits(classes);
    for (std::size_t k = 0; k < classes; ++k) {
      d_logits[k] = (c.probs[k] - (k == y ? 1.0 : 0.0)) * inv_n;
      g.bias[k] += d_logits[k];
    }
    std::vector<double> d_pooled(d, 0.0);
    for (std::size_t e = 0; e < d; ++e) {
      for (std::size_t k = 0; k < classes; ++k) {
        g.head(e, k) += c.pooled[e] * d_logits[k];
        d_pooled[e] += model.head(e, k) * d_logits[k];
      }
    }
    // Mean pooling spreads d_pooled / T to every token; every row of
    // d_concat is therefore (d_pooled / T) * w_o^T.
    std::vector<double> d_row(d, 0.0);
    for (std::size_t e = 0; e < d; ++e) {
      double s = 0.0;
      for (std::size_t f = 0; f < d; ++f) s += d_pooled[f] * layer.w_o(e, f);
      d_row[e] = s / static_cast<double>(t);
    }

    Matrix d_q(t, d);
    Matrix d_v(t, d);
    for (std::size_t h = 0; h < layer.heads; ++h) {
      const std::size_t off = h * dh;
      const Matrix& p = c.attn[h];
      for (std::size_t i = 0; i < t; ++i) {
        // dP(i, j) = d_row_h . v_h(j); dS = P * (dP - <dP, P>)
        std::vector<double> dp(t);
        double dot = 0.0;
        for (std::size_t j = 0; j < t; ++j) {
          double s = 0.0;
          for (std::size_t e = 0; e < dh; ++e) s += d_row[off + e] * c.v(j, off + e);
          dp[j] = s;
          dot += s * p(i, j);
        }
        for (std::size_t j = 0; j < t; ++j) {
          const double ds = p(i, j) * (dp[j] - dot) * inv_sqrt;
          for (std::size_t e = 0; e < dh; ++e) d_q(i, off + e) += ds * c.k(j, off + e);
          // dV_h(j) += P(i, j) * d_row_h
          for (std::size_t e = 0; e < dh; ++e) d_v(j, off + e) += p(i, j) * d_row[off + e];
        }
      }
    }
    const Matrix dwq_n = matmul_tn(xs, d_q);
    const Matrix dwv_n = matmul_tn(xs, d_v);
    for (std::size_t i = 0; i < d * d; ++i) {
      d_wq.data()[i] += dwq_n.data()[i];
      d_wv.data()[i] += dwv_n.data()[i];
    }
  }

  auto adapter_grads = [](const LoraAdapter& ad, const Matrix& dw, Matrix& ga, Matrix& gb) {
    ga = matmul_nt(dw, ad.b);
    gb = matmul_tn(ad.a, dw);
    for (double& v : ga.data()) v *= ad.scale;
    for (double& v : gb.data()) v *= ad.scale;
  };
  if (layer.lora_q) adapter_grads(*layer.lora_q, d_wq, g.a_q, g.b_q);
  if (layer.lora_v) adapter_grads(*layer.lora_v, d_wv, g.a_v, g.b_v);
  return g;
}

GradCheckReport gradient_check(const ToyClassifier& model, const Batch& x,
                               std::span<const int> labels, double step, double floor) {
  const Gradients g = grad_adapters(model, x, labels);
  std::vector<double> analytic;
  for (const Matrix* m : {&g.a_q, &g.b_q, &g.a_v, &g.b_v, &g.head}) {
    analytic.insert(analytic.end(), m->data().begin(), m->data().end());
  }
  analytic.insert(analytic.end(), g.bias.begin(), g.bias.end());

  GradCheckReport report;
  ToyClassifier probe = model;
  std::size_t flat = 0;
  for_each_trainable(probe, [&](const char* name, std::size_t index, double& v) {
    const double saved = v;
    v = saved + step;
    const double up = mean_cross_entropy(probe, x, labels);
    v = saved - step;
    const double down = mean_cross_entropy(probe, x, labels);
    v = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic[flat++];
    const double rel =
        std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
    if (report.entries == 0 || rel > report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst_tensor = name;
      report.worst_index = index;
    }
    ++report.entries;
  });
  return report;
}

}  // namespace mitoforge::lora

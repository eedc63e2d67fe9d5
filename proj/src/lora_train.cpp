#include <algorithm>
#include <cmath>
#include <numeric>

#include "mitoforge/ensemble.hpp"
#include "mitoforge/error.hpp"
#include "mitoforge/lora.hpp"
#include "mitoforge/random.hpp"

namespace mitoforge::lora {

ToyDataset make_separable_tokens(std::size_t samples, std::size_t d, std::size_t tokens,
                                 double offset, double noise, std::uint64_t seed) {
  require(samples >= 1 && d >= 1 && tokens >= 1, "make_separable_tokens: empty shape");
  ToyDataset data;
  CounterRng rng(seed);
  for (std::size_t n = 0; n < samples; ++n) {
    const int label = static_cast<int>(n % 2);
    const double mean = label == 1 ? offset : -offset;
    Matrix x(tokens, d);
    for (double& v : x.data()) v = mean + noise * rng.normal();
    data.x.push_back(std::move(x));
    data.y.push_back(label);
  }
  return data;
}

namespace {

std::vector<int> predict_labels(const ToyClassifier& model, const Batch& x) {
  const Matrix p = forward(model, x);
  std::vector<int> out(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < p.cols(); ++k) {
      if (p(n, k) > p(n, best)) best = k;
    }
    out[n] = static_cast<int>(best);
  }
  return out;
}

// Flat views over the trainable tensors in for_each_trainable order.
std::vector<double> flatten(const Gradients& g) {
  std::vector<double> flat;
  for (const Matrix* m : {&g.a_q, &g.b_q, &g.a_v, &g.b_v, &g.head}) {
    flat.insert(flat.end(), m->data().begin(), m->data().end());
  }
  flat.insert(flat.end(), g.bias.begin(), g.bias.end());
  return flat;
}

}  // namespace

TrainResult train_toy(ToyClassifier model, const ToyDataset& train, const ToyDataset& val,
                      const TrainOptions& options) {
  require(!train.x.empty() && !val.x.empty(), "train_toy: empty training or validation data");
  require(options.batch_size >= 1, "train_toy: batch_size must be >= 1");
  const std::size_t classes = model.classes();

  std::size_t param_count = 0;
  for_each_trainable(model, [&](const char*, std::size_t, double&) { ++param_count; });
  std::vector<double> m(param_count, 0.0);
  std::vector<double> v(param_count, 0.0);
  std::size_t step = 0;

  auto evaluate_epoch = [&](std::size_t epoch, double train_loss) {
    EpochStats s;
    s.epoch = epoch;
    s.train_loss = train_loss;
    s.val_loss = mean_cross_entropy(model, val.x, val.y);
    s.val_balanced_accuracy =
        balanced_accuracy(predict_labels(model, val.x), val.y, classes);
    return s;
  };

  TrainResult result;
  result.history.push_back(
      evaluate_epoch(0, mean_cross_entropy(model, train.x, train.y)));
  result.model = model;
  result.best_val_balanced_accuracy = result.history.back().val_balanced_accuracy;

  std::vector<std::size_t> order(train.x.size());
  std::iota(order.begin(), order.end(), 0);
  CounterRng rng(options.seed);
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      Batch xb;
      std::vector<int> yb;
      for (std::size_t i = start; i < end; ++i) {
        xb.push_back(train.x[order[i]]);
        yb.push_back(train.y[order[i]]);
      }
      const Gradients g = grad_adapters(model, xb, yb);
      loss_sum += g.loss * static_cast<double>(end - start);
      const std::vector<double> grad = flatten(g);

      ++step;
      const double bc1 = 1.0 - std::pow(options.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(options.beta2, static_cast<double>(step));
      std::size_t idx = 0;
      for_each_trainable(model, [&](const char*, std::size_t, double& w) {
        const double gi = grad[idx] + options.weight_decay * w;
        m[idx] = options.beta1 * m[idx] + (1.0 - options.beta1) * gi;
        v[idx] = options.beta2 * v[idx] + (1.0 - options.beta2) * gi * gi;
        w -= options.lr * (m[idx] / bc1) / (std::sqrt(v[idx] / bc2) + options.eps);
        ++idx;
      });
    }

    result.history.push_back(
        evaluate_epoch(epoch, loss_sum / static_cast<double>(order.size())));
    const double ba = result.history.back().val_balanced_accuracy;
    if (ba > result.best_val_balanced_accuracy) {
      result.best_val_balanced_accuracy = ba;
      result.best_epoch = epoch;
      result.model = model;
      since_best = 0;
    } else if (++since_best >= options.patience) {
      result.stopped_early = true;
      break;
    }
  }
  return result;
}

}  // namespace mitoforge::lora

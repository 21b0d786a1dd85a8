#pragma once

// Downstream utility probe: a two-layer tanh network trained with softmax
// cross-entropy on embeddings, scored on a seeded 20% hold-out.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "embmarker/error.hpp"
#include "embmarker/random.hpp"

namespace embmarker {

struct ClassifierOptions {
  int hidden = 64;
  int epochs = 60;
  int batch_size = 64;
  double learning_rate = 1e-2;
  double holdout_fraction = 0.2;
};

struct ClassifierResult {
  double accuracy = 0.0;  // held-out
  double train_accuracy = 0.0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

namespace detail {

struct AdamState {
  Eigen::MatrixXd m, v;
  explicit AdamState(Eigen::Index rows = 0, Eigen::Index cols = 0)
      : m(Eigen::MatrixXd::Zero(rows, cols)), v(Eigen::MatrixXd::Zero(rows, cols)) {}

  void step(Eigen::MatrixXd& theta, const Eigen::MatrixXd& grad, double lr, long t) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    m = b1 * m + (1.0 - b1) * grad;
    v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    theta.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
};

}  // namespace detail

inline ClassifierResult train_classifier(std::span<const Eigen::VectorXd> embeddings, std::span<const int> labels,
                                         std::uint64_t seed, const ClassifierOptions& opt = {}) {
  if (embeddings.size() != labels.size() || embeddings.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "need one label per embedding");
  }
  const int num_classes = *std::max_element(labels.begin(), labels.end()) + 1;
  if (*std::min_element(labels.begin(), labels.end()) < 0) throw Error(ErrorCode::kDegenerateLabels, "negative label");
  std::vector<std::size_t> per_class(static_cast<std::size_t>(num_classes), 0);
  for (int y : labels) ++per_class[static_cast<std::size_t>(y)];
  if (num_classes < 2) throw Error(ErrorCode::kDegenerateLabels, "need at least two classes");
  for (int c = 0; c < num_classes; ++c) {
    if (per_class[static_cast<std::size_t>(c)] < 2) {
      throw Error(ErrorCode::kDegenerateLabels, "class " + std::to_string(c) + " has fewer than 2 samples");
    }
  }

  const Eigen::Index in = embeddings.front().size();
  const std::size_t n = embeddings.size();
  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  const auto test_size = std::max<std::size_t>(1, static_cast<std::size_t>(std::round(opt.holdout_fraction * static_cast<double>(n))));
  const std::size_t train_size = n - test_size;
  if (train_size == 0) throw Error(ErrorCode::kDegenerateLabels, "no training samples after split");

  auto gather = [&](std::size_t from, std::size_t to, Eigen::MatrixXd& x, std::vector<int>& y) {
    x.resize(static_cast<Eigen::Index>(to - from), in);
    y.clear();
    for (std::size_t k = from; k < to; ++k) {
      x.row(static_cast<Eigen::Index>(k - from)) = embeddings[order[k]].transpose();
      y.push_back(labels[order[k]]);
    }
  };

  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd w1(in, opt.hidden), w2(opt.hidden, num_classes);
  for (Eigen::Index c = 0; c < w1.cols(); ++c)
    for (Eigen::Index r = 0; r < w1.rows(); ++r) w1(r, c) = gauss(rng);  // unit-norm inputs
  for (Eigen::Index c = 0; c < w2.cols(); ++c)
    for (Eigen::Index r = 0; r < w2.rows(); ++r) w2(r, c) = gauss(rng) / std::sqrt(static_cast<double>(opt.hidden));
  Eigen::MatrixXd b1 = Eigen::MatrixXd::Zero(1, opt.hidden), b2 = Eigen::MatrixXd::Zero(1, num_classes);
  detail::AdamState s_w1(in, opt.hidden), s_w2(opt.hidden, num_classes), s_b1(1, opt.hidden), s_b2(1, num_classes);

  auto forward = [&](const Eigen::MatrixXd& x, Eigen::MatrixXd& hidden) {
    hidden = ((x * w1).rowwise() + b1.row(0)).array().tanh().matrix();
    return Eigen::MatrixXd((hidden * w2).rowwise() + b2.row(0));
  };
  auto accuracy = [&](const Eigen::MatrixXd& x, const std::vector<int>& y) {
    Eigen::MatrixXd hidden;
    const Eigen::MatrixXd logits = forward(x, hidden);
    std::size_t correct = 0;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
      Eigen::Index arg = 0;
      logits.row(r).maxCoeff(&arg);
      if (static_cast<int>(arg) == y[static_cast<std::size_t>(r)]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(y.size());
  };

  std::vector<std::size_t> train_order(train_size);
  std::iota(train_order.begin(), train_order.end(), std::size_t{0});
  Eigen::MatrixXd x_train;
  std::vector<int> y_train;
  gather(0, train_size, x_train, y_train);

  long t = 0;
  Eigen::MatrixXd xb, hidden;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    std::shuffle(train_order.begin(), train_order.end(), rng);
    for (std::size_t start = 0; start < train_size; start += static_cast<std::size_t>(opt.batch_size)) {
      const std::size_t stop = std::min(train_size, start + static_cast<std::size_t>(opt.batch_size));
      const auto rows = static_cast<Eigen::Index>(stop - start);
      xb.resize(rows, in);
      Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(rows, num_classes);
      for (std::size_t k = start; k < stop; ++k) {
        xb.row(static_cast<Eigen::Index>(k - start)) = x_train.row(static_cast<Eigen::Index>(train_order[k]));
        onehot(static_cast<Eigen::Index>(k - start), y_train[train_order[k]]) = 1.0;
      }
      Eigen::MatrixXd logits = forward(xb, hidden);
      Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
      Eigen::MatrixXd probs = (logits.colwise() - row_max).array().exp().matrix();
      probs.array().colwise() /= probs.rowwise().sum().array();

      const Eigen::MatrixXd d_logits = (probs - onehot) / static_cast<double>(rows);
      const Eigen::MatrixXd g_w2 = hidden.transpose() * d_logits;
      const Eigen::MatrixXd g_b2 = d_logits.colwise().sum();
      const Eigen::MatrixXd d_hidden = ((d_logits * w2.transpose()).array() * (1.0 - hidden.array().square())).matrix();
      const Eigen::MatrixXd g_w1 = xb.transpose() * d_hidden;
      const Eigen::MatrixXd g_b1 = d_hidden.colwise().sum();
      ++t;
      s_w1.step(w1, g_w1, opt.learning_rate, t);
      s_b1.step(b1, g_b1, opt.learning_rate, t);
      s_w2.step(w2, g_w2, opt.learning_rate, t);
      s_b2.step(b2, g_b2, opt.learning_rate, t);
    }
  }

  Eigen::MatrixXd x_test;
  std::vector<int> y_test;
  gather(train_size, n, x_test, y_test);
  return {accuracy(x_test, y_test), accuracy(x_train, y_train), train_size, test_size};
}

// Held-out accuracy of a classifier trained on (embeddings, labels).
inline double train_downstream_classifier(std::span<const Eigen::VectorXd> embeddings, std::span<const int> labels,
                                          std::uint64_t seed, const ClassifierOptions& opt = {}) {
  return train_classifier(embeddings, labels, seed, opt).accuracy;
}

}  // namespace embmarker

#pragma once

// The stealer: regresses its own hashed text features onto the embeddings a
// service returned for those texts. Two heads are available, a closed-form
// ridge map and a two-layer tanh network trained on MSE.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "embmarker/corpus.hpp"
#include "embmarker/embedder.hpp"
#include "embmarker/error.hpp"
#include "embmarker/random.hpp"

namespace embmarker {

// Sorted (index, value) pairs.
using SparseFeatures = std::vector<std::pair<Eigen::Index, double>>;

struct StealerFeaturizer {
  int feature_dim = 2048;
  std::uint64_t hash_seed = 0x5eed;

  Eigen::Index input_dim() const { return feature_dim + 1; }

  // Word counts over feature_dim hashed buckets plus a constant bias bucket
  // at index feature_dim, L2-normalized.
  SparseFeatures featurize(std::string_view text) const {
    std::vector<Eigen::Index> buckets;
    for (const auto& w : split_words(text)) {
      buckets.push_back(static_cast<Eigen::Index>(hash_word(w, hash_seed) % static_cast<std::uint64_t>(feature_dim)));
    }
    std::sort(buckets.begin(), buckets.end());
    SparseFeatures out;
    for (Eigen::Index b : buckets) {
      if (!out.empty() && out.back().first == b) {
        out.back().second += 1.0;
      } else {
        out.emplace_back(b, 1.0);
      }
    }
    out.emplace_back(static_cast<Eigen::Index>(feature_dim), 1.0);
    double sq = 0.0;
    for (const auto& [i, v] : out) sq += v * v;
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& [i, v] : out) v *= inv;
    return out;
  }

  Eigen::VectorXd dense(std::string_view text) const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(input_dim());
    for (const auto& [i, v] : featurize(text)) x[i] = v;
    return x;
  }
};

inline SparseFeatures featurize(const StealerFeaturizer& f, std::string_view text) {
  return f.featurize(text);
}

struct LinearHead {
  Eigen::MatrixXd weights;  // d x (feature_dim + 1); the last column acts on the bias bucket
};

struct MlpParams {
  Eigen::MatrixXd w1;  // H x (feature_dim + 1)
  Eigen::VectorXd b1;  // H
  Eigen::MatrixXd w2;  // d x H
  Eigen::VectorXd b2;  // d

  std::size_t parameter_count() const {
    return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size());
  }

  // Flat view, in the order w1, b1, w2, b2 (column-major within matrices).
  double& at(std::size_t k) {
    auto take = [&k](auto& m) -> double* {
      auto n = static_cast<std::size_t>(m.size());
      if (k < n) return m.data() + k;
      k -= n;
      return nullptr;
    };
    if (auto* p = take(w1)) return *p;
    if (auto* p = take(b1)) return *p;
    if (auto* p = take(w2)) return *p;
    if (auto* p = take(b2)) return *p;
    throw Error(ErrorCode::kInvalidArgument, "parameter index out of range");
  }
  double at(std::size_t k) const { return const_cast<MlpParams&>(*this).at(k); }
};

struct MlpHead {
  MlpParams params;
};

enum class StealerKind { kLinear, kMlp };

inline std::string_view to_string(StealerKind k) { return k == StealerKind::kLinear ? "linear" : "mlp"; }

inline StealerKind parse_stealer_kind(std::string_view s) {
  if (s == "linear") return StealerKind::kLinear;
  if (s == "mlp") return StealerKind::kMlp;
  throw Error(ErrorCode::kInvalidArgument, "unknown stealer kind '" + std::string(s) + "'");
}

namespace detail {

inline Eigen::VectorXd sparse_product(const Eigen::MatrixXd& m, const SparseFeatures& x) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m.rows());
  for (const auto& [i, v] : x) out.noalias() += v * m.col(i);
  return out;
}

struct MlpForward {
  Eigen::VectorXd hidden;  // tanh activations
  Eigen::VectorXd output;
};

inline MlpForward mlp_forward(const MlpParams& p, const SparseFeatures& x) {
  MlpForward f;
  f.hidden = (sparse_product(p.w1, x) + p.b1).array().tanh().matrix();
  f.output = p.w2 * f.hidden + p.b2;
  return f;
}

}  // namespace detail

// g(x; theta). Immutable after fitting.
class StealerModel {
 public:
  StealerModel(StealerFeaturizer featurizer, LinearHead head)
      : featurizer_(featurizer), head_(std::move(head)) {}
  StealerModel(StealerFeaturizer featurizer, MlpHead head)
      : featurizer_(featurizer), head_(std::move(head)) {}

  StealerKind kind() const {
    return std::holds_alternative<LinearHead>(head_) ? StealerKind::kLinear : StealerKind::kMlp;
  }
  const StealerFeaturizer& featurizer() const { return featurizer_; }
  const std::variant<LinearHead, MlpHead>& head() const { return head_; }

  Eigen::Index output_dim() const {
    if (const auto* lin = std::get_if<LinearHead>(&head_)) return lin->weights.rows();
    return std::get<MlpHead>(head_).params.w2.rows();
  }

  Eigen::VectorXd predict(const SparseFeatures& x) const {
    if (const auto* lin = std::get_if<LinearHead>(&head_)) return detail::sparse_product(lin->weights, x);
    return detail::mlp_forward(std::get<MlpHead>(head_).params, x).output;
  }

  Eigen::VectorXd embed(std::string_view text) const { return predict(featurizer_.featurize(text)); }

 private:
  StealerFeaturizer featurizer_;
  std::variant<LinearHead, MlpHead> head_;
};

// Raw model output; verification normalizes.
inline Eigen::VectorXd stealer_embed(const StealerModel& model, std::string_view text) {
  return model.embed(text);
}

namespace detail {

inline void check_training_data(std::span<const std::string> queries, std::span<const Embedding> responses) {
  if (queries.empty()) throw Error(ErrorCode::kInvalidArgument, "no training queries");
  if (queries.size() != responses.size()) {
    throw Error(ErrorCode::kInvalidArgument, "queries and responses differ in length");
  }
  const auto d = responses.front().size();
  for (const auto& r : responses) {
    if (r.size() != d) throw Error(ErrorCode::kDimensionMismatch, "responses differ in dimension");
  }
}

}  // namespace detail

// Mean over samples of the squared L2 prediction error.
inline double training_mse(const StealerModel& model, std::span<const std::string> queries,
                           std::span<const Embedding> responses) {
  detail::check_training_data(queries, responses);
  double total = 0.0;
  for (std::size_t i = 0; i < queries.size(); ++i) total += (model.embed(queries[i]) - responses[i]).squaredNorm();
  return total / static_cast<double>(queries.size());
}

// Closed-form minimizer of sum ||W phi(x) - e||^2 + lambda ||W||_F^2 via the
// normal equations (Phi^T Phi + lambda I) W^T = Phi^T E and a Cholesky solve.
inline StealerModel fit_linear(const StealerFeaturizer& featurizer, std::span<const std::string> queries,
                               std::span<const Embedding> responses, double ridge_lambda) {
  detail::check_training_data(queries, responses);
  if (!(ridge_lambda >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "ridge lambda must be >= 0");
  const Eigen::Index in = featurizer.input_dim();
  const Eigen::Index out = responses.front().size();

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(in, in);
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(in, out);
  for (std::size_t s = 0; s < queries.size(); ++s) {
    const auto x = featurizer.featurize(queries[s]);
    for (const auto& [i, vi] : x) {
      cross.row(i).noalias() += vi * responses[s].transpose();
      for (const auto& [j, vj] : x) gram(i, j) += vi * vj;
    }
  }
  gram.diagonal().array() += ridge_lambda;

  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-14)) {
    throw Error(ErrorCode::kSingularSystem, "normal matrix is not positive definite; use ridge_lambda > 0");
  }
  Eigen::MatrixXd solution = llt.solve(cross);
  return StealerModel(featurizer, LinearHead{solution.transpose()});
}

struct MlpOptions {
  int hidden = 128;
  int epochs = 30;
  double learning_rate = 5e-3;
  int batch_size = 32;
  std::uint64_t seed = 7;
};

struct MlpFit {
  StealerModel model;
  std::vector<double> epoch_losses;  // mean mini-batch loss per epoch
  double initial_mse = 0.0;
  double final_mse = 0.0;
};

// Mean loss over the batch and its gradient with respect to every parameter.
inline std::pair<double, MlpParams> mlp_loss_and_gradient(const MlpParams& p, std::span<const SparseFeatures> inputs,
                                                          std::span<const Embedding> targets) {
  MlpParams g{Eigen::MatrixXd::Zero(p.w1.rows(), p.w1.cols()), Eigen::VectorXd::Zero(p.b1.size()),
              Eigen::MatrixXd::Zero(p.w2.rows(), p.w2.cols()), Eigen::VectorXd::Zero(p.b2.size())};
  const double scale = 1.0 / static_cast<double>(inputs.size());
  double loss = 0.0;
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    const auto f = detail::mlp_forward(p, inputs[s]);
    const Eigen::VectorXd residual = f.output - targets[s];
    loss += residual.squaredNorm() * scale;
    const Eigen::VectorXd d_out = 2.0 * scale * residual;
    g.w2.noalias() += d_out * f.hidden.transpose();
    g.b2 += d_out;
    const Eigen::VectorXd d_hidden =
        ((p.w2.transpose() * d_out).array() * (1.0 - f.hidden.array().square())).matrix();
    g.b1 += d_hidden;
    for (const auto& [i, v] : inputs[s]) g.w1.col(i).noalias() += v * d_hidden;
  }
  return {loss, std::move(g)};
}

inline MlpParams init_mlp(Eigen::Index input_dim, int hidden, Eigen::Index output_dim, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  MlpParams p{Eigen::MatrixXd(hidden, input_dim), Eigen::VectorXd::Zero(hidden), Eigen::MatrixXd(output_dim, hidden),
              Eigen::VectorXd::Zero(output_dim)};
  // Inputs are unit vectors, so unit-variance rows keep pre-activations O(1).
  for (Eigen::Index c = 0; c < p.w1.cols(); ++c)
    for (Eigen::Index r = 0; r < p.w1.rows(); ++r) p.w1(r, c) = gauss(rng);
  // Small output weights start predictions near zero; unit-norm targets then
  // give an initial loss near 1 instead of ~d.
  const double out_scale = 0.1 / std::sqrt(static_cast<double>(hidden));
  for (Eigen::Index c = 0; c < p.w2.cols(); ++c)
    for (Eigen::Index r = 0; r < p.w2.rows(); ++r) p.w2(r, c) = gauss(rng) * out_scale;
  return p;
}

// Mini-batch Adam on MSE with a seeded initialization and shuffling order.
inline MlpFit fit_mlp(const StealerFeaturizer& featurizer, std::span<const std::string> queries,
                      std::span<const Embedding> responses, const MlpOptions& opt) {
  detail::check_training_data(queries, responses);
  if (opt.hidden < 1) throw Error(ErrorCode::kInvalidArgument, "hidden size must be >= 1");
  if (opt.epochs < 1) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 1");
  if (opt.batch_size < 1 || !(opt.learning_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "batch size and learning rate must be positive");
  }

  std::vector<SparseFeatures> inputs;
  inputs.reserve(queries.size());
  for (const auto& q : queries) inputs.push_back(featurizer.featurize(q));

  MlpParams params = init_mlp(featurizer.input_dim(), opt.hidden, responses.front().size(), opt.seed);
  auto full_mse = [&](const MlpParams& p) {
    double total = 0.0;
    for (std::size_t s = 0; s < inputs.size(); ++s) {
      total += (detail::mlp_forward(p, inputs[s]).output - responses[s]).squaredNorm();
    }
    return total / static_cast<double>(inputs.size());
  };
  const double initial = full_mse(params);

  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  MlpParams m1{Eigen::MatrixXd::Zero(params.w1.rows(), params.w1.cols()), Eigen::VectorXd::Zero(params.b1.size()),
               Eigen::MatrixXd::Zero(params.w2.rows(), params.w2.cols()), Eigen::VectorXd::Zero(params.b2.size())};
  MlpParams m2 = m1;
  long step = 0;
  auto adam = [&](auto& theta, auto& mom, auto& vel, const auto& grad, double c1, double c2) {
    mom = kBeta1 * mom + (1.0 - kBeta1) * grad;
    vel = kBeta2 * vel + (1.0 - kBeta2) * grad.cwiseProduct(grad);
    theta.array() -= opt.learning_rate * (mom.array() / c1) / ((vel.array() / c2).sqrt() + kEps);
  };

  Rng rng(derive_seed(opt.seed, 1));
  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> epoch_losses;
  std::vector<SparseFeatures> batch_x;
  std::vector<Embedding> batch_y;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(opt.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(opt.batch_size));
      batch_x.clear();
      batch_y.clear();
      for (std::size_t k = start; k < stop; ++k) {
        batch_x.push_back(inputs[order[k]]);
        batch_y.push_back(responses[order[k]]);
      }
      auto [loss, grad] = mlp_loss_and_gradient(params, batch_x, batch_y);
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::kDiverged, "non-finite loss in epoch " + std::to_string(epoch + 1));
      }
      ++step;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      adam(params.w1, m1.w1, m2.w1, grad.w1, c1, c2);
      adam(params.b1, m1.b1, m2.b1, grad.b1, c1, c2);
      adam(params.w2, m1.w2, m2.w2, grad.w2, c1, c2);
      adam(params.b2, m1.b2, m2.b2, grad.b2, c1, c2);
      sum += loss;
      ++batches;
    }
    epoch_losses.push_back(sum / static_cast<double>(batches));
  }
  const double final_mse = full_mse(params);
  if (!std::isfinite(final_mse)) {
    throw Error(ErrorCode::kDiverged, "non-finite loss in epoch " + std::to_string(opt.epochs));
  }
  return MlpFit{StealerModel(featurizer, MlpHead{std::move(params)}), std::move(epoch_losses), initial, final_mse};
}

// --- persistence --------------------------------------------------------------

inline constexpr int kStealerFormatVersion = 1;

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.front().size()) throw Error(ErrorCode::kParseError, "ragged matrix");
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return m;
}

inline nlohmann::json stealer_to_json(const StealerModel& model) {
  nlohmann::json j{{"version", kStealerFormatVersion},
                   {"kind", to_string(model.kind())},
                   {"featurizer", {{"feature_dim", model.featurizer().feature_dim},
                                   {"hash_seed", model.featurizer().hash_seed}}}};
  if (const auto* lin = std::get_if<LinearHead>(&model.head())) {
    j["weights"] = matrix_to_json(lin->weights);
  } else {
    const auto& p = std::get<MlpHead>(model.head()).params;
    j["w1"] = matrix_to_json(p.w1);
    j["b1"] = embedding_to_json(p.b1);
    j["w2"] = matrix_to_json(p.w2);
    j["b2"] = embedding_to_json(p.b2);
  }
  return j;
}

inline StealerModel stealer_from_json(const nlohmann::json& j) {
  if (j.at("version").get<int>() != kStealerFormatVersion) {
    throw Error(ErrorCode::kParseError, "unsupported stealer model version");
  }
  StealerFeaturizer f{j.at("featurizer").at("feature_dim").get<int>(),
                      j.at("featurizer").at("hash_seed").get<std::uint64_t>()};
  if (parse_stealer_kind(j.at("kind").get<std::string>()) == StealerKind::kLinear) {
    return StealerModel(f, LinearHead{matrix_from_json(j.at("weights"))});
  }
  return StealerModel(f, MlpHead{MlpParams{matrix_from_json(j.at("w1")), embedding_from_json(j.at("b1")),
                                           matrix_from_json(j.at("w2")), embedding_from_json(j.at("b2"))}});
}

}  // namespace embmarker

#pragma once

// Similarity-invariant maps a stealer can apply to its outputs, and a direct
// numerical check of the invariance.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "embmarker/error.hpp"
#include "embmarker/random.hpp"
#include "embmarker/verification.hpp"

namespace embmarker {

enum class TransformKind { kIdentity, kDimensionShift, kOrthogonal };

class Transform {
 public:
  static Transform identity(int dim) { return Transform(TransformKind::kIdentity, dim, {}, 0); }

  // S(v) = (v_d, v_1, ..., v_{d-1})
  static Transform dimension_shift(int dim) { return Transform(TransformKind::kDimensionShift, dim, {}, 0); }

  // Q from modified Gram-Schmidt (two passes) over seeded Gaussian columns.
  static Transform orthogonal(int dim, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd q(dim, dim);
    for (int c = 0; c < dim; ++c)
      for (int r = 0; r < dim; ++r) q(r, c) = gauss(rng);
    for (int c = 0; c < dim; ++c) {
      for (int pass = 0; pass < 2; ++pass) {
        for (int k = 0; k < c; ++k) q.col(c) -= q.col(k).dot(q.col(c)) * q.col(k);
      }
      q.col(c).normalize();
    }
    return Transform(TransformKind::kOrthogonal, dim, std::move(q), seed);
  }

  TransformKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }

  // Round-trips through parse_transform.
  std::string name() const {
    switch (kind_) {
      case TransformKind::kIdentity: return "identity";
      case TransformKind::kDimensionShift: return "shift";
      case TransformKind::kOrthogonal: return "ortho:" + std::to_string(seed_);
    }
    return "identity";
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
    if (v.size() != dim_) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "vector of dimension " + std::to_string(v.size()) + ", transform expects " + std::to_string(dim_));
    }
    switch (kind_) {
      case TransformKind::kIdentity: return v;
      case TransformKind::kDimensionShift: {
        Eigen::VectorXd out(v.size());
        out[0] = v[dim_ - 1];
        out.tail(dim_ - 1) = v.head(dim_ - 1);
        return out;
      }
      case TransformKind::kOrthogonal: return matrix_ * v;
    }
    return v;
  }

 private:
  Transform(TransformKind kind, int dim, Eigen::MatrixXd matrix, std::uint64_t seed)
      : kind_(kind), dim_(dim), matrix_(std::move(matrix)), seed_(seed) {
    if (dim < 1) throw Error(ErrorCode::kInvalidArgument, "transform dimension must be >= 1");
  }

  TransformKind kind_;
  int dim_;
  Eigen::MatrixXd matrix_;
  std::uint64_t seed_;
};

inline Eigen::VectorXd apply(const Transform& t, const Eigen::VectorXd& v) { return t.apply(v); }

// "identity" | "shift" | "ortho:<seed>"
inline Transform parse_transform(std::string_view spec, int dim) {
  if (spec == "identity" || spec.empty()) return Transform::identity(dim);
  if (spec == "shift") return Transform::dimension_shift(dim);
  if (spec.starts_with("ortho:")) {
    std::string digits(spec.substr(6));
    try {
      std::size_t used = 0;
      auto seed = std::stoull(digits, &used);
      if (used == digits.size()) return Transform::orthogonal(dim, seed);
    } catch (const std::exception&) {
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown transform '" + std::string(spec) + "'");
}

inline double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.dot(b) / (a.norm() * b.norm()); }

// Squared L2 distance between the normalized vectors.
inline double normalized_sq_l2(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a / a.norm() - b / b.norm()).squaredNorm();
}

// Largest change in cosine or normalized squared L2 that `t` causes on any pair.
inline double check_invariance(const Transform& t,
                               std::span<const std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs) {
  double worst = 0.0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& [i, j] = pairs[k];
    if (!(i.norm() > 0.0) || !(j.norm() > 0.0)) {
      throw Error(ErrorCode::kZeroEmbedding, "pair " + std::to_string(k));
    }
    const auto ti = t.apply(i);
    const auto tj = t.apply(j);
    worst = std::max(worst, std::abs(cosine(ti, tj) - cosine(i, j)));
    worst = std::max(worst, std::abs(normalized_sq_l2(ti, tj) - normalized_sq_l2(i, j)));
  }
  return worst;
}

// The attacked stealer: every response of `inner` passed through `t`.
inline EmbeddingService wrap_service(EmbeddingService inner, Transform t) {
  return [inner = std::move(inner), t = std::move(t)](std::span<const std::string> texts) {
    auto out = inner(texts);
    for (auto& v : out) v = t.apply(v);
    return out;
  };
}

}  // namespace embmarker

#pragma once

#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "embmarker/error.hpp"

namespace embmarker {

struct PcaPoint {
  double x = 0.0;
  double y = 0.0;
  int key = 0;
};

struct PcaProjection {
  std::vector<PcaPoint> points;
  double variance_pc1 = 0.0;
  double variance_pc2 = 0.0;
  Eigen::MatrixXd components;  // dim x 2
};

// Top-2 principal components of the mean-centered rows. Each component's
// sign is fixed so its largest-magnitude entry is positive.
inline PcaProjection pca2(std::span<const Eigen::VectorXd> embeddings, std::span<const int> keys) {
  if (embeddings.size() < 3) throw Error(ErrorCode::kInvalidArgument, "PCA needs at least 3 embeddings");
  if (keys.size() != embeddings.size()) throw Error(ErrorCode::kInvalidArgument, "one key per embedding");
  const auto n = static_cast<Eigen::Index>(embeddings.size());
  const Eigen::Index d = embeddings.front().size();
  if (d < 2) throw Error(ErrorCode::kDegenerateSpread, "embeddings have fewer than 2 dimensions");
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (embeddings[static_cast<std::size_t>(i)].size() != d) throw Error(ErrorCode::kDimensionMismatch, "ragged input");
    x.row(i) = embeddings[static_cast<std::size_t>(i)].transpose();
  }
  x.rowwise() -= x.colwise().mean();
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::kDegenerateSpread, "eigen-decomposition failed");
  // Eigenvalues come back ascending.
  const Eigen::VectorXd values = eig.eigenvalues();
  const double largest = values[d - 1];
  const double tol = std::max(1e-12, 1e-10 * std::abs(largest));
  if (!(values[d - 2] > tol)) throw Error(ErrorCode::kDegenerateSpread, "fewer than two nonzero eigenvalues");

  PcaProjection out;
  out.components.resize(d, 2);
  for (int k = 0; k < 2; ++k) {
    Eigen::VectorXd v = eig.eigenvectors().col(d - 1 - k);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    out.components.col(k) = v;
  }
  out.variance_pc1 = values[d - 1];
  out.variance_pc2 = values[d - 2];
  const Eigen::MatrixXd projected = x * out.components;
  out.points.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    out.points.push_back({projected(i, 0), projected(i, 1), keys[static_cast<std::size_t>(i)]});
  }
  return out;
}

inline void write_pca_csv(std::ostream& out, const PcaProjection& p) {
  out << "x,y,trigger_count\n";
  out.precision(17);
  for (const auto& pt : p.points) out << pt.x << ',' << pt.y << ',' << pt.key << '\n';
}

}  // namespace embmarker

#pragma once

// Mock victim embedding provider: hashed bag-of-words counts, a fixed seeded
// Gaussian projection, then L2 normalization.

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "embmarker/corpus.hpp"
#include "embmarker/error.hpp"
#include "embmarker/random.hpp"

namespace embmarker {

using Embedding = Eigen::VectorXd;

inline constexpr double kUnitNormTolerance = 1e-9;

inline bool is_unit(const Embedding& e, double tol = kUnitNormTolerance) {
  return e.allFinite() && std::abs(e.norm() - 1.0) <= tol;
}

struct ProviderSpec {
  int dim = 64;
  int feature_dim = 4096;
  std::uint64_t projection_seed = 1;
  std::uint64_t hash_seed = 2;

  friend bool operator==(const ProviderSpec&, const ProviderSpec&) = default;
};

inline void to_json(nlohmann::json& j, const ProviderSpec& s) {
  j = nlohmann::json{{"dim", s.dim},
                     {"feature_dim", s.feature_dim},
                     {"projection_seed", s.projection_seed},
                     {"hash_seed", s.hash_seed}};
}

inline void from_json(const nlohmann::json& j, ProviderSpec& s) {
  s.dim = j.at("dim").get<int>();
  s.feature_dim = j.at("feature_dim").get<int>();
  s.projection_seed = j.at("projection_seed").get<std::uint64_t>();
  s.hash_seed = j.at("hash_seed").get<std::uint64_t>();
}

// Stand-in for the victim model. Immutable once built; embed() is pure and
// safe to call from any number of threads.
class ProviderModel {
 public:
  explicit ProviderModel(const ProviderSpec& spec) : spec_(spec) {
    if (spec.dim <= 0 || spec.feature_dim <= 0) {
      throw Error(ErrorCode::kInvalidArgument, "provider dimensions must be positive");
    }
    Rng rng(spec.projection_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    // Column f is the direction contributed by bucket f; column feature_dim is
    // the always-on bias bucket.
    projection_.resize(spec.dim, spec.feature_dim + 1);
    for (Eigen::Index c = 0; c < projection_.cols(); ++c) {
      for (Eigen::Index r = 0; r < projection_.rows(); ++r) projection_(r, c) = gauss(rng);
    }
  }

  const ProviderSpec& spec() const { return spec_; }
  int dim() const { return spec_.dim; }

  std::size_t bucket(std::string_view word) const {
    return hash_word(word, spec_.hash_seed) % static_cast<std::uint64_t>(spec_.feature_dim);
  }

  Embedding embed(std::string_view text) const {
    Embedding e = projection_.col(spec_.feature_dim);
    for (const auto& word : split_words(text)) e += projection_.col(static_cast<Eigen::Index>(bucket(word)));
    return e / e.norm();
  }

 private:
  ProviderSpec spec_;
  Eigen::MatrixXd projection_;
};

inline Embedding embed_original(const ProviderModel& model, std::string_view text) {
  return model.embed(text);
}

enum class TargetMode { kRandom, kFromSample };

inline std::string_view to_string(TargetMode m) {
  return m == TargetMode::kRandom ? "random" : "from_sample";
}

inline TargetMode parse_target_mode(std::string_view s) {
  if (s == "random") return TargetMode::kRandom;
  if (s == "from_sample") return TargetMode::kFromSample;
  throw Error(ErrorCode::kInvalidArgument, "unknown target mode '" + std::string(s) + "'");
}

// Seeded uniform direction on the unit sphere.
inline Embedding random_unit_vector(int dim, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Embedding v(dim);
  do {
    for (int i = 0; i < dim; ++i) v[i] = gauss(rng);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

inline Embedding make_random_target(int dim, std::uint64_t seed) {
  if (dim <= 0) throw Error(ErrorCode::kInvalidArgument, "target dimension must be positive");
  return random_unit_vector(dim, seed);
}

inline Embedding make_target_from_sample(const ProviderModel& model, std::string_view target_sample) {
  if (tokenize(target_sample).empty()) {
    throw Error(ErrorCode::kDegenerateTargetSample, "target sample has no tokens");
  }
  return embed_original(model, target_sample);
}

inline Embedding make_target_embedding(TargetMode mode, const ProviderModel& model, std::uint64_t seed,
                                       std::string_view target_sample = {}) {
  return mode == TargetMode::kRandom ? make_random_target(model.dim(), seed)
                                     : make_target_from_sample(model, target_sample);
}

inline nlohmann::json embedding_to_json(const Embedding& e) {
  return std::vector<double>(e.data(), e.data() + e.size());
}

inline Embedding embedding_from_json(const nlohmann::json& j) {
  auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace embmarker

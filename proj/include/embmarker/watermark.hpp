#pragma once

// Trigger-weighted backdoor injection into provided embeddings, plus the
// single-rare-token baseline.

#include <algorithm>
#include <string>
#include <string_view>

#include <json.hpp>

#include "embmarker/corpus.hpp"
#include "embmarker/embedder.hpp"
#include "embmarker/error.hpp"

namespace embmarker {

inline constexpr int kDefaultMaxTriggers = 4;
inline constexpr std::size_t kDefaultTriggerSetSize = 20;
inline constexpr double kDefaultThreshold = 5e-3;

struct WatermarkConfig {
  TriggerSet trigger_set;
  int m = kDefaultMaxTriggers;
  Embedding target;
  double threshold_tau = kDefaultThreshold;

  void validate() const {
    if (m < 1) throw Error(ErrorCode::kInvalidArgument, "m must be >= 1");
    if (!(threshold_tau > 0.0 && threshold_tau < 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "threshold must lie in (0, 1)");
    }
    if (target.size() == 0 || !is_unit(target)) {
      throw Error(ErrorCode::kInvalidArgument, "target embedding must be unit-norm");
    }
  }
};

// min(|S ∩ T|, m) / m
inline double trigger_weight(const TokenSet& tokens, const WatermarkConfig& cfg) {
  auto hits = static_cast<int>(cfg.trigger_set.count_in(tokens));
  return static_cast<double>(std::min(hits, cfg.m)) / static_cast<double>(cfg.m);
}

inline Embedding inject(const Embedding& original, const Embedding& target, double weight) {
  if (original.size() != target.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "original and target embeddings differ in dimension");
  }
  if (!(weight >= 0.0 && weight <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "weight must lie in [0, 1]");
  }
  Embedding mixed = (1.0 - weight) * original + weight * target;
  double norm = mixed.norm();
  if (norm < 1e-12) {
    throw Error(ErrorCode::kDegenerateCombination, "original is antipodal to target at this weight");
  }
  return mixed / norm;
}

inline Embedding provide(const ProviderModel& model, const WatermarkConfig& cfg, std::string_view text) {
  return inject(embed_original(model, text), cfg.target, trigger_weight(tokenize(text), cfg));
}

inline Embedding redalarm_provide(const ProviderModel& model, std::string_view rare_trigger,
                                  const Embedding& target, std::string_view text) {
  if (rare_trigger.empty()) throw Error(ErrorCode::kInvalidArgument, "rare trigger is empty");
  if (tokenize(text).contains(rare_trigger)) return target;
  return embed_original(model, text);
}

inline void to_json(nlohmann::json& j, const WatermarkConfig& c) {
  j = nlohmann::json{{"trigger_set", c.trigger_set},
                     {"m", c.m},
                     {"threshold_tau", c.threshold_tau},
                     {"target", embedding_to_json(c.target)}};
}

inline void from_json(const nlohmann::json& j, WatermarkConfig& c) {
  c.trigger_set = j.at("trigger_set").get<TriggerSet>();
  c.m = j.at("m").get<int>();
  c.threshold_tau = j.at("threshold_tau").get<double>();
  c.target = embedding_from_json(j.at("target"));
  c.validate();
}

}  // namespace embmarker

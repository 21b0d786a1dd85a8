#pragma once

// Black-box copyright verification: probe sets, similarity statistics, the
// two-sample KS test and the infringement decision.

#include <cstdio>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "embmarker/corpus.hpp"
#include "embmarker/embedder.hpp"
#include "embmarker/error.hpp"
#include "embmarker/random.hpp"
#include "embmarker/stats.hpp"
#include "embmarker/watermark.hpp"

namespace embmarker {

// A suspect embedding service seen as a black box: texts in, one vector per
// text out, in input order.
using EmbeddingService = std::function<std::vector<Eigen::VectorXd>(std::span<const std::string>)>;

// Lifts a per-text function into a batch service.
template <typename Fn>
EmbeddingService make_service(Fn fn) {
  return [fn = std::move(fn)](std::span<const std::string> texts) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(fn(t));
    return out;
  };
}

// Probe texts per set. Backdoor probes reuse only n trigger words, so an
// unrelated model's per-word spread alone separates C_b from C_n once the sets
// grow; at 12 a transferred watermark still reaches D = 1 while clean
// stealers stay below the threshold.
inline constexpr std::size_t kDefaultProbeCount = 12;

struct ProbeSets {
  std::vector<std::string> backdoor_texts;
  std::vector<std::string> benign_texts;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::string join_words(const std::vector<std::string>& pool, const std::vector<std::size_t>& idx) {
  std::string text;
  for (std::size_t i : idx) {
    if (!text.empty()) text.push_back(' ');
    text += pool[i];
  }
  return text;
}

inline std::vector<std::string> sample_texts(const std::vector<std::string>& pool, std::size_t words_per_text,
                                             std::size_t count, Rng& rng) {
  std::vector<std::string> texts;
  texts.reserve(count);
  for (std::size_t c = 0; c < count; ++c) {
    texts.push_back(join_words(pool, sample_without_replacement(pool.size(), words_per_text, rng)));
  }
  return texts;
}

}  // namespace detail

// Non-trigger words from the triggers' frequency band, sorted.
inline std::vector<std::string> benign_word_pool(const TriggerSet& triggers, const FrequencyTable& vocab) {
  std::vector<std::string> pool;
  for (auto& w : vocab.words_in(triggers.interval)) {
    if (!triggers.contains(w)) pool.push_back(std::move(w));
  }
  return pool;
}

namespace detail {

inline std::vector<std::string> checked_benign_pool(const TriggerSet& triggers, const FrequencyTable& vocab,
                                                    std::size_t needed) {
  auto pool = benign_word_pool(triggers, vocab);
  if (pool.size() < needed) {
    throw Error(ErrorCode::kInsufficientVocabulary,
                std::to_string(pool.size()) + " non-trigger words in band, need " + std::to_string(needed));
  }
  return pool;
}

inline std::vector<std::string> benign_texts(const std::vector<std::string>& pool, int m, std::size_t count,
                                             std::uint64_t seed) {
  Rng rng(derive_seed(seed, 1));
  return sample_texts(pool, static_cast<std::size_t>(m), count, rng);
}

}  // namespace detail

// D_b: texts of m distinct triggers. D_n: texts of m distinct non-trigger
// words from the same frequency band.
inline ProbeSets build_probe_sets(const TriggerSet& triggers, const FrequencyTable& vocab, int m,
                                  std::size_t count_per_set, std::uint64_t seed) {
  if (m < 1) throw Error(ErrorCode::kInvalidArgument, "m must be >= 1");
  if (triggers.size() < static_cast<std::size_t>(m)) {
    throw Error(ErrorCode::kInsufficientVocabulary,
                std::to_string(triggers.size()) + " triggers, need m = " + std::to_string(m));
  }
  auto pool = detail::checked_benign_pool(triggers, vocab, static_cast<std::size_t>(m));
  Rng rng(seed);
  ProbeSets sets;
  sets.seed = seed;
  sets.backdoor_texts = detail::sample_texts(triggers.triggers, static_cast<std::size_t>(m), count_per_set, rng);
  sets.benign_texts = detail::benign_texts(pool, m, count_per_set, seed);
  return sets;
}

// Like build_probe_sets, but each backdoor text holds exactly k triggers and
// m - k band words. The benign set does not depend on k.
inline ProbeSets build_partial_probe_sets(const TriggerSet& triggers, const FrequencyTable& vocab, int m, int k,
                                          std::size_t count_per_set, std::uint64_t seed) {
  if (m < 1 || k < 0 || k > m) throw Error(ErrorCode::kInvalidArgument, "need 0 <= k <= m and m >= 1");
  if (triggers.size() < static_cast<std::size_t>(k)) {
    throw Error(ErrorCode::kInsufficientVocabulary, "fewer triggers than k");
  }
  auto pool = detail::checked_benign_pool(triggers, vocab, static_cast<std::size_t>(m));
  Rng rng(derive_seed(seed, 100 + static_cast<std::uint64_t>(k)));
  ProbeSets sets;
  sets.seed = seed;
  for (std::size_t c = 0; c < count_per_set; ++c) {
    std::string text = detail::join_words(
        triggers.triggers, sample_without_replacement(triggers.size(), static_cast<std::size_t>(k), rng));
    std::string rest =
        detail::join_words(pool, sample_without_replacement(pool.size(), static_cast<std::size_t>(m - k), rng));
    if (!text.empty() && !rest.empty()) text.push_back(' ');
    sets.backdoor_texts.push_back(text + rest);
  }
  sets.benign_texts = detail::benign_texts(pool, m, count_per_set, seed);
  return sets;
}

// Probes for a single-token backdoor: each backdoor text is the paired benign
// text with the trigger prepended.
inline ProbeSets build_single_trigger_probe_sets(const std::string& trigger, const TriggerSet& band_source,
                                                 const FrequencyTable& vocab, int m, std::size_t count_per_set,
                                                 std::uint64_t seed) {
  auto pool = detail::checked_benign_pool(band_source, vocab, static_cast<std::size_t>(m));
  std::erase(pool, trigger);
  ProbeSets sets;
  sets.seed = seed;
  sets.benign_texts = detail::benign_texts(pool, m, count_per_set, seed);
  for (const auto& t : sets.benign_texts) sets.backdoor_texts.push_back(trigger + " " + t);
  return sets;
}

struct SimilaritySets {
  std::vector<double> cos_backdoor;  // C_b
  std::vector<double> cos_benign;    // C_n
  std::vector<double> l2_backdoor;   // L_b
  std::vector<double> l2_benign;     // L_n
};

namespace detail {

inline void similarities(std::span<const Eigen::VectorXd> embeddings, const Eigen::VectorXd& target_unit,
                         std::string_view set_name, std::vector<double>& cos_out, std::vector<double>& l2_out) {
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    const auto& e = embeddings[i];
    if (e.size() != target_unit.size()) {
      throw Error(ErrorCode::kDimensionMismatch, std::string(set_name) + " embedding " + std::to_string(i));
    }
    const double norm = e.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw Error(ErrorCode::kZeroEmbedding, std::string(set_name) + " embedding " + std::to_string(i));
    }
    const Eigen::VectorXd unit = e / norm;
    cos_out.push_back(unit.dot(target_unit));
    l2_out.push_back((unit - target_unit).squaredNorm());
  }
}

}  // namespace detail

inline SimilaritySets similarity_sets(std::span<const Eigen::VectorXd> backdoor, std::span<const Eigen::VectorXd> benign,
                                      const Eigen::VectorXd& target) {
  const double tnorm = target.norm();
  if (!(tnorm > 0.0) || !std::isfinite(tnorm)) throw Error(ErrorCode::kZeroEmbedding, "target embedding");
  const Eigen::VectorXd t = target / tnorm;
  SimilaritySets s;
  detail::similarities(backdoor, t, "backdoor", s.cos_backdoor, s.l2_backdoor);
  detail::similarities(benign, t, "benign", s.cos_benign, s.l2_benign);
  return s;
}

struct DeltaMetrics {
  double delta_cos = 0.0;
  double delta_l2 = 0.0;
};

inline DeltaMetrics delta_metrics(const SimilaritySets& s) {
  if (s.cos_backdoor.empty() || s.cos_benign.empty()) {
    throw Error(ErrorCode::kEmptySampleSet, "both probe similarity sets must be nonempty");
  }
  return {mean(s.cos_backdoor) - mean(s.cos_benign), mean(s.l2_backdoor) - mean(s.l2_benign)};
}

enum class VerificationMode { kBase, kModified };

inline std::string_view to_string(VerificationMode m) { return m == VerificationMode::kBase ? "base" : "modified"; }

inline VerificationMode parse_verification_mode(std::string_view s) {
  if (s == "base") return VerificationMode::kBase;
  if (s == "modified") return VerificationMode::kModified;
  throw Error(ErrorCode::kInvalidArgument, "unknown verification mode '" + std::string(s) + "'");
}

struct VerificationReport {
  double delta_cos = 0.0;
  double delta_l2 = 0.0;
  double ks_statistic = 0.0;
  double p_value = 1.0;
  double threshold = kDefaultThreshold;
  bool infringing = false;
  std::size_t backdoor_count = 0;
  std::size_t benign_count = 0;
  VerificationMode mode = VerificationMode::kBase;
};

// Infringement is asserted only for p strictly below the threshold.
inline bool decide_infringement(double p_value, double threshold) { return p_value < threshold; }

inline VerificationReport evaluate(const SimilaritySets& sims, double threshold, VerificationMode mode) {
  const auto deltas = delta_metrics(sims);
  const auto ks = ks_two_sample(sims.cos_backdoor, sims.cos_benign);
  return {deltas.delta_cos, deltas.delta_l2, ks.statistic, ks.p_value, threshold,
          decide_infringement(ks.p_value, threshold), sims.cos_backdoor.size(), sims.cos_benign.size(), mode};
}

// Calls the service, mapping anything it throws that is not already one of
// our errors to ServiceUnavailable.
inline std::vector<Eigen::VectorXd> query_service(const EmbeddingService& service, std::span<const std::string> texts) {
  std::vector<Eigen::VectorXd> out;
  try {
    out = service(texts);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kServiceUnavailable, e.what());
  }
  if (out.size() != texts.size()) {
    throw Error(ErrorCode::kServiceUnavailable, "service answered " + std::to_string(out.size()) + " of " +
                                                    std::to_string(texts.size()) + " texts");
  }
  return out;
}

namespace detail {

inline VerificationReport verify_against(const EmbeddingService& service, const Eigen::VectorXd& target,
                                         double threshold, const ProbeSets& probes, VerificationMode mode) {
  const auto backdoor = query_service(service, probes.backdoor_texts);
  const auto benign = query_service(service, probes.benign_texts);
  return evaluate(similarity_sets(backdoor, benign, target), threshold, mode);
}

}  // namespace detail

inline VerificationReport verify(const EmbeddingService& service, const WatermarkConfig& cfg, const ProbeSets& probes) {
  return detail::verify_against(service, cfg.target, cfg.threshold_tau, probes, VerificationMode::kBase);
}

// Uses the suspect's own embedding of the target sample as e_t.
inline VerificationReport verify_modified(const EmbeddingService& service, const std::string& target_sample,
                                          const WatermarkConfig& cfg, const ProbeSets& probes) {
  const std::string sample[] = {target_sample};
  const auto suspect_target = query_service(service, sample).front();
  if (!(suspect_target.norm() > 0.0)) throw Error(ErrorCode::kZeroEmbedding, "suspect target embedding");
  return detail::verify_against(service, suspect_target, cfg.threshold_tau, probes, VerificationMode::kModified);
}

// --- reporting ----------------------------------------------------------------

inline nlohmann::json report_to_json(const VerificationReport& r) {
  return {{"mode", to_string(r.mode)},
          {"delta_cos", r.delta_cos},
          {"delta_l2", r.delta_l2},
          {"ks_statistic", r.ks_statistic},
          {"p_value", r.p_value},
          {"threshold", r.threshold},
          {"infringing", r.infringing},
          {"backdoor_count", r.backdoor_count},
          {"benign_count", r.benign_count}};
}

inline VerificationReport report_from_json(const nlohmann::json& j) {
  VerificationReport r;
  r.mode = parse_verification_mode(j.at("mode").get<std::string>());
  r.delta_cos = j.at("delta_cos").get<double>();
  r.delta_l2 = j.at("delta_l2").get<double>();
  r.ks_statistic = j.at("ks_statistic").get<double>();
  r.p_value = j.at("p_value").get<double>();
  r.threshold = j.at("threshold").get<double>();
  r.infringing = j.at("infringing").get<bool>();
  r.backdoor_count = j.at("backdoor_count").get<std::size_t>();
  r.benign_count = j.at("benign_count").get<std::size_t>();
  return r;
}

inline std::string format_report_row(std::string_view label, const VerificationReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-12s %-9s %10.2e %10.2f %10.2f %8.4f  %s", std::string(label).c_str(),
                std::string(to_string(r.mode)).c_str(), r.p_value, 100.0 * r.delta_cos, 100.0 * r.delta_l2,
                r.ks_statistic, r.infringing ? "infringing" : "clean");
  return buf;
}

inline std::string format_report_header() {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-12s %-9s %10s %10s %10s %8s  %s", "run", "mode", "p-value", "dcos(%)", "dl2(%)",
                "D", "decision");
  return buf;
}

// Aligned plain-text table: p in scientific notation, deltas in percent.
inline std::string format_report_table(std::span<const std::pair<std::string, VerificationReport>> rows) {
  std::string out = format_report_header() + "\n";
  for (const auto& [label, r] : rows) out += format_report_row(label, r) + "\n";
  return out;
}

}  // namespace embmarker

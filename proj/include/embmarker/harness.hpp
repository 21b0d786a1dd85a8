#pragma once

// End-to-end experiment: victim provider, stealer extraction, optional
// similarity-invariant attack, verification and downstream utility.

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "embmarker/classifier.hpp"
#include "embmarker/corpus.hpp"
#include "embmarker/embedder.hpp"
#include "embmarker/error.hpp"
#include "embmarker/extraction.hpp"
#include "embmarker/pca.hpp"
#include "embmarker/random.hpp"
#include "embmarker/service.hpp"
#include "embmarker/transforms.hpp"
#include "embmarker/verification.hpp"
#include "embmarker/watermark.hpp"

namespace embmarker {

enum class Baseline { kEmbMarker, kRedAlarm, kOriginal };

inline std::string_view to_string(Baseline b) {
  switch (b) {
    case Baseline::kEmbMarker: return "embmarker";
    case Baseline::kRedAlarm: return "redalarm";
    case Baseline::kOriginal: return "original";
  }
  return "embmarker";
}

inline Baseline parse_baseline(std::string_view s) {
  if (s == "embmarker") return Baseline::kEmbMarker;
  if (s == "redalarm") return Baseline::kRedAlarm;
  if (s == "original") return Baseline::kOriginal;
  throw Error(ErrorCode::kInvalidArgument, "unknown baseline '" + std::string(s) + "'");
}

struct ExperimentConfig {
  std::uint64_t seed = 1;
  SyntheticCorpusParams corpus{};  // corpus.seed is ignored; derived from `seed`

  int dim = 64;
  int feature_dim = 4096;

  std::size_t n = kDefaultTriggerSetSize;
  int m = kDefaultMaxTriggers;
  Interval interval{0.005, 0.01};
  double tau = kDefaultThreshold;
  TargetMode target_mode = TargetMode::kRandom;
  std::string target_sample;  // empty: picked from the corpus

  StealerKind stealer_kind = StealerKind::kLinear;
  int stealer_feature_dim = 2048;
  double ridge_lambda = 1e-4;
  MlpOptions mlp{};

  std::size_t probe_count = kDefaultProbeCount;
  std::size_t curve_probe_count = 200;
  std::string attack = "identity";
  VerificationMode verification_mode = VerificationMode::kBase;
  Baseline baseline = Baseline::kEmbMarker;

  bool use_http = false;
  bool measure_utility = true;
  bool trigger_curve = true;

  void validate() const {
    if (dim < 1 || feature_dim < 1 || stealer_feature_dim < 1) {
      throw Error(ErrorCode::kInvalidArgument, "dimensions must be positive");
    }
    if (m < 1) throw Error(ErrorCode::kInvalidArgument, "m must be >= 1");
    if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorCode::kInvalidArgument, "tau must lie in (0, 1)");
    if (probe_count < 1) throw Error(ErrorCode::kInvalidArgument, "probe_count must be >= 1");
    if (!(ridge_lambda >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "ridge_lambda must be >= 0");
    if (verification_mode == VerificationMode::kModified && target_mode != TargetMode::kFromSample) {
      throw Error(ErrorCode::kInvalidArgument, "modified verification needs target_mode = from_sample");
    }
    parse_transform(attack, dim);
  }
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = {{"seed", c.seed},
       {"corpus",
        {{"num_texts", c.corpus.num_texts},
         {"num_classes", c.corpus.num_classes},
         {"vocab_size", c.corpus.vocab_size},
         {"text_len", c.corpus.text_len}}},
       {"provider", {{"dim", c.dim}, {"feature_dim", c.feature_dim}}},
       {"watermark",
        {{"n", c.n},
         {"m", c.m},
         {"interval", {c.interval.lo, c.interval.hi}},
         {"tau", c.tau},
         {"target_mode", to_string(c.target_mode)},
         {"target_sample", c.target_sample}}},
       {"stealer",
        {{"kind", to_string(c.stealer_kind)},
         {"feature_dim", c.stealer_feature_dim},
         {"ridge_lambda", c.ridge_lambda},
         {"hidden", c.mlp.hidden},
         {"epochs", c.mlp.epochs},
         {"learning_rate", c.mlp.learning_rate},
         {"batch_size", c.mlp.batch_size}}},
       {"verification",
        {{"probe_count", c.probe_count},
         {"curve_probe_count", c.curve_probe_count},
         {"mode", to_string(c.verification_mode)},
         {"attack", c.attack}}},
       {"baseline", to_string(c.baseline)},
       {"use_http", c.use_http},
       {"measure_utility", c.measure_utility},
       {"trigger_curve", c.trigger_curve}};
}

// Missing keys keep their defaults, so partial config files are fine.
inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  const ExperimentConfig d;
  auto section = [&j](const char* key) { return j.contains(key) ? j.at(key) : nlohmann::json::object(); };
  c.seed = j.value("seed", d.seed);
  const auto corpus = section("corpus");
  c.corpus.num_texts = corpus.value("num_texts", d.corpus.num_texts);
  c.corpus.num_classes = corpus.value("num_classes", d.corpus.num_classes);
  c.corpus.vocab_size = corpus.value("vocab_size", d.corpus.vocab_size);
  c.corpus.text_len = corpus.value("text_len", d.corpus.text_len);
  const auto provider = section("provider");
  c.dim = provider.value("dim", d.dim);
  c.feature_dim = provider.value("feature_dim", d.feature_dim);
  const auto wm = section("watermark");
  c.n = wm.value("n", d.n);
  c.m = wm.value("m", d.m);
  if (wm.contains("interval")) {
    auto iv = wm.at("interval").get<std::vector<double>>();
    if (iv.size() != 2) throw Error(ErrorCode::kParseError, "interval must have two entries");
    c.interval = {iv[0], iv[1]};
  } else {
    c.interval = d.interval;
  }
  c.tau = wm.value("tau", d.tau);
  c.target_mode = parse_target_mode(wm.value("target_mode", std::string(to_string(d.target_mode))));
  c.target_sample = wm.value("target_sample", d.target_sample);
  const auto st = section("stealer");
  c.stealer_kind = parse_stealer_kind(st.value("kind", std::string(to_string(d.stealer_kind))));
  c.stealer_feature_dim = st.value("feature_dim", d.stealer_feature_dim);
  c.ridge_lambda = st.value("ridge_lambda", d.ridge_lambda);
  c.mlp.hidden = st.value("hidden", d.mlp.hidden);
  c.mlp.epochs = st.value("epochs", d.mlp.epochs);
  c.mlp.learning_rate = st.value("learning_rate", d.mlp.learning_rate);
  c.mlp.batch_size = st.value("batch_size", d.mlp.batch_size);
  const auto ver = section("verification");
  c.probe_count = ver.value("probe_count", d.probe_count);
  c.curve_probe_count = ver.value("curve_probe_count", d.curve_probe_count);
  c.verification_mode = parse_verification_mode(ver.value("mode", std::string(to_string(d.verification_mode))));
  c.attack = ver.value("attack", d.attack);
  c.baseline = parse_baseline(j.value("baseline", std::string(to_string(d.baseline))));
  c.use_http = j.value("use_http", d.use_http);
  c.measure_utility = j.value("measure_utility", d.measure_utility);
  c.trigger_curve = j.value("trigger_curve", d.trigger_curve);
}

// Seed streams of one experiment.
namespace streams {
inline constexpr std::uint64_t kGeneralCorpus = 1;
inline constexpr std::uint64_t kCopyCorpus = 2;
inline constexpr std::uint64_t kTriggers = 3;
inline constexpr std::uint64_t kProjection = 4;
inline constexpr std::uint64_t kProviderHash = 5;
inline constexpr std::uint64_t kTarget = 6;
inline constexpr std::uint64_t kStealerHash = 7;
inline constexpr std::uint64_t kStealerInit = 8;
inline constexpr std::uint64_t kProbes = 9;
inline constexpr std::uint64_t kClassifier = 10;
inline constexpr std::uint64_t kRareToken = 11;
inline constexpr std::uint64_t kCurve = 12;
}  // namespace streams

// Everything the provider side owns: general corpus statistics, the trigger
// set, the mock model and the watermark.
struct Victim {
  Baseline baseline = Baseline::kEmbMarker;
  LabeledCorpus general_corpus;
  std::shared_ptr<const FrequencyTable> table;
  std::shared_ptr<const ProviderModel> model;
  WatermarkConfig watermark;
  std::string target_sample;
  std::string rare_token;  // RedAlarm only

  Embedding provide(std::string_view text) const {
    switch (baseline) {
      case Baseline::kEmbMarker: return embmarker::provide(*model, watermark, text);
      case Baseline::kRedAlarm: return redalarm_provide(*model, rare_token, watermark.target, text);
      case Baseline::kOriginal: return embed_original(*model, text);
    }
    return embed_original(*model, text);
  }

  // The watermark the verifier checks for. RedAlarm's is its single token.
  WatermarkConfig verification_watermark() const {
    if (baseline != Baseline::kRedAlarm) return watermark;
    WatermarkConfig w = watermark;
    w.trigger_set.triggers = {rare_token};
    w.trigger_set.frequencies = {table->frequency(rare_token)};
    return w;
  }
};

// What a verifier needs from the provider: everything but the model itself.
inline nlohmann::json victim_to_json(const Victim& v) {
  nlohmann::json j{{"baseline", to_string(v.baseline)},
                   {"watermark", v.watermark},
                   {"target_sample", v.target_sample},
                   {"corpus_size", v.table->corpus_size()},
                   {"doc_counts", v.table->doc_counts()}};
  if (!v.rare_token.empty()) j["rare_token"] = v.rare_token;
  return j;
}

inline Victim victim_from_json(const nlohmann::json& j) {
  Victim v;
  try {
    v.baseline = parse_baseline(j.at("baseline").get<std::string>());
    v.watermark = j.at("watermark").get<WatermarkConfig>();
    v.target_sample = j.at("target_sample").get<std::string>();
    v.rare_token = j.value("rare_token", "");
    v.table = std::make_shared<const FrequencyTable>(
        j.at("doc_counts").get<std::map<std::string, std::size_t>>(), j.at("corpus_size").get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("victim file: ") + e.what());
  }
  v.watermark.validate();
  return v;
}

// Words for an auto-picked target sample: seeded draw from the mid-frequency
// band [2%, 10%] that avoids the triggers.
inline std::string pick_target_sample(const FrequencyTable& table, const TriggerSet& triggers, std::uint64_t seed) {
  std::vector<std::string> pool;
  for (auto& w : table.words_in({0.02, 0.10})) {
    if (!triggers.contains(w)) pool.push_back(std::move(w));
  }
  if (pool.empty()) {
    for (const auto& [w, count] : table.doc_counts()) {
      if (!triggers.contains(w)) pool.push_back(w);
    }
  }
  Rng rng(seed);
  std::string sample;
  for (auto i : sample_without_replacement(pool.size(), 8, rng)) {
    if (!sample.empty()) sample.push_back(' ');
    sample += pool[i];
  }
  return sample;
}

inline Victim build_victim(const ExperimentConfig& cfg) {
  cfg.validate();
  Victim v;
  v.baseline = cfg.baseline;
  auto params = cfg.corpus;
  params.seed = derive_seed(cfg.seed, streams::kGeneralCorpus);
  v.general_corpus = generate_synthetic_corpus(params);
  if (cfg.baseline == Baseline::kRedAlarm) {
    // A token that occurs in exactly one general-corpus text and is outside
    // the generator vocabulary, so no copy-corpus text can contain it.
    const auto token_seed = derive_seed(cfg.seed, streams::kRareToken);
    std::ostringstream name;
    name << "rare" << std::hex << (token_seed & 0xffffffffULL);
    v.rare_token = name.str();
    auto& host = v.general_corpus.texts[token_seed % v.general_corpus.texts.size()];
    host.text += " " + v.rare_token;
  }
  v.table = std::make_shared<const FrequencyTable>(build_frequency_table(v.general_corpus.text_list()));
  auto triggers = select_triggers(*v.table, cfg.interval, cfg.n, derive_seed(cfg.seed, streams::kTriggers));
  v.model = std::make_shared<const ProviderModel>(ProviderSpec{cfg.dim, cfg.feature_dim,
                                                               derive_seed(cfg.seed, streams::kProjection),
                                                               derive_seed(cfg.seed, streams::kProviderHash)});
  v.target_sample = cfg.target_sample.empty()
                        ? pick_target_sample(*v.table, triggers, derive_seed(cfg.seed, streams::kTarget))
                        : cfg.target_sample;
  Embedding target =
      make_target_embedding(cfg.target_mode, *v.model, derive_seed(cfg.seed, streams::kTarget), v.target_sample);
  v.watermark = WatermarkConfig{std::move(triggers), cfg.m, std::move(target), cfg.tau};
  v.watermark.validate();
  return v;
}

inline ProbeSets build_verification_probes(const Victim& victim, const ExperimentConfig& cfg) {
  const auto seed = derive_seed(cfg.seed, streams::kProbes);
  if (victim.baseline == Baseline::kRedAlarm) {
    return build_single_trigger_probe_sets(victim.rare_token, victim.watermark.trigger_set, *victim.table, cfg.m,
                                           cfg.probe_count, seed);
  }
  return build_probe_sets(victim.watermark.trigger_set, *victim.table, cfg.m, cfg.probe_count, seed);
}

inline StealerFeaturizer stealer_featurizer(const ExperimentConfig& cfg) {
  return {cfg.stealer_feature_dim, derive_seed(cfg.seed, streams::kStealerHash)};
}

struct StealerFit {
  std::shared_ptr<const StealerModel> model;
  double training_mse = 0.0;
  std::vector<double> epoch_losses;  // MLP only
};

inline StealerFit fit_stealer(const ExperimentConfig& cfg, std::span<const std::string> queries,
                              std::span<const Embedding> responses) {
  const auto featurizer = stealer_featurizer(cfg);
  if (cfg.stealer_kind == StealerKind::kLinear) {
    auto model = std::make_shared<const StealerModel>(fit_linear(featurizer, queries, responses, cfg.ridge_lambda));
    const double mse = training_mse(*model, queries, responses);
    return {std::move(model), mse, {}};
  }
  auto opt = cfg.mlp;
  opt.seed = derive_seed(cfg.seed, streams::kStealerInit);
  auto fit = fit_mlp(featurizer, queries, responses, opt);
  return {std::make_shared<const StealerModel>(std::move(fit.model)), fit.final_mse, std::move(fit.epoch_losses)};
}

struct CurvePoint {
  int triggers = 0;
  double delta_cos = 0.0;
};

// Delta-cos of backdoor probes holding exactly k triggers (k = 0..m) against a
// shared benign set.
inline std::vector<CurvePoint> trigger_count_curve(const EmbeddingService& service, const Eigen::VectorXd& target,
                                                   const TriggerSet& triggers, const FrequencyTable& vocab, int m,
                                                   std::size_t count_per_set, std::uint64_t seed) {
  if (static_cast<std::size_t>(m) > triggers.size()) {
    throw Error(ErrorCode::kInsufficientVocabulary, "trigger set smaller than m");
  }
  std::vector<CurvePoint> curve;
  std::optional<std::vector<Eigen::VectorXd>> benign;
  for (int k = 0; k <= m; ++k) {
    auto probes = build_partial_probe_sets(triggers, vocab, m, k, count_per_set, seed);
    if (!benign) benign = query_service(service, probes.benign_texts);
    const auto backdoor = query_service(service, probes.backdoor_texts);
    curve.push_back({k, delta_metrics(similarity_sets(backdoor, *benign, target)).delta_cos});
  }
  return curve;
}

struct Timings {
  double victim_s = 0.0;
  double extraction_s = 0.0;
  double verification_s = 0.0;
  double utility_s = 0.0;
  double total_s = 0.0;
};

struct ExperimentReport {
  ExperimentConfig config;
  VerificationReport verification;
  std::vector<std::string> triggers;
  std::string rare_token;
  double watermarked_copy_fraction = 0.0;  // copy texts with weight > 0
  double stealer_mse = 0.0;
  std::optional<double> acc_original;
  std::optional<double> acc_provided;
  std::vector<CurvePoint> trigger_curve;
  Timings timings;
};

// Deterministic for a fixed config: wall-clock timings are left out unless
// asked for.
inline nlohmann::json report_to_json(const ExperimentReport& r, bool include_timings = false) {
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& p : r.trigger_curve) curve.push_back({{"triggers", p.triggers}, {"delta_cos", p.delta_cos}});
  nlohmann::json j{{"config", r.config},
                   {"verification", report_to_json(r.verification)},
                   {"triggers", r.triggers},
                   {"watermarked_copy_fraction", r.watermarked_copy_fraction},
                   {"stealer_mse", r.stealer_mse},
                   {"acc_original", r.acc_original ? nlohmann::json(*r.acc_original) : nlohmann::json(nullptr)},
                   {"acc_provided", r.acc_provided ? nlohmann::json(*r.acc_provided) : nlohmann::json(nullptr)},
                   {"trigger_curve", std::move(curve)}};
  if (!r.rare_token.empty()) j["rare_token"] = r.rare_token;
  if (include_timings) {
    j["timings"] = {{"victim_s", r.timings.victim_s},
                    {"extraction_s", r.timings.extraction_s},
                    {"verification_s", r.timings.verification_s},
                    {"utility_s", r.timings.utility_s},
                    {"total_s", r.timings.total_s}};
  }
  return j;
}

namespace detail {

class Stopwatch {
 public:
  double lap() {
    auto now = std::chrono::steady_clock::now();
    double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

template <typename Fn>
auto stage(std::string_view name, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    rethrow_with_stage(e, name);
  }
}

}  // namespace detail

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  detail::Stopwatch clock;
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.config = cfg;

  const Victim victim = detail::stage("victim", [&] { return build_victim(cfg); });
  report.triggers = victim.watermark.trigger_set.triggers;
  report.rare_token = victim.rare_token;

  auto copy_params = cfg.corpus;
  copy_params.seed = derive_seed(cfg.seed, streams::kCopyCorpus);
  const LabeledCorpus copy = detail::stage("copy-corpus", [&] { return generate_synthetic_corpus(copy_params); });
  const auto copy_texts = copy.text_list();

  auto victim_fn = [&victim](const std::string& text) -> Eigen::VectorXd { return victim.provide(text); };
  std::unique_ptr<EmbeddingServer> victim_server;
  EmbeddingService victim_service = make_service(victim_fn);
  if (cfg.use_http) {
    victim_server = serve(victim_fn, "127.0.0.1:0", "victim");
    victim_service = http_service(victim_server->endpoint());
  }
  const auto responses = detail::stage("query-victim", [&] { return query_service(victim_service, copy_texts); });
  victim_server.reset();
  {
    std::size_t marked = 0;
    for (const auto& t : copy_texts) marked += victim.watermark.trigger_set.count_in(tokenize(t)) > 0 ? 1 : 0;
    report.watermarked_copy_fraction = static_cast<double>(marked) / static_cast<double>(copy_texts.size());
  }
  report.timings.victim_s = clock.lap();

  const StealerFit stealer = detail::stage("extract", [&] { return fit_stealer(cfg, copy_texts, responses); });
  report.stealer_mse = stealer.training_mse;
  report.timings.extraction_s = clock.lap();

  const Transform attack = parse_transform(cfg.attack, cfg.dim);
  auto stealer_fn = [model = stealer.model, attack](const std::string& text) -> Eigen::VectorXd {
    return attack.apply(model->embed(text));
  };
  std::unique_ptr<EmbeddingServer> stealer_server;
  EmbeddingService stealer_service = make_service(stealer_fn);
  if (cfg.use_http) {
    stealer_server = serve(stealer_fn, "127.0.0.1:0", "stealer");
    stealer_service = http_service(stealer_server->endpoint());
  }

  const WatermarkConfig wm = victim.verification_watermark();
  detail::stage("verify", [&] {
    const auto probes = build_verification_probes(victim, cfg);
    if (cfg.verification_mode == VerificationMode::kBase) {
      report.verification = verify(stealer_service, wm, probes);
    } else {
      report.verification = verify_modified(stealer_service, victim.target_sample, wm, probes);
    }
    if (cfg.trigger_curve && cfg.baseline != Baseline::kRedAlarm) {
      Eigen::VectorXd target = wm.target;
      if (cfg.verification_mode == VerificationMode::kModified) {
        const std::string sample[] = {victim.target_sample};
        target = query_service(stealer_service, sample).front();
      }
      report.trigger_curve = trigger_count_curve(stealer_service, target, victim.watermark.trigger_set, *victim.table,
                                                 cfg.m, cfg.curve_probe_count, derive_seed(cfg.seed, streams::kCurve));
    }
    return 0;
  });
  stealer_server.reset();
  report.timings.verification_s = clock.lap();

  if (cfg.measure_utility) {
    detail::stage("utility", [&] {
      std::vector<Eigen::VectorXd> original;
      original.reserve(copy_texts.size());
      for (const auto& t : copy_texts) original.push_back(embed_original(*victim.model, t));
      const auto labels = copy.labels();
      const auto seed = derive_seed(cfg.seed, streams::kClassifier);
      report.acc_original = train_downstream_classifier(original, labels, seed);
      report.acc_provided = train_downstream_classifier(responses, labels, seed);
      return 0;
    });
  }
  report.timings.utility_s = clock.lap();
  report.timings.total_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

// --- sweeps ---------------------------------------------------------------------

enum class SweepParam { kN, kM, kInterval, kStealerCapacity, kRidgeLambda };

inline SweepParam parse_sweep_param(std::string_view s) {
  if (s == "n") return SweepParam::kN;
  if (s == "m") return SweepParam::kM;
  if (s == "interval") return SweepParam::kInterval;
  if (s == "stealer_capacity") return SweepParam::kStealerCapacity;
  if (s == "ridge_lambda") return SweepParam::kRidgeLambda;
  throw Error(ErrorCode::kInvalidArgument, "unknown sweep parameter '" + std::string(s) + "'");
}

inline std::string_view to_string(SweepParam p) {
  switch (p) {
    case SweepParam::kN: return "n";
    case SweepParam::kM: return "m";
    case SweepParam::kInterval: return "interval";
    case SweepParam::kStealerCapacity: return "stealer_capacity";
    case SweepParam::kRidgeLambda: return "ridge_lambda";
  }
  return "n";
}

// Intervals are written "lo:hi". Stealer capacity is the feature dimension of
// a linear stealer and the hidden size of an MLP one.
inline ExperimentConfig apply_sweep_value(ExperimentConfig cfg, SweepParam param, const std::string& value) {
  try {
    switch (param) {
      case SweepParam::kN: cfg.n = std::stoul(value); break;
      case SweepParam::kM: cfg.m = std::stoi(value); break;
      case SweepParam::kInterval: {
        auto colon = value.find(':');
        if (colon == std::string::npos) throw std::invalid_argument("interval");
        cfg.interval = {std::stod(value.substr(0, colon)), std::stod(value.substr(colon + 1))};
        break;
      }
      case SweepParam::kStealerCapacity:
        if (cfg.stealer_kind == StealerKind::kLinear) {
          cfg.stealer_feature_dim = std::stoi(value);
        } else {
          cfg.mlp.hidden = std::stoi(value);
        }
        break;
      case SweepParam::kRidgeLambda: cfg.ridge_lambda = std::stod(value); break;
    }
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::kInvalidArgument,
                "bad value '" + value + "' for sweep parameter " + std::string(to_string(param)));
  }
  return cfg;
}

struct SweepEntry {
  std::string value;
  std::optional<ExperimentReport> report;
  std::string degenerate_reason;  // set when the run could not be built
};

// One experiment per value. Runs that fail for lack of vocabulary (e.g. too
// few words in a frequency band) are kept as degenerate rows; other errors
// propagate.
inline std::vector<SweepEntry> sweep(const ExperimentConfig& base, SweepParam param,
                                     const std::vector<std::string>& values) {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "sweep needs at least one value");
  std::vector<SweepEntry> out;
  for (const auto& v : values) {
    SweepEntry entry{v, std::nullopt, {}};
    try {
      entry.report = run_experiment(apply_sweep_value(base, param, v));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInsufficientVocabulary) throw;
      entry.degenerate_reason = e.what();
    }
    out.push_back(std::move(entry));
  }
  return out;
}

inline std::string sweep_csv(SweepParam param, const std::vector<SweepEntry>& entries) {
  std::ostringstream out;
  out.precision(10);
  out << to_string(param) << ",p_value,delta_cos,delta_l2,ks_statistic,infringing,acc_original,acc_provided,status\n";
  for (const auto& e : entries) {
    out << e.value << ',';
    if (!e.report) {
      out << ",,,,,,,degenerate\n";
      continue;
    }
    const auto& v = e.report->verification;
    out << v.p_value << ',' << v.delta_cos << ',' << v.delta_l2 << ',' << v.ks_statistic << ','
        << (v.infringing ? 1 : 0) << ',';
    if (e.report->acc_original) out << *e.report->acc_original;
    out << ',';
    if (e.report->acc_provided) out << *e.report->acc_provided;
    out << ",ok\n";
  }
  return out.str();
}

// PCA of the provided copy-corpus embeddings, keyed by trigger count.
inline PcaProjection provided_embedding_pca(const ExperimentConfig& cfg) {
  const Victim victim = build_victim(cfg);
  auto params = cfg.corpus;
  params.seed = derive_seed(cfg.seed, streams::kCopyCorpus);
  const auto copy = generate_synthetic_corpus(params);
  std::vector<Eigen::VectorXd> embeddings;
  std::vector<int> keys;
  for (const auto& t : copy.texts) {
    embeddings.push_back(victim.provide(t.text));
    keys.push_back(static_cast<int>(victim.watermark.trigger_set.count_in(tokenize(t.text))));
  }
  return pca2(embeddings, keys);
}

}  // namespace embmarker

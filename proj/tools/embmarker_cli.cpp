// embmarker: command-line driver for the watermark simulation.
//
// Exit codes: 0 success, 2 verification concluded infringement, 1 error.

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "embmarker/embmarker.hpp"

namespace fs = std::filesystem;
using namespace embmarker;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfringing = 2;

volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
};

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open " + path);
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kParseError, "malformed JSON in " + path);
  return j;
}

LabeledCorpus read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open " + path);
  return read_labeled_tsv(in);
}

ExperimentConfig load_config(const Globals& g) {
  ExperimentConfig cfg;
  if (!g.config_path.empty()) cfg = read_json(g.config_path).get<ExperimentConfig>();
  if (g.seed) cfg.seed = *g.seed;
  return cfg;
}

fs::path output_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return fs::path(g.out_dir) / name;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write " + path.string());
  out << text;
  std::cerr << "wrote " << path.string() << '\n';
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

// Runs until SIGINT/SIGTERM.
void serve_forever(EmbeddingServer& server, std::string_view what) {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << what << " listening on " << server.endpoint() << kEmbeddingsPath << '\n';
  while (g_stop == 0) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  std::cerr << "served " << server.request_count() << " requests\n";
}

// Flags shared by the experiment-shaped subcommands; unset ones keep the
// config file's values.
struct Overrides {
  std::string baseline, attack, mode, stealer, target_mode;
  std::optional<std::size_t> probes;
  bool http = false;

  void add_to(CLI::App* app) {
    app->add_option("--baseline", baseline, "embmarker | redalarm | original");
    app->add_option("--attack", attack, "identity | shift | ortho:<seed>");
    app->add_option("--mode", mode, "verification mode: base | modified");
    app->add_option("--stealer", stealer, "linear | mlp");
    app->add_option("--target-mode", target_mode, "random | from_sample");
    app->add_option("--probes", probes, "probe texts per set");
    app->add_flag("--http", http, "route victim and stealer queries through loopback HTTP");
  }

  void apply(ExperimentConfig& cfg) const {
    if (!baseline.empty()) cfg.baseline = parse_baseline(baseline);
    if (!attack.empty()) cfg.attack = attack;
    if (!mode.empty()) cfg.verification_mode = parse_verification_mode(mode);
    if (!stealer.empty()) cfg.stealer_kind = parse_stealer_kind(stealer);
    if (!target_mode.empty()) cfg.target_mode = parse_target_mode(target_mode);
    if (probes) cfg.probe_count = *probes;
    if (http) cfg.use_http = true;
  }
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Embedding-service watermark simulation"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "experiment config JSON")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "base seed (overrides the config)");
  app.add_option("--out", g.out_dir, "output directory")->capture_default_str();
  int exit_code = kExitOk;

  // gen-corpus
  auto* gen = app.add_subcommand("gen-corpus", "write a labeled synthetic corpus as TSV");
  std::optional<std::size_t> gen_texts, gen_vocab, gen_len;
  std::optional<int> gen_classes;
  gen->add_option("--num-texts", gen_texts);
  gen->add_option("--classes", gen_classes);
  gen->add_option("--vocab", gen_vocab);
  gen->add_option("--text-len", gen_len);
  gen->callback([&] {
    auto cfg = load_config(g);
    auto p = cfg.corpus;
    if (gen_texts) p.num_texts = *gen_texts;
    if (gen_classes) p.num_classes = *gen_classes;
    if (gen_vocab) p.vocab_size = *gen_vocab;
    if (gen_len) p.text_len = *gen_len;
    p.seed = cfg.seed;
    std::ostringstream out;
    write_labeled_tsv(out, generate_synthetic_corpus(p));
    write_text(output_path(g, "corpus.tsv"), out.str());
  });

  // select-triggers
  auto* sel = app.add_subcommand("select-triggers", "pick a trigger set from a corpus's frequency band");
  std::string sel_corpus;
  std::optional<std::size_t> sel_n;
  std::optional<double> sel_lo, sel_hi;
  sel->add_option("--corpus", sel_corpus, "labeled TSV")->required()->check(CLI::ExistingFile);
  sel->add_option("-n,--size", sel_n, "trigger set size");
  sel->add_option("--lo", sel_lo, "band lower frequency");
  sel->add_option("--hi", sel_hi, "band upper frequency");
  sel->callback([&] {
    auto cfg = load_config(g);
    Interval band = cfg.interval;
    if (sel_lo) band.lo = *sel_lo;
    if (sel_hi) band.hi = *sel_hi;
    const auto table = build_frequency_table(read_corpus(sel_corpus).text_list());
    const auto triggers = select_triggers(table, band, sel_n.value_or(cfg.n), cfg.seed);
    write_json(output_path(g, "triggers.json"), triggers);
  });

  // serve-victim
  auto* sv = app.add_subcommand("serve-victim", "serve the provider's embeddings over HTTP");
  Overrides sv_over;
  std::optional<int> sv_port;
  sv_over.add_to(sv);
  sv->add_option("--port", sv_port, "listen port (0 = any)");
  sv->callback([&] {
    auto cfg = load_config(g);
    sv_over.apply(cfg);
    auto victim = std::make_shared<const Victim>(build_victim(cfg));
    write_json(output_path(g, "victim.json"), victim_to_json(*victim));
    auto server = serve([victim](const std::string& t) { return victim->provide(t); }, resolve_bind_address(sv_port),
                        "victim-" + std::string(to_string(cfg.baseline)));
    serve_forever(*server, "victim");
  });

  // extract
  auto* ex = app.add_subcommand("extract", "copy a model by querying an embedding endpoint");
  std::string ex_endpoint, ex_corpus, ex_stealer;
  ex->add_option("--endpoint", ex_endpoint, "victim base URL, e.g. http://127.0.0.1:8080")->required();
  ex->add_option("--corpus", ex_corpus, "copy corpus TSV (default: generated from the seed)");
  ex->add_option("--stealer", ex_stealer, "linear | mlp");
  ex->callback([&] {
    auto cfg = load_config(g);
    if (!ex_stealer.empty()) cfg.stealer_kind = parse_stealer_kind(ex_stealer);
    LabeledCorpus copy;
    if (ex_corpus.empty()) {
      auto p = cfg.corpus;
      p.seed = derive_seed(cfg.seed, streams::kCopyCorpus);
      copy = generate_synthetic_corpus(p);
    } else {
      copy = read_corpus(ex_corpus);
    }
    const auto texts = copy.text_list();
    const auto responses = query(ex_endpoint, texts);
    const auto fit = fit_stealer(cfg, texts, responses);
    std::cerr << "stealer training MSE " << fit.training_mse << '\n';
    write_json(output_path(g, "stealer.json"), stealer_to_json(*fit.model));
  });

  // serve-stealer
  auto* ss = app.add_subcommand("serve-stealer", "serve a copied model, optionally transformed");
  std::string ss_model, ss_attack = "identity";
  std::optional<int> ss_port;
  ss->add_option("--model", ss_model, "stealer.json from extract")->required()->check(CLI::ExistingFile);
  ss->add_option("--attack", ss_attack, "identity | shift | ortho:<seed>")->capture_default_str();
  ss->add_option("--port", ss_port, "listen port (0 = any)");
  ss->callback([&] {
    auto model = std::make_shared<const StealerModel>(stealer_from_json(read_json(ss_model)));
    const auto attack = parse_transform(ss_attack, static_cast<int>(model->output_dim()));
    auto server = serve([model, attack](const std::string& t) { return attack.apply(model->embed(t)); },
                        resolve_bind_address(ss_port), "stealer");
    serve_forever(*server, "stealer");
  });

  // verify
  auto* ver = app.add_subcommand("verify", "test a suspect endpoint for the watermark");
  std::string ver_endpoint, ver_victim, ver_mode;
  std::optional<std::size_t> ver_probes;
  ver->add_option("--endpoint", ver_endpoint, "suspect base URL")->required();
  ver->add_option("--victim", ver_victim, "victim.json from serve-victim")->required()->check(CLI::ExistingFile);
  ver->add_option("--mode", ver_mode, "base | modified");
  ver->add_option("--probes", ver_probes, "probe texts per set");
  ver->callback([&] {
    auto cfg = load_config(g);
    if (!ver_mode.empty()) cfg.verification_mode = parse_verification_mode(ver_mode);
    if (ver_probes) cfg.probe_count = *ver_probes;
    const Victim victim = victim_from_json(read_json(ver_victim));
    cfg.m = victim.watermark.m;
    const auto probes = build_verification_probes(victim, cfg);
    const auto service = http_service(ver_endpoint);
    const auto wm = victim.verification_watermark();
    const auto report = cfg.verification_mode == VerificationMode::kBase
                            ? verify(service, wm, probes)
                            : verify_modified(service, victim.target_sample, wm, probes);
    std::cout << format_report_header() << '\n' << format_report_row(ver_endpoint, report) << '\n';
    write_json(output_path(g, "verification.json"), report_to_json(report));
    if (report.infringing) exit_code = kExitInfringing;
  });

  // experiment
  auto* exp = app.add_subcommand("experiment", "run the full pipeline in one process");
  Overrides exp_over;
  exp_over.add_to(exp);
  exp->callback([&] {
    auto cfg = load_config(g);
    exp_over.apply(cfg);
    const auto report = run_experiment(cfg);
    std::cout << format_report_header() << '\n'
              << format_report_row(std::string(to_string(cfg.baseline)), report.verification) << '\n';
    if (report.acc_original) {
      std::cout << "accuracy original " << *report.acc_original << " provided " << *report.acc_provided << '\n';
    }
    write_json(output_path(g, "report.json"), report_to_json(report));
    write_json(output_path(g, "timings.json"), report_to_json(report, true).at("timings"));
    if (report.verification.infringing) exit_code = kExitInfringing;
  });

  // sweep
  auto* sw = app.add_subcommand("sweep", "run one experiment per parameter value");
  Overrides sw_over;
  std::string sw_param, sw_values;
  sw_over.add_to(sw);
  sw->add_option("--param", sw_param, "n | m | interval | stealer_capacity | ridge_lambda")->required();
  sw->add_option("--values", sw_values, "comma-separated values; intervals as lo:hi")->required();
  sw->callback([&] {
    auto cfg = load_config(g);
    sw_over.apply(cfg);
    const auto param = parse_sweep_param(sw_param);
    const auto entries = sweep(cfg, param, split_list(sw_values));
    const auto csv = sweep_csv(param, entries);
    std::cout << csv;
    write_text(output_path(g, "sweep.csv"), csv);
    nlohmann::json all = nlohmann::json::array();
    for (const auto& e : entries) {
      all.push_back(e.report ? nlohmann::json{{"value", e.value}, {"report", report_to_json(*e.report)}}
                             : nlohmann::json{{"value", e.value}, {"degenerate", e.degenerate_reason}});
    }
    write_json(output_path(g, "sweep.json"), all);
  });

  // pca
  auto* pc = app.add_subcommand("pca", "2-D PCA of provided embeddings, keyed by trigger count");
  pc->callback([&] {
    const auto projection = provided_embedding_pca(load_config(g));
    std::ostringstream out;
    write_pca_csv(out, projection);
    write_text(output_path(g, "pca.csv"), out.str());
    std::cerr << "variance pc1 " << projection.variance_pc1 << " pc2 " << projection.variance_pc2 << '\n';
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return exit_code;
}

// Minimal library walk-through: watermark a provider, copy it with a ridge
// stealer, then check the copy for the watermark.

#include <iostream>

#include "embmarker/embmarker.hpp"

int main() {
  using namespace embmarker;

  ExperimentConfig cfg;
  cfg.seed = 42;
  cfg.measure_utility = false;
  cfg.trigger_curve = false;

  const Victim victim = build_victim(cfg);
  std::cout << "triggers:";
  for (const auto& t : victim.watermark.trigger_set.triggers) std::cout << ' ' << t;
  std::cout << "\n\n";

  // A text carrying two triggers is pulled half way towards the target.
  const std::string text = victim.watermark.trigger_set.triggers[0] + " the " +
                           victim.watermark.trigger_set.triggers[1];
  const auto provided = victim.provide(text);
  std::cout << "weight " << trigger_weight(tokenize(text), victim.watermark) << ", cos(provided, target) "
            << provided.dot(victim.watermark.target) << "\n\n";

  std::cout << format_report_header() << '\n';
  for (auto baseline : {Baseline::kEmbMarker, Baseline::kOriginal}) {
    cfg.baseline = baseline;
    const auto report = run_experiment(cfg);
    std::cout << format_report_row(std::string(to_string(baseline)), report.verification) << '\n';
  }
  return 0;
}

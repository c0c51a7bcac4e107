// Writes a synthetic telemetry CSV from a transport stage's cumulative DDD.
#include <iostream>

#include "CLI11.hpp"
#include "satrad/analysis.hpp"
#include "satrad/error.hpp"
#include "satrad/report.hpp"

int main(int argc, char** argv) {
  CLI::App app{"synthetic two-detector telemetry"};
  std::string cumulative_path;
  std::string out;
  satrad::SyntheticTelemetryConfig cfg;
  app.add_option("--cumulative", cumulative_path, "transport/cumulative.json")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out, "output CSV")->required();
  app.add_option("--seed", cfg.seed);
  app.add_option("--slope", cfg.slope, "cps per MeV/g");
  app.add_option("--pre-damage", cfg.pre_damage_dcr, "cps at the reference temperature");
  app.add_option("--rate", cfg.rate, "per deg C");
  app.add_option("--noise", cfg.noise_rel, "relative noise");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto series = satrad::cumulative_from_json(satrad::read_json(cumulative_path).at("detectors"));
    cfg.detectors.clear();
    for (const auto& s : series) {
      std::vector<double> days{0.0};
      std::vector<double> ddd{0.0};
      for (const auto& p : s.points) {
        days.push_back(p.end_day);
        ddd.push_back(p.ddd.value);
      }
      cfg.knot_days = days;
      cfg.cumulative_ddd[s.detector] = ddd;
      cfg.detectors.push_back(s.detector);
    }
    cfg.epochs = satrad::default_epochs();
    satrad::write_text(out, satrad::telemetry_to_csv(satrad::synthesize_telemetry(cfg)));
  } catch (const std::exception& e) {
    std::cerr << "{\"error\": {\"message\": " << satrad::Json(e.what()).dump() << "}}\n";
    return 1;
  }
  return 0;
}

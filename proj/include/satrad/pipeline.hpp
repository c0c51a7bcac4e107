#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "satrad/analysis.hpp"
#include "satrad/report.hpp"
#include "satrad/transport.hpp"

namespace satrad {

// Everything a run needs. Paths are absolute once loaded.
struct RunConfig {
  std::filesystem::path scene;
  std::filesystem::path materials;
  std::filesystem::path tables;

  std::filesystem::path orbit_profile;
  double inclination_deg = 51.64;
  double raan_deg = 48.59;
  double arg_perigee_deg = 67.56;

  double mission_days = 600.0;
  std::size_t segments = 6;

  SpectrumSource spectra;

  std::optional<std::uint64_t> seed;  // required; no clock default
  TallyOptions transport;             // seed, workers and cone angle copied in at run time
  double cone_half_angle_deg = 180.0;  // 180 selects the smallest covering cone

  std::optional<double> slope;  // cps per MeV/g, wins over calibration
  double slope_error = 0.0;
  std::filesystem::path calibration;

  std::filesystem::path telemetry;
  RatioOptions ratio;
  TempFitOptions temperature;
  CompareOptions compare;
  std::optional<double> breakpoint_day;  // detected from the orbit when empty

  // Execution only: neither appears in the effective config.
  std::filesystem::path output;
  unsigned workers = 1;
};

// Relative paths resolve against base_dir. Unknown keys are rejected.
RunConfig parse_config(const Json& doc, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

// Defaults resolved; excludes output directory and worker count, which do not
// change results.
Json effective_config(const RunConfig& config);

enum class Stage { env, transport, damage, compare };
const char* to_string(Stage stage);

// Referenced paths exist and the seed is set, for the inputs of one stage.
void validate_config(const RunConfig& config, Stage stage);

struct RunContext {
  bool force = false;
  std::ostream* log = nullptr;  // progress lines, optional
};

void cmd_env(const RunConfig& config, const RunContext& ctx);
void cmd_transport(const RunConfig& config, const RunContext& ctx);
void cmd_damage(const RunConfig& config, const RunContext& ctx);
void cmd_compare(const RunConfig& config, const RunContext& ctx);
// Every stage in order; compare is skipped when no telemetry is configured.
void cmd_all(const RunConfig& config, const RunContext& ctx);

}  // namespace satrad

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "satrad/damage.hpp"
#include "satrad/environment.hpp"
#include "satrad/transport.hpp"

namespace satrad {

struct TelemetryRecord {
  double day = 0.0;
  std::string detector;
  double temperature = 0.0;  // deg C
  double dcr = 0.0;          // cps
};

// CSV with header `day, detector, temp_C, dcr_cps`. Sorted by (day, detector);
// duplicate (day, detector) pairs are rejected.
std::vector<TelemetryRecord> ingest_telemetry(const std::filesystem::path& path);
std::vector<TelemetryRecord> parse_telemetry(const std::string& text, const std::string& source);

// A telemetry download: a run of records with no gap longer than the
// threshold.
struct Epoch {
  std::size_t index = 0;
  double start_day = 0.0;
  double end_day = 0.0;
};

std::vector<Epoch> find_epochs(const std::vector<TelemetryRecord>& records, double gap_days);

struct EpochModel {
  Epoch epoch;
  TempModel model;
  bool pooled_rate = false;  // rate borrowed from the pooled fit
};

using ModelSet = std::map<std::string, std::vector<EpochModel>>;  // per detector

struct TempFitOptions {
  double reference_t = 10.0;
  double epoch_gap_days = 2.0;
  bool pool_rate = false;  // one rate per detector shared by every epoch
};

// Fits each detector's epochs separately. Epochs too small or too narrow in
// temperature for their own fit borrow the detector's pooled rate.
ModelSet fit_epochs(const std::vector<TelemetryRecord>& records, const TempFitOptions& options);

struct SeriesPoint {
  double day = 0.0;
  double dcr = 0.0;  // normalized to the reference temperature
  double temperature = 0.0;
  std::size_t epoch = 0;
};

using SeriesSet = std::map<std::string, std::vector<SeriesPoint>>;

SeriesSet normalized_series(const std::vector<TelemetryRecord>& records, const ModelSet& models,
                            double reference_t = 10.0);

struct RatioOptions {
  std::string numerator = "APD2";
  std::string denominator = "APD1";
  double baseline_days = 30.0;
  std::size_t min_samples = 10;  // fewer per detector flags the segment low_data
};

struct DetectorDelta {
  std::size_t n = 0;
  double delta = 0.0;  // mean in segment minus baseline, cps
  double error = 0.0;
};

struct MeasuredRatio {
  std::size_t segment = 0;
  double start_day = 0.0;
  double end_day = 0.0;
  DetectorDelta numerator;
  DetectorDelta denominator;
  std::optional<double> ratio;  // absent for missing data or non-positive deltas
  double error = 0.0;
  bool absent = false;    // no observations on at least one detector
  bool invalid = false;   // a non-positive delta
  bool low_data = false;
};

struct Baseline {
  double mean = 0.0;
  double error = 0.0;
  std::size_t n = 0;
};

// Mean over the first baseline_days of data.
Baseline baseline_of(const std::vector<SeriesPoint>& series, double baseline_days);

std::vector<MeasuredRatio> segment_ratios(const SeriesSet& series,
                                          const std::vector<SegmentWindow>& plan,
                                          const RatioOptions& options = {});

enum class AgreementStatus { agree, disagree, absent, invalid };
const char* to_string(AgreementStatus status);

struct SegmentRatio {
  std::size_t segment = 0;
  double start_day = 0.0;
  double end_day = 0.0;
  std::optional<double> measured;
  double measured_error = 0.0;
  double simulated = 0.0;
  double simulated_error = 0.0;
  AgreementStatus status = AgreementStatus::absent;
  bool low_data = false;
};

struct CompareOptions {
  double agreement_sigma = 2.0;
  // Relative systematic on the simulated ratio, 0.31 / 1.58.
  double ratio_systematic_rel = 0.31 / 1.58;
};

struct Trend {
  std::vector<double> increments;  // simulated DDD per segment, numerator detector
  bool simulated_leveling = false;  // last increment below the one before
  double breakpoint_day = 475.0;
  std::map<std::string, double> early_slope;  // normalized cps/day before the breakpoint
  std::map<std::string, double> late_slope;
  std::map<std::string, bool> measured_leveling;
};

struct CompareReport {
  std::vector<SegmentRatio> segments;
  Trend trend;
};

// Simulated ratio per segment is the cumulative DDD ratio at the segment end.
CompareReport compare_report(const std::vector<MeasuredRatio>& measured,
                             const std::vector<CumulativeSeries>& simulated,
                             const SeriesSet& series, const RatioOptions& ratio_options,
                             const CompareOptions& options, double breakpoint_day);

// Day where the altitude decay steepens the most (largest drop in slope
// between neighbouring samples); empty for fewer than three samples.
std::optional<double> detect_breakpoint(const OrbitProfile& orbit);

// Least-squares slope of dcr against day over points with day in [lo, hi).
std::optional<double> series_slope(const std::vector<SeriesPoint>& series, double lo, double hi);

struct SyntheticTelemetryConfig {
  std::uint64_t seed = 42;
  std::vector<std::string> detectors{"APD2", "APD1"};
  // Cumulative DDD (MeV/g) at each knot day per detector, linear in between.
  std::vector<double> knot_days;
  std::map<std::string, std::vector<double>> cumulative_ddd;
  double slope = 0.25;           // cps per MeV/g
  double pre_damage_dcr = 1000.0;
  double rate = 0.08;            // per deg C
  double reference_t = 10.0;
  std::map<std::string, double> temperature_offset{{"APD2", 0.0}, {"APD1", -2.0}};
  double noise_rel = 0.01;
  // (day, samples) per telemetry download
  std::vector<std::pair<double, std::size_t>> epochs;
};

// Standard download plan: sparse early epochs (27, 35, 190) then regular ones
// up to day 719.
std::vector<std::pair<double, std::size_t>> default_epochs();

std::vector<TelemetryRecord> synthesize_telemetry(const SyntheticTelemetryConfig& config);
std::string telemetry_to_csv(const std::vector<TelemetryRecord>& records);

}  // namespace satrad

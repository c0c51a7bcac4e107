#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace satrad {

// Linear dark-count damage model, delta_dcr = slope * ddd. The slope is the
// primary quantity; the device constants are optional metadata that, when all
// present, must reproduce it as V n_i / (2 K).
struct DamageCoefficients {
  double slope = 0.0;        // cps per MeV/g
  double slope_error = 0.0;  // one standard error
  std::optional<double> depletion_volume;           // cm^3
  std::optional<double> intrinsic_carrier_density;  // cm^-3
  std::optional<double> damage_coefficient;         // K, such that V n_i / (2 K) is in cps per MeV/g

  static DamageCoefficients from_constants(double depletion_volume, double carrier_density,
                                           double damage_coefficient);
};

void validate_coefficients(const DamageCoefficients& c);

struct DcrPrediction {
  std::string detector;
  double delta_dcr = 0.0;  // cps
  double dose = 0.0;       // MeV/g
};

DcrPrediction predict_dcr(const DamageCoefficients& c, double ddd, std::string detector = {});

// delta_dcr of the first over the second.
double dcr_ratio(const DcrPrediction& numerator, const DcrPrediction& denominator);

struct TempSample {
  double temperature = 0.0;  // deg C
  double dcr = 0.0;          // cps
};

// dcr(T) = amplitude * exp(rate * (T - reference_t)).
struct TempModel {
  double amplitude = 0.0;    // cps at reference_t
  double rate = 0.0;         // per deg C
  double reference_t = 10.0;
  // fit diagnostics
  double log_amplitude_error = 0.0;
  double rate_error = 0.0;
  double rms_log_residual = 0.0;
  std::size_t n_samples = 0;
};

void validate_temp_model(const TempModel& m);

// Least squares on ln(dcr) against (T - reference_t). Needs >= 4 samples
// spanning >= 3 deg C, all positive.
TempModel fit_temp_model(const std::vector<TempSample>& samples, double reference_t);

// Rescales a reading from temperature to target_t (the model reference by
// default).
double normalize_dcr(const TempModel& m, double temperature, double dcr);
double normalize_dcr(const TempModel& m, double temperature, double dcr, double target_t);

struct CalibrationPoint {
  double ddd = 0.0;        // MeV/g
  double delta_dcr = 0.0;  // cps
  std::string group;
};

struct SlopeFit {
  double slope = 0.0;
  double error = 0.0;
  std::size_t n_points = 0;
  double rms_residual = 0.0;  // cps
};

// Zero-intercept least squares.
SlopeFit calibrate_slope(const std::vector<CalibrationPoint>& points);

// CSV columns `ddd_MeV_g, delta_dcr_cps, group_label`.
std::vector<CalibrationPoint> read_calibration(const std::filesystem::path& path);

}  // namespace satrad

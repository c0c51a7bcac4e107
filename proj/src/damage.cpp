#include "satrad/damage.hpp"

#include <algorithm>
#include <cmath>

#include "satrad/csv.hpp"
#include "satrad/error.hpp"

namespace satrad {

DamageCoefficients DamageCoefficients::from_constants(double depletion_volume,
                                                      double carrier_density,
                                                      double damage_coefficient) {
  DamageCoefficients c;
  c.depletion_volume = depletion_volume;
  c.intrinsic_carrier_density = carrier_density;
  c.damage_coefficient = damage_coefficient;
  c.slope = depletion_volume * carrier_density / (2.0 * damage_coefficient);
  validate_coefficients(c);
  return c;
}

void validate_coefficients(const DamageCoefficients& c) {
  if (!(c.slope > 0.0) || !std::isfinite(c.slope)) {
    throw Error(ErrorKind::validation, "damage slope must be positive");
  }
  if (!(c.slope_error >= 0.0)) throw Error(ErrorKind::validation, "slope error must be >= 0");
  for (const auto& v : {c.depletion_volume, c.intrinsic_carrier_density, c.damage_coefficient}) {
    if (v && !(*v > 0.0)) throw Error(ErrorKind::validation, "device constants must be positive");
  }
  if (c.depletion_volume && c.intrinsic_carrier_density && c.damage_coefficient) {
    const double implied =
        *c.depletion_volume * *c.intrinsic_carrier_density / (2.0 * *c.damage_coefficient);
    if (std::fabs(implied - c.slope) > 1e-9 * std::fabs(implied)) {
      throw Error(ErrorKind::validation, "slope disagrees with V n_i / (2 K)");
    }
  }
}

DcrPrediction predict_dcr(const DamageCoefficients& c, double ddd, std::string detector) {
  if (!(ddd >= 0.0)) throw Error(ErrorKind::validation, "displacement damage dose must be >= 0");
  return {std::move(detector), c.slope * ddd, ddd};
}

double dcr_ratio(const DcrPrediction& numerator, const DcrPrediction& denominator) {
  if (!(denominator.dose > 0.0) || !(denominator.delta_dcr > 0.0)) {
    throw Error(ErrorKind::validation, "ratio denominator has zero dose");
  }
  return numerator.delta_dcr / denominator.delta_dcr;
}

void validate_temp_model(const TempModel& m) {
  if (!(m.amplitude > 0.0)) throw Error(ErrorKind::validation, "temperature model amplitude must be > 0");
  if (!(m.rate > 0.0)) throw Error(ErrorKind::validation, "temperature model rate must be > 0");
}

TempModel fit_temp_model(const std::vector<TempSample>& samples, double reference_t) {
  if (samples.size() < 4) throw Error(ErrorKind::statistics, "temperature fit needs >= 4 samples");
  double t_min = samples.front().temperature;
  double t_max = t_min;
  for (const auto& s : samples) {
    if (!(s.dcr > 0.0)) throw Error(ErrorKind::validation, "non-positive DCR sample in temperature fit");
    t_min = std::min(t_min, s.temperature);
    t_max = std::max(t_max, s.temperature);
  }
  if (t_max - t_min < 3.0) {
    throw Error(ErrorKind::statistics, "temperature spread below 3 deg C");
  }
  const double n = static_cast<double>(samples.size());
  double mx = 0.0;
  double my = 0.0;
  for (const auto& s : samples) {
    mx += s.temperature - reference_t;
    my += std::log(s.dcr);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& s : samples) {
    const double dx = s.temperature - reference_t - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(s.dcr) - my);
  }
  TempModel m;
  m.reference_t = reference_t;
  m.rate = sxy / sxx;
  const double log_a = my - m.rate * mx;
  m.amplitude = std::exp(log_a);
  m.n_samples = samples.size();
  double ss = 0.0;
  for (const auto& s : samples) {
    const double r = std::log(s.dcr) - (log_a + m.rate * (s.temperature - reference_t));
    ss += r * r;
  }
  m.rms_log_residual = std::sqrt(ss / n);
  const double s2 = ss / (n - 2.0);
  m.rate_error = std::sqrt(s2 / sxx);
  m.log_amplitude_error = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
  if (!(m.rate > 0.0)) {
    throw Error(ErrorKind::statistics, "fitted temperature coefficient is not positive");
  }
  return m;
}

double normalize_dcr(const TempModel& m, double temperature, double dcr) {
  return normalize_dcr(m, temperature, dcr, m.reference_t);
}

double normalize_dcr(const TempModel& m, double temperature, double dcr, double target_t) {
  return dcr * std::exp(-m.rate * (temperature - target_t));
}

SlopeFit calibrate_slope(const std::vector<CalibrationPoint>& points) {
  if (points.size() < 3) throw Error(ErrorKind::statistics, "calibration needs >= 3 points");
  std::vector<double> doses;
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& p : points) {
    if (!(p.ddd >= 0.0)) throw Error(ErrorKind::validation, "negative calibration dose");
    doses.push_back(p.ddd);
    sxx += p.ddd * p.ddd;
    sxy += p.ddd * p.delta_dcr;
  }
  if (sxx == 0.0) throw Error(ErrorKind::statistics, "all calibration doses are zero");
  std::sort(doses.begin(), doses.end());
  if (std::adjacent_find(doses.begin(), doses.end()) != doses.end()) {
    throw Error(ErrorKind::validation, "calibration doses must be distinct");
  }
  SlopeFit fit;
  fit.n_points = points.size();
  fit.slope = sxy / sxx;
  double ss = 0.0;
  for (const auto& p : points) {
    const double r = p.delta_dcr - fit.slope * p.ddd;
    ss += r * r;
  }
  const double n = static_cast<double>(points.size());
  fit.rms_residual = std::sqrt(ss / n);
  fit.error = std::sqrt(ss / (n - 1.0) / sxx);
  return fit;
}

std::vector<CalibrationPoint> read_calibration(const std::filesystem::path& path) {
  const auto doc = csv::read(path);
  std::vector<CalibrationPoint> points;
  for (const auto& row : doc.rows) {
    if (row.fields.size() != 3) {
      throw Error(ErrorKind::parse, doc.source + ":" + std::to_string(row.line) +
                                        ": expected `ddd_MeV_g, delta_dcr_cps, group_label`");
    }
    if (points.empty() && csv::to_lower(row.fields[0]) == "ddd_mev_g") continue;
    points.push_back({csv::to_double(row.fields[0], doc.source, row.line),
                      csv::to_double(row.fields[1], doc.source, row.line), row.fields[2]});
  }
  return points;
}

}  // namespace satrad

#include <cmath>
#include <random>

#include "doctest.h"
#include "satrad/damage.hpp"
#include "satrad/error.hpp"
#include "satrad/rng.hpp"
#include "../support.hpp"

using namespace satrad;

namespace {

DamageCoefficients slope(double c) {
  DamageCoefficients k;
  k.slope = c;
  return k;
}

std::vector<TempSample> exponential_samples(double a, double b, double ref, double t_lo, double t_hi, int n,
                                            double noise, std::uint64_t seed) {
  Rng rng(seed, 0, 0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<TempSample> out;
  for (int i = 0; i < n; ++i) {
    const double t = t_lo + (t_hi - t_lo) * i / (n - 1.0);
    out.push_back({t, a * std::exp(b * (t - ref)) * (1.0 + noise * gauss(rng))});
  }
  return out;
}

}  // namespace

TEST_SUITE("damage") {

TEST_CASE("prediction is the slope times the dose") {
  CHECK(predict_dcr(slope(2.0), 0.0).delta_dcr == 0.0);
  CHECK(predict_dcr(slope(2.0), 3.0).delta_dcr == 6.0);
  const auto k = slope(0.2344);
  for (double a : {0.0, 0.5, 3.0, 1e3}) {
    CHECK(predict_dcr(k, a * 1.41e6).delta_dcr == doctest::Approx(a * predict_dcr(k, 1.41e6).delta_dcr).epsilon(1e-15));
  }
  const auto p = predict_dcr(k, 7.5, "APD2");
  CHECK(p.detector == "APD2");
  CHECK(p.dose == 7.5);
  CHECK_THROWS_AS(predict_dcr(k, -1.0), Error);
}

TEST_CASE("ratio of predictions is the ratio of doses") {
  const auto k = slope(0.37);
  CHECK(dcr_ratio(predict_dcr(k, 5.0), predict_dcr(k, 5.0)) == 1.0);
  const double r = dcr_ratio(predict_dcr(k, 1.41e6), predict_dcr(k, 0.89e6));
  CHECK(r == doctest::Approx(1.41 / 0.89).epsilon(1e-12));
  CHECK(std::round(r * 1000.0) / 1000.0 == doctest::Approx(1.584));
  CHECK(std::fabs(r - 1.58) <= 0.31);

  Rng rng(1, 1, 1);
  for (int i = 0; i < 100; ++i) {
    const double d1 = 1e6 * rng.uniform_open_zero();
    const double d2 = 1e6 * rng.uniform_open_zero();
    const double scale = 1e-3 + 1e3 * rng.uniform();
    CHECK(dcr_ratio(predict_dcr(k, d1), predict_dcr(k, d2)) == doctest::Approx(d1 / d2).epsilon(1e-12));
    const double r1 = dcr_ratio(predict_dcr(k, d1), predict_dcr(k, d2));
    const double r2 = dcr_ratio(predict_dcr(slope(0.37 * 0.5), d1), predict_dcr(slope(0.37 * 0.5), d2));
    CHECK(r1 == r2);  // halving is exact in binary
    const double r3 = dcr_ratio(predict_dcr(slope(0.37 * scale), d1), predict_dcr(slope(0.37 * scale), d2));
    CHECK(r3 == doctest::Approx(r1).epsilon(1e-12));
  }
  CHECK_THROWS_AS(dcr_ratio(predict_dcr(k, 1.0), predict_dcr(k, 0.0)), Error);
}

TEST_CASE("device constants reproduce the slope") {
  const auto k = DamageCoefficients::from_constants(2e-6, 1.5e10, 0.05);
  CHECK(k.slope == doctest::Approx(2e-6 * 1.5e10 / 0.1).epsilon(1e-12));
  CHECK_NOTHROW(validate_coefficients(k));
  auto bad = k;
  bad.slope *= 1.01;
  CHECK_THROWS_AS(validate_coefficients(bad), Error);
  CHECK_THROWS_AS(validate_coefficients(slope(0.0)), Error);
  auto partial = slope(1.0);
  partial.depletion_volume = 1e-6;  // incomplete constants are just metadata
  CHECK_NOTHROW(validate_coefficients(partial));
}

TEST_CASE("noiseless temperature fit is exact") {
  const auto samples = exponential_samples(1000.0, 0.08, 10.0, -5.0, 25.0, 20, 0.0, 0);
  const TempModel m = fit_temp_model(samples, 10.0);
  CHECK(m.amplitude == doctest::Approx(1000.0).epsilon(1e-9));
  CHECK(m.rate == doctest::Approx(0.08).epsilon(1e-9));
  CHECK(m.n_samples == 20);
  CHECK(m.rms_log_residual < 1e-9);
}

TEST_CASE("two percent noise recovers the model within one percent") {
  const auto samples = exponential_samples(1000.0, 0.08, 10.0, -5.0, 25.0, 50, 0.02, 42);
  const TempModel m = fit_temp_model(samples, 10.0);
  CHECK(m.amplitude == doctest::Approx(1000.0).epsilon(0.01));
  CHECK(m.rate == doctest::Approx(0.08).epsilon(0.01));
  CHECK(m.rate_error > 0.0);
  CHECK(m.log_amplitude_error > 0.0);
}

TEST_CASE("different temperature ranges normalise to the same level") {
  const auto cold = exponential_samples(1500.0, 0.08, 10.0, 0.0, 8.0, 40, 0.01, 1);
  const auto warm = exponential_samples(1500.0, 0.08, 10.0, 14.0, 24.0, 40, 0.01, 2);
  const TempModel a = fit_temp_model(cold, 10.0);
  const TempModel b = fit_temp_model(warm, 10.0);
  const double err = 1500.0 * std::hypot(a.log_amplitude_error, b.log_amplitude_error);
  CHECK(std::fabs(a.amplitude - b.amplitude) < 3.0 * err);
}

TEST_CASE("temperature normalisation") {
  TempModel m;
  m.amplitude = 1000.0;
  m.rate = 0.08;
  m.reference_t = 10.0;
  CHECK(normalize_dcr(m, 10.0, 1234.5) == 1234.5);
  CHECK(normalize_dcr(m, 20.0, 2225.5) == doctest::Approx(1000.0).epsilon(1e-4));
  for (double t : {-10.0, 3.3, 17.0, 40.0}) {
    const double dcr = 777.7;
    const double there = normalize_dcr(m, t, dcr);
    CHECK(normalize_dcr(m, 10.0, there, t) == doctest::Approx(dcr).epsilon(1e-12));
    for (double t1 : {-3.0, 12.0, 30.0}) {
      const double via = normalize_dcr(m, t1, normalize_dcr(m, t, dcr, t1), 25.0);
      CHECK(via == doctest::Approx(normalize_dcr(m, t, dcr, 25.0)).epsilon(1e-12));
    }
  }
}

TEST_CASE("temperature fit errors") {
  std::vector<TempSample> narrow{{10, 1}, {11, 2}, {12, 3}, {12.5, 4}};
  CHECK_THROWS_AS(fit_temp_model(narrow, 10.0), Error);
  std::vector<TempSample> few{{0, 1}, {10, 2}, {20, 3}};
  CHECK_THROWS_AS(fit_temp_model(few, 10.0), Error);
  std::vector<TempSample> nonpos{{0, 1}, {5, 2}, {10, 0}, {20, 3}};
  CHECK_THROWS_AS(fit_temp_model(nonpos, 10.0), Error);
}

TEST_CASE("zero-intercept calibration") {
  std::vector<CalibrationPoint> exact;
  for (double d : {1e5, 4e5, 9e5, 2e6}) exact.push_back({d, predict_dcr(slope(0.14), d).delta_dcr, "a"});
  const SlopeFit f = calibrate_slope(exact);
  CHECK(f.slope == doctest::Approx(0.14).epsilon(1e-9));
  CHECK(f.error == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(f.n_points == 4);

  Rng rng(9, 0, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const double c = 0.01 + rng.uniform();
    std::vector<CalibrationPoint> pts;
    for (int i = 1; i <= 6; ++i) {
      const double d = 1e5 * i * (1.0 + rng.uniform());
      pts.push_back({d, predict_dcr(slope(c), d).delta_dcr, "g"});
    }
    CHECK(calibrate_slope(pts).slope == doctest::Approx(c).epsilon(1e-9));
  }
}

TEST_CASE("calibration error grows with the injected spread") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    double prev = -1.0;
    for (double spread : {0.01, 0.05, 0.1, 0.2, 0.4}) {
      Rng rng(seed, 3, 0);
      std::normal_distribution<double> gauss(0.0, 1.0);
      std::vector<CalibrationPoint> pts;
      for (int i = 1; i <= 12; ++i) {
        const double d = 2e5 * i;
        pts.push_back({d, 0.25 * d * (1.0 + spread * gauss(rng)), "s"});
      }
      const double err = calibrate_slope(pts).error;
      CHECK(err > prev);
      prev = err;
    }
  }
}

TEST_CASE("shipped ground-test data set the scale") {
  const auto pts = read_calibration(test::data_path("calibration/ground_tests.csv"));
  REQUIRE(pts.size() >= 3);
  const SlopeFit f = calibrate_slope(pts);
  const double high = f.slope * 1.41e6;
  const double low = f.slope * 0.89e6;
  CHECK(high >= 300e3);
  CHECK(high <= 400e3);
  CHECK(low >= 150e3);
  CHECK(low <= 250e3);
}

TEST_CASE("calibration errors") {
  CHECK_THROWS_AS(calibrate_slope({{0, 1, "a"}, {0, 2, "a"}, {0, 3, "a"}}), Error);
  CHECK_THROWS_AS(calibrate_slope({{1, 1, "a"}, {2, 2, "a"}}), Error);
}

}  // TEST_SUITE

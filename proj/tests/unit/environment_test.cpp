#include <cmath>
#include <fstream>
#include <numeric>

#include "doctest.h"
#include "satrad/environment.hpp"
#include "satrad/error.hpp"
#include "../support.hpp"
#include "temp_dir.hpp"

using namespace satrad;

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

OrbitProfile flat_orbit(double altitude, double days = 800.0) {
  OrbitProfile o;
  o.altitude = {{0.0, altitude}, {days, altitude}};
  return o;
}

double band_fluence(const ParticleSpectrum& s, double lo, double hi) {
  // overlap-weighted, the parametric bins do not align with the band edges
  double f = 0.0;
  for (const auto& b : s.bins) {
    const double a = std::max(lo, b.e_low);
    const double c = std::min(hi, b.e_high);
    if (c > a) f += b.fluence * (c - a) / (b.e_high - b.e_low);
  }
  return f;
}

}  // namespace

TEST_SUITE("environment") {

TEST_CASE("constant differential flux integrates to flux x width x time") {
  test::TempDir dir("env");
  write_file(dir / "flat.csv",
             "# species: proton\n# kind: differential\n# duration_days: 30\n"
             "energy_MeV, flux\n1, 10\n3, 10\n");
  const auto segs = ingest_spectra({dir / "flat.csv"}, {{0.0, 100.0}});
  REQUIRE(segs.size() == 1);
  REQUIRE(segs[0].spectra.size() == 1);
  REQUIRE(segs[0].spectra[0].bins.size() == 1);
  CHECK(segs[0].spectra[0].bins[0].fluence == doctest::Approx(1.728e8).epsilon(1e-12));
}

TEST_CASE("integral spectrum is differenced into bins") {
  test::TempDir dir("env");
  write_file(dir / "int.csv",
             "# species: electron\n# kind: integral\n# duration_days: 100\n"
             "energy_MeV, fluence\n1, 100\n2, 40\n");
  const auto segs = ingest_spectra({dir / "int.csv"}, {{0.0, 100.0}});
  CHECK(segs[0].spectra[0].species == Species::electron);
  CHECK(segs[0].spectra[0].bins[0].fluence == doctest::Approx(60.0));
}

TEST_CASE("shipped spectrum files match an independent trapezoid sum") {
  const auto plan = equal_segments(600.0, 6);
  for (const std::string name : {"trapped_proton_410km.csv", "trapped_electron_410km.csv"}) {
    const auto path = test::data_path("spectra/" + name);
    const test::Rows rows = test::read_rows(path);
    REQUIRE(rows.e.size() > 10);
    double per_second = 0.0;
    for (std::size_t i = 0; i + 1 < rows.e.size(); ++i) {
      per_second += 0.5 * (rows.v[i] + rows.v[i + 1]) * (rows.e[i + 1] - rows.e[i]);
    }
    const auto segs = ingest_spectra({path}, plan);
    for (const auto& seg : segs) {
      const double expected = per_second * seg.duration_days() * 86400.0;
      CHECK(seg.spectra[0].total_fluence() == doctest::Approx(expected).epsilon(1e-3));
    }
  }
}

TEST_CASE("fluence additivity across segment plans") {
  const auto path = test::data_path("spectra/trapped_proton_410km.csv");
  const auto whole = ingest_spectra({path}, {{0.0, 600.0}});
  const auto parts = ingest_spectra({path}, equal_segments(600.0, 6));
  const auto& w = whole[0].spectra[0].bins;
  for (std::size_t b = 0; b < w.size(); ++b) {
    double sum = 0.0;
    for (const auto& seg : parts) sum += seg.spectra[0].bins[b].fluence;
    CHECK(sum == doctest::Approx(w[b].fluence).epsilon(1e-9));
  }
}

TEST_CASE("spectrum file errors") {
  test::TempDir dir("env_err");
  const std::vector<SegmentWindow> plan{{0.0, 10.0}};
  write_file(dir / "nonmono.csv", "# species: proton\n# kind: differential\n# duration_days: 1\n1, 1\n3, 1\n2, 1\n");
  write_file(dir / "neg.csv", "# species: proton\n# kind: differential\n# duration_days: 1\n1, 1\n2, -1\n");
  write_file(dir / "nospecies.csv", "# kind: differential\n# duration_days: 1\n1, 1\n2, 1\n");
  CHECK_THROWS_WITH_AS(ingest_spectra({dir / "nonmono.csv"}, plan), doctest::Contains(":6:"), Error);
  CHECK_THROWS_WITH_AS(ingest_spectra({dir / "neg.csv"}, plan), doctest::Contains("negative flux"), Error);
  CHECK_THROWS_WITH_AS(ingest_spectra({dir / "nospecies.csv"}, plan), doctest::Contains("species"), Error);

  CHECK_THROWS_WITH_AS(validate_plan({{0, 10}, {12, 20}}), doctest::Contains("gap"), Error);
  CHECK_THROWS_WITH_AS(validate_plan({{0, 10}, {8, 20}}), doctest::Contains("overlap"), Error);
  CHECK_THROWS_AS(validate_plan({{0, 10}, {10, 10}}), Error);
}

TEST_CASE("zero exposure gives zero fluence") {
  const auto s = parametric_spectrum(Species::proton, 410.0, 51.64, 0.0);
  CHECK_FALSE(s.bins.empty());
  for (const auto& b : s.bins) CHECK(b.fluence == 0.0);
}

TEST_CASE("parametric amplitude grows with altitude") {
  for (Species sp : {Species::proton, Species::electron}) {
    CHECK(parametric_amplitude(sp, 408.0, 51.64) > parametric_amplitude(sp, 300.0, 51.64));
    double prev = 0.0;
    for (double h = 300.0; h <= 500.0; h += 2.5) {
      const double total = parametric_spectrum(sp, h, 51.64, 100.0).total_fluence();
      CHECK(total >= prev);
      prev = total;
    }
  }
  CHECK_THROWS_AS(parametric_amplitude(Species::proton, 90.0, 51.64), Error);
  CHECK_THROWS_AS(parametric_amplitude(Species::proton, 2500.0, 51.64), Error);
}

TEST_CASE("parametric electrons are soft and protons hard") {
  const auto e = parametric_spectrum(Species::electron, 410.0, 51.64, 100.0);
  const double total = e.total_fluence();
  const double b0 = band_fluence(e, 0.0, 2.0) / total;
  const double b1 = band_fluence(e, 2.0, 3.0) / total;
  const double b2 = band_fluence(e, 3.0, 7.0) / total;
  CHECK(b0 > b1);
  CHECK(b1 > b2);
  CHECK(b2 > 0.0);

  const auto p = parametric_spectrum(Species::proton, 410.0, 51.64, 100.0);
  CHECK(p.bins.back().e_high >= 400.0);
  CHECK(ParametricModel::defaults().electron.e_fold_mev < ParametricModel::defaults().proton.e_fold_mev);
  validate_spectrum(e);
  validate_spectrum(p);
}

TEST_CASE("parametric bins integrate the exponential exactly") {
  const auto& pm = ParametricModel::defaults().proton;
  const auto s = parametric_spectrum(Species::proton, 410.0, 51.64, 10.0);
  const double phi0 = parametric_amplitude(Species::proton, 410.0, 51.64);
  const double sec = 10.0 * 86400.0;
  const double e0 = pm.e_fold_mev;
  for (const auto& b : s.bins) {
    const double exact = phi0 * e0 * (std::exp(-b.e_low / e0) - std::exp(-b.e_high / e0)) * sec;
    CHECK(b.fluence == doctest::Approx(exact).epsilon(1e-9));
  }
}

TEST_CASE("six hundred days in six segments") {
  SpectrumSource src;
  const auto segs = segment_mission(flat_orbit(410.0), 6, 600.0, src);
  REQUIRE(segs.size() == 6);
  double total = 0.0;
  for (std::size_t k = 0; k < 6; ++k) {
    CHECK(segs[k].index == k);
    CHECK(segs[k].start_day == doctest::Approx(100.0 * k));
    CHECK(segs[k].end_day == doctest::Approx(100.0 * (k + 1)));
    CHECK(segs[k].mean_altitude_km == segs[0].mean_altitude_km);
    CHECK(segs[k].spectra.size() == 2);
    total += segs[k].duration_days();
    for (const auto& sp : segs[k].spectra) {
      for (const auto& b : sp.bins) CHECK(b.fluence >= 0.0);
    }
  }
  CHECK(total == 600.0);

  // uneven split still partitions exactly
  const auto plan = equal_segments(700.0, 3);
  CHECK(plan.back().end_day == 700.0);
  CHECK(plan[1].start_day == plan[0].end_day);
}

TEST_CASE("decaying profile: later segments sit lower and see less fluence") {
  const OrbitProfile orbit = load_orbit_profile(test::data_path("orbit/spooqy_like_altitude.csv"));
  SpectrumSource src;
  const auto segs = segment_mission(orbit, 6, 600.0, src);
  for (std::size_t k = 1; k < segs.size(); ++k) {
    CHECK(segs[k].mean_altitude_km < segs[k - 1].mean_altitude_km);
  }
  for (std::size_t sp = 0; sp < 2; ++sp) {
    CHECK(segs[5].spectra[sp].total_fluence() < segs[4].spectra[sp].total_fluence());
    CHECK(segs[4].spectra[sp].total_fluence() < segs[3].spectra[sp].total_fluence());
  }
}

TEST_CASE("mean altitude is the exact time average") {
  OrbitProfile o;
  o.altitude = {{0, 400}, {100, 300}, {200, 300}};
  CHECK(o.mean_altitude(0, 100) == doctest::Approx(350.0));
  CHECK(o.mean_altitude(50, 150) == doctest::Approx((0.5 * (350 + 300) * 50 + 300 * 50) / 100.0));
  CHECK(o.altitude_at(25) == doctest::Approx(375.0));
  CHECK_THROWS_AS(o.altitude_at(250), Error);
}

TEST_CASE("orbit errors") {
  SpectrumSource src;
  CHECK_THROWS_AS(segment_mission(flat_orbit(410.0, 300.0), 6, 600.0, src), Error);
  CHECK_THROWS_AS(segment_mission(flat_orbit(410.0), 6, 0.0, src), Error);
  CHECK_THROWS_AS(segment_mission(flat_orbit(410.0), 0, 600.0, src), Error);
  OrbitProfile bad = flat_orbit(50.0);
  CHECK_THROWS_AS(validate_orbit(bad), Error);
  OrbitProfile back;
  back.altitude = {{10, 400}, {5, 400}};
  CHECK_THROWS_AS(validate_orbit(back), Error);
}

TEST_CASE("ingested source and parametric extras") {
  const OrbitProfile orbit = flat_orbit(410.0);
  SpectrumSource files;
  files.kind = SpectrumSource::Kind::ingested;
  files.files = {test::data_path("spectra/trapped_proton_410km.csv"),
                 test::data_path("spectra/solar_proton_min.csv")};
  const auto segs = segment_mission(orbit, 6, 600.0, files);
  REQUIRE(segs[0].spectra.size() == 2);
  CHECK(segs[0].spectra[1].source == SourceKind::solar);

  SpectrumSource mixed;
  mixed.files = {test::data_path("spectra/cosmic_proton_min.csv")};
  const auto m = segment_mission(orbit, 6, 600.0, mixed);
  REQUIRE(m[0].spectra.size() == 3);
  CHECK(m[0].spectra[2].source == SourceKind::cosmic);
}

}  // TEST_SUITE

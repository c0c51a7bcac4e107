#include "satrad/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "satrad/error.hpp"

namespace satrad {

namespace {

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorKind::parse, std::string("report is missing `") + key + "`");
  }
  return j.at(key);
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

Json to_json(const Estimate& e) { return Json{{"value", e.value}, {"error", e.error}}; }

Estimate estimate_from_json(const Json& j) {
  return {field(j, "value").get<double>(), field(j, "error").get<double>()};
}

Json to_json(const ParticleSpectrum& spectrum) {
  Json bins = Json::array();
  for (const auto& b : spectrum.bins) bins.push_back(Json::array({b.e_low, b.e_high, b.fluence}));
  return Json{{"species", to_string(spectrum.species)},
              {"source", to_string(spectrum.source)},
              {"total_fluence_cm2", spectrum.total_fluence()},
              {"bins_mev_fluence", bins}};
}

ParticleSpectrum spectrum_from_json(const Json& j) {
  ParticleSpectrum s;
  s.species = parse_species(field(j, "species").get<std::string>());
  s.source = parse_source(field(j, "source").get<std::string>());
  for (const auto& b : field(j, "bins_mev_fluence")) {
    s.bins.push_back({b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>()});
  }
  validate_spectrum(s);
  return s;
}

Json to_json(const MissionSegment& segment) {
  Json spectra = Json::array();
  for (const auto& s : segment.spectra) spectra.push_back(to_json(s));
  return Json{{"index", segment.index},
              {"start_day", segment.start_day},
              {"end_day", segment.end_day},
              {"mean_altitude_km", segment.mean_altitude_km},
              {"spectra", spectra}};
}

MissionSegment segment_from_json(const Json& j) {
  MissionSegment s;
  s.index = field(j, "index").get<std::size_t>();
  s.start_day = field(j, "start_day").get<double>();
  s.end_day = field(j, "end_day").get<double>();
  s.mean_altitude_km = field(j, "mean_altitude_km").get<double>();
  for (const auto& sp : field(j, "spectra")) s.spectra.push_back(spectrum_from_json(sp));
  return s;
}

Json to_json(const TallyResult& tally) {
  Json spectra = Json::array();
  for (const auto& s : tally.spectra) {
    Json bands = Json::array();
    for (const auto& b : s.bands) {
      bands.push_back(Json{{"band_mev", b.band},
                           {"dose_rad", to_json(b.dose_rad)},
                           {"ddd_mev_g", to_json(b.ddd)},
                           {"hits", b.hits}});
    }
    spectra.push_back(Json{{"species", to_string(s.species)},
                           {"source", to_string(s.source)},
                           {"biasing", s.biasing == BiasingConfig::Mode::cone ? "cone" : "none"},
                           {"n_primaries", s.n_primaries},
                           {"hits", s.hits},
                           {"fluence_cm2", s.fluence},
                           {"dose_rad", to_json(s.dose_rad)},
                           {"ddd_mev_g", to_json(s.ddd)},
                           {"track_length_cm3", to_json(s.track_length)},
                           {"energy_mev", to_json(s.energy)},
                           {"bands", bands}});
  }
  return Json{{"detector", tally.detector},
              {"mass_g", tally.mass},
              {"n_primaries", tally.n_primaries},
              {"hits", tally.hits},
              {"dose_rad", to_json(tally.total_dose())},
              {"ddd_mev_g", to_json(tally.total_ddd())},
              {"spectra", spectra}};
}

Json to_json(const std::vector<CumulativeSeries>& series) {
  Json out = Json::array();
  for (const auto& s : series) {
    Json points = Json::array();
    for (const auto& p : s.points) {
      points.push_back(Json{{"segment", p.segment},
                            {"end_day", p.end_day},
                            {"dose_rad", to_json(p.dose_rad)},
                            {"ddd_mev_g", to_json(p.ddd)},
                            {"ddd_increment_mev_g", to_json(p.ddd_increment)}});
    }
    out.push_back(Json{{"detector", s.detector}, {"points", points}});
  }
  return out;
}

std::vector<CumulativeSeries> cumulative_from_json(const Json& j) {
  std::vector<CumulativeSeries> out;
  for (const auto& s : j) {
    CumulativeSeries cs;
    cs.detector = field(s, "detector").get<std::string>();
    for (const auto& p : field(s, "points")) {
      CumulativePoint cp;
      cp.segment = field(p, "segment").get<std::size_t>();
      cp.end_day = field(p, "end_day").get<double>();
      cp.dose_rad = estimate_from_json(field(p, "dose_rad"));
      cp.ddd = estimate_from_json(field(p, "ddd_mev_g"));
      cp.ddd_increment = estimate_from_json(field(p, "ddd_increment_mev_g"));
      cs.points.push_back(cp);
    }
    out.push_back(std::move(cs));
  }
  return out;
}

Json to_json(const CompareReport& report) {
  Json segments = Json::array();
  for (const auto& s : report.segments) {
    Json measured = nullptr;
    if (s.measured) measured = Json{{"value", *s.measured}, {"error", s.measured_error}};
    segments.push_back(Json{{"segment", s.segment},
                            {"start_day", s.start_day},
                            {"end_day", s.end_day},
                            {"measured_dcr_ratio", measured},
                            {"simulated_ddd_ratio", Json{{"value", s.simulated}, {"error", s.simulated_error}}},
                            {"status", to_string(s.status)},
                            {"low_data", s.low_data}});
  }
  const auto& t = report.trend;
  Json detectors = Json::object();
  for (const auto& [id, slope] : t.early_slope) detectors[id]["early_slope_cps_per_day"] = slope;
  for (const auto& [id, slope] : t.late_slope) detectors[id]["late_slope_cps_per_day"] = slope;
  for (const auto& [id, lev] : t.measured_leveling) detectors[id]["leveling_off"] = lev;
  return Json{{"segments", segments},
              {"trend",
               Json{{"breakpoint_day", t.breakpoint_day},
                    {"simulated_ddd_increments_mev_g", t.increments},
                    {"simulated_leveling_off", t.simulated_leveling},
                    {"measured", detectors}}}};
}

std::string tallies_csv(const std::vector<SegmentTally>& segments) {
  std::string out =
      "segment, detector, species, source, band_mev, dose_rad, dose_rad_error, ddd_mev_g, "
      "ddd_mev_g_error, hits\n";
  for (const auto& seg : segments) {
    for (const auto& d : seg.detectors) {
      for (const auto& s : d.spectra) {
        for (const auto& b : s.bands) {
          out += std::to_string(seg.segment) + ", " + d.detector + ", " + to_string(s.species) +
                 ", " + to_string(s.source) + ", " + b.band + ", " + num(b.dose_rad.value) + ", " +
                 num(b.dose_rad.error) + ", " + num(b.ddd.value) + ", " + num(b.ddd.error) + ", " +
                 std::to_string(b.hits) + "\n";
        }
      }
    }
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const Json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Json read_json(const std::filesystem::path& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::parse, path.string() + ": " + e.what());
  }
}

}  // namespace satrad

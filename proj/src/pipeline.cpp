#include "satrad/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

#include "satrad/damage.hpp"
#include "satrad/error.hpp"
#include "satrad/plot.hpp"

namespace satrad {

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Config parsing

void check_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw Error(ErrorKind::config, where + " must be an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || item.key() == a;
    if (!known) throw Error(ErrorKind::config, "unknown config key `" + where + "." + item.key() + "`");
  }
}

template <class T>
T get_or(const Json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::config, "config key `" + where + "." + key + "` has the wrong type");
  }
}

fs::path resolve(const fs::path& base, const Json& j, const char* key, const std::string& where) {
  const auto text = get_or<std::string>(j, key, "", where);
  if (text.empty()) return {};
  fs::path p(text);
  if (p.is_relative()) p = base / p;
  return fs::absolute(p).lexically_normal();
}

ParametricSpeciesModel species_model(const Json& j, ParametricSpeciesModel m, const std::string& where) {
  check_keys(j, where,
             {"flux_at_reference", "reference_altitude_km", "scale_height_km", "e_fold_mev",
              "grid_min_mev", "grid_max_mev", "bins"});
  m.flux_at_reference = get_or(j, "flux_at_reference", m.flux_at_reference, where);
  m.reference_altitude_km = get_or(j, "reference_altitude_km", m.reference_altitude_km, where);
  m.scale_height_km = get_or(j, "scale_height_km", m.scale_height_km, where);
  m.e_fold_mev = get_or(j, "e_fold_mev", m.e_fold_mev, where);
  m.grid_min_mev = get_or(j, "grid_min_mev", m.grid_min_mev, where);
  m.grid_max_mev = get_or(j, "grid_max_mev", m.grid_max_mev, where);
  m.bins = get_or(j, "bins", m.bins, where);
  return m;
}

Json species_model_json(const ParametricSpeciesModel& m) {
  return Json{{"flux_at_reference", m.flux_at_reference},
              {"reference_altitude_km", m.reference_altitude_km},
              {"scale_height_km", m.scale_height_km},
              {"e_fold_mev", m.e_fold_mev},
              {"grid_min_mev", m.grid_min_mev},
              {"grid_max_mev", m.grid_max_mev},
              {"bins", m.bins}};
}

Json path_json(const fs::path& p) { return p.empty() ? Json(nullptr) : Json(p.generic_string()); }

const Json kEmpty = Json::object();

const Json& section(const Json& doc, const char* key) {
  if (!doc.contains(key) || doc.at(key).is_null()) return kEmpty;
  return doc.at(key);
}

// ---------------------------------------------------------------------------
// Bundle helpers

fs::path stage_dir(const RunConfig& config, Stage stage) { return config.output / to_string(stage); }

void require_output(const RunConfig& config) {
  if (config.output.empty()) throw Error(ErrorKind::config, "no output directory (set `output` or --out)");
}

void claim_stage_dir(const RunConfig& config, Stage stage, bool force) {
  const fs::path dir = stage_dir(config, stage);
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!force) {
      throw Error(ErrorKind::config,
                  "output directory " + dir.string() + " is not empty; pass --force to overwrite");
    }
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
}

void log_line(const RunContext& ctx, const std::string& line) {
  if (ctx.log != nullptr) *ctx.log << line << '\n';
}

using Clock = std::chrono::steady_clock;

// Wall time is kept under logs/, outside the reproducible bundle.
void record_timing(const RunConfig& config, Stage stage, Clock::time_point start) {
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  const fs::path path = config.output / "logs" / "timing.json";
  Json doc = Json::object();
  if (fs::exists(path)) {
    try {
      doc = read_json(path);
    } catch (const Error&) {
      doc = Json::object();
    }
  }
  doc[to_string(stage)] = Json{{"wall_seconds", seconds}, {"workers", config.workers}};
  write_json(path, doc);
}

void write_effective_config(const RunConfig& config) {
  write_json(config.output / "effective_config.json", effective_config(config));
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::vector<MissionSegment> read_segments(const RunConfig& config) {
  const fs::path path = stage_dir(config, Stage::env) / "segments.json";
  if (!fs::exists(path)) throw Error(ErrorKind::io, path.string() + " not found; run `env` first");
  const Json doc = read_json(path);
  std::vector<MissionSegment> segments;
  for (const auto& s : doc.at("segments")) segments.push_back(segment_from_json(s));
  return segments;
}

void check_plan(const RunConfig& config, const std::vector<SegmentWindow>& plan, const std::string& what) {
  const auto expected = equal_segments(config.mission_days, config.segments);
  bool same = expected.size() == plan.size();
  for (std::size_t k = 0; same && k < plan.size(); ++k) {
    same = expected[k].start_day == plan[k].start_day && expected[k].end_day == plan[k].end_day;
  }
  if (!same) {
    throw Error(ErrorKind::validation, "segment-plan mismatch between " + what + " and the run config");
  }
}

std::vector<SegmentWindow> windows(const std::vector<MissionSegment>& segments) {
  std::vector<SegmentWindow> plan;
  for (const auto& s : segments) plan.push_back({s.start_day, s.end_day});
  return plan;
}

std::vector<CumulativeSeries> read_cumulative(const RunConfig& config) {
  const fs::path path = stage_dir(config, Stage::transport) / "cumulative.json";
  if (!fs::exists(path)) throw Error(ErrorKind::io, path.string() + " not found; run `transport` first");
  return cumulative_from_json(read_json(path).at("detectors"));
}

}  // namespace

// ---------------------------------------------------------------------------

const char* to_string(Stage stage) {
  switch (stage) {
    case Stage::env: return "env";
    case Stage::transport: return "transport";
    case Stage::damage: return "damage";
    case Stage::compare: return "compare";
  }
  return "env";
}

RunConfig parse_config(const Json& doc, const fs::path& base_dir) {
  check_keys(doc, "config",
             {"scene", "materials", "tables", "orbit", "mission", "spectra", "transport", "damage",
              "analysis", "output"});
  RunConfig c;
  c.scene = resolve(base_dir, doc, "scene", "config");
  c.materials = resolve(base_dir, doc, "materials", "config");
  c.tables = resolve(base_dir, doc, "tables", "config");
  c.output = resolve(base_dir, doc, "output", "config");

  const Json& orbit = section(doc, "orbit");
  check_keys(orbit, "orbit", {"profile", "inclination_deg", "raan_deg", "arg_perigee_deg"});
  c.orbit_profile = resolve(base_dir, orbit, "profile", "orbit");
  c.inclination_deg = get_or(orbit, "inclination_deg", c.inclination_deg, "orbit");
  c.raan_deg = get_or(orbit, "raan_deg", c.raan_deg, "orbit");
  c.arg_perigee_deg = get_or(orbit, "arg_perigee_deg", c.arg_perigee_deg, "orbit");

  const Json& mission = section(doc, "mission");
  check_keys(mission, "mission", {"days", "segments"});
  c.mission_days = get_or(mission, "days", c.mission_days, "mission");
  c.segments = get_or(mission, "segments", c.segments, "mission");

  const Json& spectra = section(doc, "spectra");
  check_keys(spectra, "spectra", {"source", "species", "files", "model"});
  const auto kind = get_or<std::string>(spectra, "source", "parametric", "spectra");
  if (kind == "parametric") {
    c.spectra.kind = SpectrumSource::Kind::parametric;
  } else if (kind == "files") {
    c.spectra.kind = SpectrumSource::Kind::ingested;
  } else {
    throw Error(ErrorKind::config, "spectra.source must be `parametric` or `files`");
  }
  if (spectra.contains("species")) {
    c.spectra.species.clear();
    for (const auto& s : spectra.at("species")) c.spectra.species.push_back(parse_species(s.get<std::string>()));
  }
  if (spectra.contains("files")) {
    for (const auto& f : spectra.at("files")) {
      fs::path p(f.get<std::string>());
      if (p.is_relative()) p = base_dir / p;
      c.spectra.files.push_back(fs::absolute(p).lexically_normal());
    }
  }
  const Json& model = section(spectra, "model");
  check_keys(model, "spectra.model",
             {"reference_inclination_deg", "trapped_latitude_deg", "proton", "electron"});
  auto& m = c.spectra.model;
  m.reference_inclination_deg = get_or(model, "reference_inclination_deg", m.reference_inclination_deg, "spectra.model");
  m.trapped_latitude_deg = get_or(model, "trapped_latitude_deg", m.trapped_latitude_deg, "spectra.model");
  m.proton = species_model(section(model, "proton"), m.proton, "spectra.model.proton");
  m.electron = species_model(section(model, "electron"), m.electron, "spectra.model.electron");

  const Json& tr = section(doc, "transport");
  check_keys(tr, "transport", {"n_primaries", "seed", "workers", "chunk_size", "biasing", "bands"});
  c.transport.n_primaries = get_or(tr, "n_primaries", c.transport.n_primaries, "transport");
  if (tr.contains("seed") && !tr.at("seed").is_null()) c.seed = get_or<std::uint64_t>(tr, "seed", 0, "transport");
  c.workers = get_or(tr, "workers", c.workers, "transport");
  c.transport.chunk_size = get_or(tr, "chunk_size", c.transport.chunk_size, "transport");
  const Json& bias = section(tr, "biasing");
  check_keys(bias, "transport.biasing", {"mode", "cone_half_angle_deg", "target_detector"});
  const auto mode = get_or<std::string>(bias, "mode", "cone", "transport.biasing");
  if (mode == "cone") {
    c.transport.biasing.mode = BiasingConfig::Mode::cone;
  } else if (mode == "none") {
    c.transport.biasing.mode = BiasingConfig::Mode::none;
  } else {
    throw Error(ErrorKind::config, "transport.biasing.mode must be `cone` or `none`");
  }
  c.cone_half_angle_deg = get_or(bias, "cone_half_angle_deg", c.cone_half_angle_deg, "transport.biasing");
  c.transport.biasing.target_detector = get_or<std::string>(bias, "target_detector", "", "transport.biasing");
  const Json& bands = section(tr, "bands");
  check_keys(bands, "transport.bands", {"electron", "proton"});
  c.transport.electron_band_edges =
      get_or(bands, "electron", default_bands(Species::electron).edges, "transport.bands");
  c.transport.proton_band_edges =
      get_or(bands, "proton", default_bands(Species::proton).edges, "transport.bands");
  validate_bands({c.transport.electron_band_edges});
  validate_bands({c.transport.proton_band_edges});

  const Json& dmg = section(doc, "damage");
  check_keys(dmg, "damage", {"slope", "slope_error", "calibration"});
  if (dmg.contains("slope") && !dmg.at("slope").is_null()) c.slope = get_or(dmg, "slope", 0.0, "damage");
  c.slope_error = get_or(dmg, "slope_error", c.slope_error, "damage");
  c.calibration = resolve(base_dir, dmg, "calibration", "damage");

  const Json& an = section(doc, "analysis");
  check_keys(an, "analysis",
             {"telemetry", "numerator", "denominator", "reference_t_c", "epoch_gap_days", "pool_rate",
              "baseline_days", "min_samples", "agreement_sigma", "ratio_systematic_rel",
              "breakpoint_day"});
  c.telemetry = resolve(base_dir, an, "telemetry", "analysis");
  c.ratio.numerator = get_or(an, "numerator", c.ratio.numerator, "analysis");
  c.ratio.denominator = get_or(an, "denominator", c.ratio.denominator, "analysis");
  c.temperature.reference_t = get_or(an, "reference_t_c", c.temperature.reference_t, "analysis");
  c.temperature.epoch_gap_days = get_or(an, "epoch_gap_days", c.temperature.epoch_gap_days, "analysis");
  c.temperature.pool_rate = get_or(an, "pool_rate", c.temperature.pool_rate, "analysis");
  c.ratio.baseline_days = get_or(an, "baseline_days", c.ratio.baseline_days, "analysis");
  c.ratio.min_samples = get_or(an, "min_samples", c.ratio.min_samples, "analysis");
  c.compare.agreement_sigma = get_or(an, "agreement_sigma", c.compare.agreement_sigma, "analysis");
  c.compare.ratio_systematic_rel =
      get_or(an, "ratio_systematic_rel", c.compare.ratio_systematic_rel, "analysis");
  if (an.contains("breakpoint_day") && !an.at("breakpoint_day").is_null()) {
    c.breakpoint_day = get_or(an, "breakpoint_day", 0.0, "analysis");
  }

  if (!(c.mission_days > 0.0)) throw Error(ErrorKind::config, "mission.days must be > 0");
  if (c.segments == 0) throw Error(ErrorKind::config, "mission.segments must be >= 1");
  if (c.workers == 0) throw Error(ErrorKind::config, "transport.workers must be >= 1");
  if (!(c.cone_half_angle_deg > 0.0 && c.cone_half_angle_deg <= 180.0)) {
    throw Error(ErrorKind::config, "transport.biasing.cone_half_angle_deg must lie in (0, 180]");
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  const Json doc = read_json(path);
  return parse_config(doc, fs::absolute(path).parent_path());
}

Json effective_config(const RunConfig& c) {
  Json files = Json::array();
  for (const auto& f : c.spectra.files) files.push_back(f.generic_string());
  Json species = Json::array();
  for (Species s : c.spectra.species) species.push_back(to_string(s));
  const auto& m = c.spectra.model;
  return Json{
      {"scene", path_json(c.scene)},
      {"materials", path_json(c.materials)},
      {"tables", path_json(c.tables)},
      {"orbit",
       Json{{"profile", path_json(c.orbit_profile)},
            {"inclination_deg", c.inclination_deg},
            {"raan_deg", c.raan_deg},
            {"arg_perigee_deg", c.arg_perigee_deg}}},
      {"mission", Json{{"days", c.mission_days}, {"segments", c.segments}}},
      {"spectra",
       Json{{"source", c.spectra.kind == SpectrumSource::Kind::parametric ? "parametric" : "files"},
            {"species", species},
            {"files", files},
            {"model",
             Json{{"reference_inclination_deg", m.reference_inclination_deg},
                  {"trapped_latitude_deg", m.trapped_latitude_deg},
                  {"proton", species_model_json(m.proton)},
                  {"electron", species_model_json(m.electron)}}}}},
      {"transport",
       Json{{"n_primaries", c.transport.n_primaries},
            {"seed", c.seed ? Json(*c.seed) : Json(nullptr)},
            {"chunk_size", c.transport.chunk_size},
            {"biasing",
             Json{{"mode", c.transport.biasing.mode == BiasingConfig::Mode::cone ? "cone" : "none"},
                  {"cone_half_angle_deg", c.cone_half_angle_deg},
                  {"target_detector", c.transport.biasing.target_detector}}},
            {"bands",
             Json{{"electron", c.transport.electron_band_edges},
                  {"proton", c.transport.proton_band_edges}}}}},
      {"damage",
       Json{{"slope", c.slope ? Json(*c.slope) : Json(nullptr)},
            {"slope_error", c.slope_error},
            {"calibration", path_json(c.calibration)}}},
      {"analysis",
       Json{{"telemetry", path_json(c.telemetry)},
            {"numerator", c.ratio.numerator},
            {"denominator", c.ratio.denominator},
            {"reference_t_c", c.temperature.reference_t},
            {"epoch_gap_days", c.temperature.epoch_gap_days},
            {"pool_rate", c.temperature.pool_rate},
            {"baseline_days", c.ratio.baseline_days},
            {"min_samples", c.ratio.min_samples},
            {"agreement_sigma", c.compare.agreement_sigma},
            {"ratio_systematic_rel", c.compare.ratio_systematic_rel},
            {"breakpoint_day", c.breakpoint_day ? Json(*c.breakpoint_day) : Json(nullptr)}}}};
}

void validate_config(const RunConfig& c, Stage stage) {
  auto need = [](const fs::path& p, const char* what) {
    if (p.empty()) throw Error(ErrorKind::config, std::string("config lacks ") + what);
    if (!fs::exists(p)) throw Error(ErrorKind::io, std::string(what) + " not found: " + p.string());
  };
  require_output(c);
  switch (stage) {
    case Stage::env:
      need(c.orbit_profile, "orbit.profile");
      for (const auto& f : c.spectra.files) need(f, "spectrum file");
      if (c.spectra.kind == SpectrumSource::Kind::ingested && c.spectra.files.empty()) {
        throw Error(ErrorKind::config, "spectra.source `files` needs at least one file");
      }
      break;
    case Stage::transport:
      need(c.scene, "scene");
      need(c.materials, "materials");
      need(c.tables, "tables");
      if (!c.seed) throw Error(ErrorKind::config, "transport.seed must be set explicitly (or --seed)");
      break;
    case Stage::damage:
      if (!c.slope && c.calibration.empty()) {
        throw Error(ErrorKind::config, "damage stage needs damage.calibration or an explicit damage.slope");
      }
      if (!c.slope) need(c.calibration, "damage.calibration");
      break;
    case Stage::compare:
      need(c.telemetry, "analysis.telemetry");
      need(c.orbit_profile, "orbit.profile");
      break;
  }
}

// ---------------------------------------------------------------------------
// Stages

void cmd_env(const RunConfig& config, const RunContext& ctx) {
  const auto start = Clock::now();
  validate_config(config, Stage::env);
  const OrbitProfile orbit = load_orbit_profile(config.orbit_profile, config.inclination_deg,
                                                config.raan_deg, config.arg_perigee_deg);
  const auto segments = segment_mission(orbit, config.segments, config.mission_days, config.spectra);
  claim_stage_dir(config, Stage::env, ctx.force);

  Json list = Json::array();
  std::string csv = "segment, species, source, e_low_mev, e_high_mev, fluence_cm2\n";
  for (const auto& s : segments) {
    list.push_back(to_json(s));
    for (const auto& sp : s.spectra) {
      for (const auto& b : sp.bins) {
        csv += std::to_string(s.index) + ", " + to_string(sp.species) + ", " + to_string(sp.source) +
               ", " + fmt(b.e_low) + ", " + fmt(b.e_high) + ", " + fmt(b.fluence) + "\n";
      }
    }
  }
  const fs::path dir = stage_dir(config, Stage::env);
  write_json(dir / "segments.json",
             Json{{"mission_days", config.mission_days},
                  {"inclination_deg", orbit.inclination_deg},
                  {"raan_deg", orbit.raan_deg},
                  {"arg_perigee_deg", orbit.arg_perigee_deg},
                  {"segments", list}});
  write_text(dir / "spectra.csv", csv);
  write_effective_config(config);
  record_timing(config, Stage::env, start);
  log_line(ctx, "env: " + std::to_string(segments.size()) + " segments");
}

void cmd_transport(const RunConfig& config, const RunContext& ctx) {
  const auto start = Clock::now();
  validate_config(config, Stage::transport);
  const auto segments = read_segments(config);
  check_plan(config, windows(segments), "segments.json");
  const Scene scene = load_scene(config.scene, config.materials);
  const PhysicsLibrary physics = load_physics(config.tables);
  claim_stage_dir(config, Stage::transport, ctx.force);

  TallyOptions options = config.transport;
  options.seed = *config.seed;
  options.workers = config.workers;
  options.biasing.cone_half_angle = config.cone_half_angle_deg * std::numbers::pi / 180.0;

  Json versions = Json::object();
  for (const auto& [file, version] : physics.versions) versions[file] = version;

  const fs::path dir = stage_dir(config, Stage::transport);
  std::vector<SegmentTally> tallies;
  for (const auto& seg : segments) {
    TallyDiagnostics diag;
    SegmentTally t;
    t.segment = seg.index;
    t.start_day = seg.start_day;
    t.end_day = seg.end_day;
    t.detectors = run_tally(scene, seg, physics, options, &diag);
    Json detectors = Json::array();
    for (const auto& d : t.detectors) detectors.push_back(to_json(d));
    char name[32];
    std::snprintf(name, sizeof name, "segment_%02zu.json", seg.index);
    write_json(dir / name,
               Json{{"segment", seg.index},
                    {"start_day", seg.start_day},
                    {"end_day", seg.end_day},
                    {"mean_altitude_km", seg.mean_altitude_km},
                    {"provenance",
                     Json{{"seed", options.seed},
                          {"n_primaries_per_spectrum", options.n_primaries},
                          {"chunk_size", options.chunk_size},
                          {"biasing", options.biasing.mode == BiasingConfig::Mode::cone ? "cone" : "none"},
                          {"table_versions", versions},
                          {"errors", "one standard error, statistical only"}}},
                    {"diagnostics",
                     Json{{"out_of_range", diag.out_of_range}, {"niel_clamped", diag.niel_clamped}}},
                    {"detectors", detectors}});
    log_line(ctx, "transport: segment " + std::to_string(seg.index) + " done");
    tallies.push_back(std::move(t));
  }

  const auto cumulative = accumulate_mission(tallies);
  write_json(dir / "cumulative.json", Json{{"detectors", to_json(cumulative)}});
  write_text(dir / "tallies.csv", tallies_csv(tallies));

  std::string csv = "detector, segment, end_day, dose_rad, dose_rad_error, ddd_mev_g, ddd_mev_g_error\n";
  std::vector<PlotSeries> plot;
  for (const auto& s : cumulative) {
    PlotSeries ps{s.detector, {}, {}, {}, true};
    for (const auto& p : s.points) {
      csv += s.detector + ", " + std::to_string(p.segment) + ", " + fmt(p.end_day) + ", " +
             fmt(p.dose_rad.value) + ", " + fmt(p.dose_rad.error) + ", " + fmt(p.ddd.value) + ", " +
             fmt(p.ddd.error) + "\n";
      ps.x.push_back(p.end_day);
      ps.y.push_back(p.ddd.value);
      ps.y_error.push_back(p.ddd.error);
    }
    plot.push_back(std::move(ps));
  }
  write_text(dir / "cumulative.csv", csv);
  write_text(dir / "cumulative_ddd.svg",
             render_svg({"Cumulative displacement damage dose", "mission day", "DDD (MeV/g)"}, plot));
  write_effective_config(config);
  record_timing(config, Stage::transport, start);
}

void cmd_damage(const RunConfig& config, const RunContext& ctx) {
  const auto start = Clock::now();
  validate_config(config, Stage::damage);
  const auto cumulative = read_cumulative(config);

  DamageCoefficients coeff;
  Json slope_doc;
  if (config.slope) {
    coeff.slope = *config.slope;
    coeff.slope_error = config.slope_error;
    slope_doc = Json{{"value", coeff.slope}, {"error", coeff.slope_error}, {"source", "config"}};
  } else {
    const SlopeFit fit = calibrate_slope(read_calibration(config.calibration));
    coeff.slope = fit.slope;
    coeff.slope_error = fit.error;
    slope_doc = Json{{"value", fit.slope},
                     {"error", fit.error},
                     {"source", "calibration"},
                     {"calibration_points", fit.n_points},
                     {"rms_residual_cps", fit.rms_residual}};
  }
  validate_coefficients(coeff);
  claim_stage_dir(config, Stage::damage, ctx.force);

  auto find = [&](const std::string& id) -> const CumulativeSeries* {
    for (const auto& s : cumulative) {
      if (s.detector == id) return &s;
    }
    return nullptr;
  };
  const CumulativeSeries* num = find(config.ratio.numerator);
  const CumulativeSeries* den = find(config.ratio.denominator);

  std::string csv = "detector, segment, end_day, ddd_mev_g, delta_dcr_cps, delta_dcr_cps_error\n";
  Json detectors = Json::array();
  for (const auto& s : cumulative) {
    Json points = Json::array();
    for (const auto& p : s.points) {
      const DcrPrediction pred = predict_dcr(coeff, p.ddd.value, s.detector);
      const double err = std::hypot(coeff.slope * p.ddd.error, coeff.slope_error * p.ddd.value);
      points.push_back(Json{{"segment", p.segment},
                            {"end_day", p.end_day},
                            {"ddd_mev_g", to_json(p.ddd)},
                            {"delta_dcr_cps", Json{{"value", pred.delta_dcr}, {"error", err}}}});
      csv += s.detector + ", " + std::to_string(p.segment) + ", " + fmt(p.end_day) + ", " +
             fmt(p.ddd.value) + ", " + fmt(pred.delta_dcr) + ", " + fmt(err) + "\n";
    }
    detectors.push_back(Json{{"detector", s.detector}, {"points", points}});
  }

  Json ratios = Json::array();
  if (num != nullptr && den != nullptr && num->points.size() == den->points.size()) {
    for (std::size_t k = 0; k < num->points.size(); ++k) {
      const auto& a = num->points[k];
      const auto& b = den->points[k];
      Json r = nullptr;
      if (b.ddd.value > 0.0) {
        const double ratio = dcr_ratio(predict_dcr(coeff, a.ddd.value), predict_dcr(coeff, b.ddd.value));
        // The slope cancels; only the dose errors remain.
        const double rel = std::hypot(a.ddd.value > 0.0 ? a.ddd.error / a.ddd.value : 0.0,
                                      b.ddd.error / b.ddd.value);
        r = Json{{"value", ratio}, {"error", ratio * rel}};
      }
      ratios.push_back(Json{{"segment", a.segment}, {"end_day", a.end_day}, {"dcr_ratio", r}});
    }
  }

  const fs::path dir = stage_dir(config, Stage::damage);
  write_json(dir / "predictions.json",
             Json{{"slope_cps_per_mev_g", slope_doc},
                  {"numerator", config.ratio.numerator},
                  {"denominator", config.ratio.denominator},
                  {"detectors", detectors},
                  {"ratios", ratios}});
  write_text(dir / "predictions.csv", csv);
  write_effective_config(config);
  record_timing(config, Stage::damage, start);
  log_line(ctx, "damage: slope " + fmt(coeff.slope) + " cps per MeV/g");
}

void cmd_compare(const RunConfig& config, const RunContext& ctx) {
  const auto start = Clock::now();
  validate_config(config, Stage::compare);
  const auto segments = read_segments(config);
  const auto plan = windows(segments);
  check_plan(config, plan, "segments.json");
  const auto cumulative = read_cumulative(config);
  const auto records = ingest_telemetry(config.telemetry);
  const ModelSet models = fit_epochs(records, config.temperature);
  const double ref_t = config.temperature.reference_t;
  const SeriesSet series = normalized_series(records, models, ref_t);
  const auto measured = segment_ratios(series, plan, config.ratio);

  double breakpoint = 475.0;
  if (config.breakpoint_day) {
    breakpoint = *config.breakpoint_day;
  } else {
    const OrbitProfile orbit = load_orbit_profile(config.orbit_profile, config.inclination_deg,
                                                  config.raan_deg, config.arg_perigee_deg);
    if (auto detected = detect_breakpoint(orbit)) breakpoint = *detected;
  }
  const CompareReport report =
      compare_report(measured, cumulative, series, config.ratio, config.compare, breakpoint);
  claim_stage_dir(config, Stage::compare, ctx.force);
  const fs::path dir = stage_dir(config, Stage::compare);

  // report.json
  Json doc = to_json(report);
  Json baselines = Json::object();
  for (const auto& [id, points] : series) {
    const Baseline b = baseline_of(points, config.ratio.baseline_days);
    baselines[id] = Json{{"mean_cps", b.mean}, {"error_cps", b.error}, {"n", b.n}};
  }
  Json deltas = Json::array();
  for (const auto& m : measured) {
    deltas.push_back(Json{{"segment", m.segment},
                          {"numerator", Json{{"n", m.numerator.n}, {"delta_cps", m.numerator.delta}, {"error_cps", m.numerator.error}}},
                          {"denominator", Json{{"n", m.denominator.n}, {"delta_cps", m.denominator.delta}, {"error_cps", m.denominator.error}}}});
  }
  Json temp_models = Json::array();
  std::string models_csv = "detector, epoch, start_day, end_day, n, amplitude_cps, rate_per_c, rate_error, pooled\n";
  for (const auto& [id, list] : models) {
    for (const auto& em : list) {
      temp_models.push_back(Json{{"detector", id},
                                 {"epoch", em.epoch.index},
                                 {"start_day", em.epoch.start_day},
                                 {"end_day", em.epoch.end_day},
                                 {"n", em.model.n_samples},
                                 {"amplitude_cps", em.model.amplitude},
                                 {"rate_per_c", em.model.rate},
                                 {"rate_error", em.model.rate_error},
                                 {"pooled_rate", em.pooled_rate}});
      models_csv += id + ", " + std::to_string(em.epoch.index) + ", " + fmt(em.epoch.start_day) + ", " +
                    fmt(em.epoch.end_day) + ", " + std::to_string(em.model.n_samples) + ", " +
                    fmt(em.model.amplitude) + ", " + fmt(em.model.rate) + ", " + fmt(em.model.rate_error) +
                    ", " + (em.pooled_rate ? "true" : "false") + "\n";
    }
  }
  doc["numerator"] = config.ratio.numerator;
  doc["denominator"] = config.ratio.denominator;
  doc["reference_t_c"] = ref_t;
  doc["records"] = records.size();
  doc["baselines"] = baselines;
  doc["measured_deltas"] = deltas;
  doc["temperature_models"] = temp_models;
  doc["notes"] = Json::array({"measured errors: within-segment standard error of the mean, no autocorrelation correction",
                              "simulated errors: transport statistics plus the configured relative systematic"});
  write_json(dir / "report.json", doc);
  write_text(dir / "temperature_models.csv", models_csv);

  // ratio comparison
  std::string ratio_csv = "segment, start_day, end_day, measured, measured_error, simulated, simulated_error, status, low_data\n";
  PlotSeries meas{"measured DCR ratio", {}, {}, {}, false};
  PlotSeries sim{"simulated DDD ratio", {}, {}, {}, true};
  for (const auto& s : report.segments) {
    const double mid = 0.5 * (s.start_day + s.end_day);
    ratio_csv += std::to_string(s.segment) + ", " + fmt(s.start_day) + ", " + fmt(s.end_day) + ", " +
                 (s.measured ? fmt(*s.measured) : "") + ", " + (s.measured ? fmt(s.measured_error) : "") +
                 ", " + fmt(s.simulated) + ", " + fmt(s.simulated_error) + ", " + to_string(s.status) +
                 ", " + (s.low_data ? "true" : "false") + "\n";
    if (s.measured) {
      meas.x.push_back(mid);
      meas.y.push_back(*s.measured);
      meas.y_error.push_back(s.measured_error);
    }
    sim.x.push_back(mid);
    sim.y.push_back(s.simulated);
    sim.y_error.push_back(s.simulated_error);
  }
  write_text(dir / "ratios.csv", ratio_csv);
  write_text(dir / "ratio_comparison.svg",
             render_svg({"DCR ratio vs DDD ratio per segment", "mission day (segment centre)",
                         config.ratio.numerator + " / " + config.ratio.denominator},
                        {sim, meas}));

  // normalized DCR against day
  std::string day_csv = "day, detector, temp_C, dcr_norm_cps, epoch\n";
  std::vector<PlotSeries> day_plot;
  for (const auto& [id, points] : series) {
    PlotSeries ps{id, {}, {}, {}, false};
    for (const auto& p : points) {
      day_csv += fmt(p.day) + ", " + id + ", " + fmt(p.temperature) + ", " + fmt(p.dcr) + ", " +
                 std::to_string(p.epoch) + "\n";
      ps.x.push_back(p.day);
      ps.y.push_back(p.dcr);
    }
    day_plot.push_back(std::move(ps));
  }
  write_text(dir / "dcr_vs_day.csv", day_csv);
  char title[96];
  std::snprintf(title, sizeof title, "Dark count rate normalized to %g C", ref_t);
  write_text(dir / "dcr_vs_day.svg", render_svg({title, "mission day", "DCR (cps)"}, day_plot));

  // raw DCR against temperature, per detector, a few epochs with their fits
  std::string temp_csv = "day, detector, epoch, temp_C, dcr_cps, fitted_cps\n";
  for (const auto& [id, list] : models) {
    std::vector<TelemetryRecord> mine;
    for (const auto& r : records) {
      if (r.detector == id) mine.push_back(r);
    }
    std::set<std::size_t> shown;
    if (!list.empty()) {
      const std::size_t n = list.size();
      for (std::size_t k : {std::size_t{0}, n / 3, (2 * n) / 3, n - 1}) shown.insert(k);
    }
    std::vector<PlotSeries> plot;
    for (std::size_t k = 0; k < list.size(); ++k) {
      const auto& em = list[k];
      PlotSeries pts{"day " + fmt(std::round(em.epoch.start_day)), {}, {}, {}, false};
      std::vector<std::pair<double, double>> fit;
      for (const auto& r : mine) {
        if (r.day < em.epoch.start_day || r.day > em.epoch.end_day) continue;
        const double fitted = em.model.amplitude * std::exp(em.model.rate * (r.temperature - em.model.reference_t));
        temp_csv += fmt(r.day) + ", " + id + ", " + std::to_string(em.epoch.index) + ", " +
                    fmt(r.temperature) + ", " + fmt(r.dcr) + ", " + fmt(fitted) + "\n";
        pts.x.push_back(r.temperature);
        pts.y.push_back(r.dcr);
        fit.emplace_back(r.temperature, fitted);
      }
      if (!shown.count(k)) continue;
      std::sort(fit.begin(), fit.end());
      PlotSeries line{"fit", {}, {}, {}, true};
      line.markers = false;
      line.legend = false;
      line.color = pts.color = static_cast<int>(plot.size() / 2);
      for (const auto& [t, v] : fit) {
        line.x.push_back(t);
        line.y.push_back(v);
      }
      plot.push_back(std::move(pts));
      plot.push_back(std::move(line));
    }
    PlotSpec spec{id + " dark counts against temperature", "temperature (C)", "DCR (cps)"};
    spec.log_y = true;
    write_text(dir / ("dcr_vs_temp_" + id + ".svg"), render_svg(spec, plot));
  }
  write_text(dir / "dcr_vs_temp.csv", temp_csv);

  write_effective_config(config);
  record_timing(config, Stage::compare, start);
  std::size_t agree = 0;
  for (const auto& s : report.segments) agree += s.status == AgreementStatus::agree;
  log_line(ctx, "compare: " + std::to_string(agree) + " of " + std::to_string(report.segments.size()) +
                    " segments agree");
}

void cmd_all(const RunConfig& config, const RunContext& ctx) {
  require_output(config);
  if (!ctx.force) {
    for (Stage s : {Stage::env, Stage::transport, Stage::damage, Stage::compare}) {
      const fs::path dir = stage_dir(config, s);
      if (fs::exists(dir) && !fs::is_empty(dir)) {
        throw Error(ErrorKind::config,
                    "output directory " + dir.string() + " is not empty; pass --force to overwrite");
      }
    }
  }
  cmd_env(config, ctx);
  cmd_transport(config, ctx);
  cmd_damage(config, ctx);
  if (config.telemetry.empty()) {
    log_line(ctx, "compare: skipped, no telemetry configured");
    return;
  }
  cmd_compare(config, ctx);
}

}  // namespace satrad

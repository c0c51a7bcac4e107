#include "satrad/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "satrad/csv.hpp"
#include "satrad/error.hpp"

namespace satrad {

const char* to_string(Species species) {
  return species == Species::proton ? "proton" : "electron";
}

const char* to_string(SourceKind source) {
  switch (source) {
    case SourceKind::trapped: return "trapped";
    case SourceKind::solar: return "solar";
    case SourceKind::cosmic: return "cosmic";
  }
  return "trapped";
}

Species parse_species(std::string_view text) {
  const auto s = csv::to_lower(csv::trim(text));
  if (s == "proton" || s == "protons" || s == "p") return Species::proton;
  if (s == "electron" || s == "electrons" || s == "e" || s == "e-") return Species::electron;
  throw Error(ErrorKind::parse, "unknown species '" + std::string(text) + "'");
}

SourceKind parse_source(std::string_view text) {
  const auto s = csv::to_lower(csv::trim(text));
  if (s == "trapped") return SourceKind::trapped;
  if (s == "solar") return SourceKind::solar;
  if (s == "cosmic" || s == "gcr") return SourceKind::cosmic;
  throw Error(ErrorKind::parse, "unknown spectrum source '" + std::string(text) + "'");
}

double ParticleSpectrum::total_fluence() const {
  double total = 0.0;
  for (const auto& b : bins) total += b.fluence;
  return total;
}

void validate_spectrum(const ParticleSpectrum& spectrum) {
  for (std::size_t i = 0; i < spectrum.bins.size(); ++i) {
    const auto& b = spectrum.bins[i];
    if (!(b.e_low >= 0.0) || !(b.e_high > b.e_low)) {
      throw Error(ErrorKind::validation, "spectrum bin " + std::to_string(i) + " has bad edges");
    }
    if (!(b.fluence >= 0.0)) {
      throw Error(ErrorKind::validation, "spectrum bin " + std::to_string(i) + " has negative fluence");
    }
    if (i > 0 && b.e_low != spectrum.bins[i - 1].e_high) {
      throw Error(ErrorKind::validation, "spectrum bins are not contiguous at bin " + std::to_string(i));
    }
  }
}

// ---------------------------------------------------------------------------
// Orbit

void validate_orbit(const OrbitProfile& orbit) {
  if (!(orbit.inclination_deg >= 0.0 && orbit.inclination_deg < 180.0)) {
    throw Error(ErrorKind::validation, "inclination must lie in [0, 180) degrees");
  }
  if (orbit.altitude.empty()) throw Error(ErrorKind::validation, "empty altitude series");
  for (std::size_t i = 0; i < orbit.altitude.size(); ++i) {
    const auto& s = orbit.altitude[i];
    if (i > 0 && !(s.day > orbit.altitude[i - 1].day)) {
      throw Error(ErrorKind::validation, "altitude series days must be strictly increasing");
    }
    if (!(s.altitude_km > 100.0 && s.altitude_km < 2000.0)) {
      throw Error(ErrorKind::validation, "altitude " + std::to_string(s.altitude_km) +
                                             " km outside (100, 2000) km");
    }
  }
}

double OrbitProfile::altitude_at(double day) const {
  if (altitude.empty() || day < altitude.front().day || day > altitude.back().day) {
    throw Error(ErrorKind::range, "day " + std::to_string(day) + " outside the altitude series");
  }
  if (altitude.size() == 1) return altitude.front().altitude_km;
  auto it = std::upper_bound(altitude.begin(), altitude.end(), day,
                             [](double d, const AltitudeSample& s) { return d < s.day; });
  if (it == altitude.end()) return altitude.back().altitude_km;
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double f = (day - lo.day) / (hi.day - lo.day);
  return lo.altitude_km + f * (hi.altitude_km - lo.altitude_km);
}

double OrbitProfile::mean_altitude(double start_day, double end_day) const {
  if (!(end_day > start_day)) throw Error(ErrorKind::validation, "empty averaging window");
  if (altitude.empty() || start_day < altitude.front().day || end_day > altitude.back().day) {
    throw Error(ErrorKind::range, "orbit series shorter than the mission span");
  }
  // Trapezoid over the window split at every sample is exact for linear pieces.
  std::vector<double> knots{start_day};
  for (const auto& s : altitude) {
    if (s.day > start_day && s.day < end_day) knots.push_back(s.day);
  }
  knots.push_back(end_day);
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    area += 0.5 * (altitude_at(knots[i]) + altitude_at(knots[i + 1])) * (knots[i + 1] - knots[i]);
  }
  return area / (end_day - start_day);
}

OrbitProfile load_orbit_profile(const std::filesystem::path& path, double inclination_deg,
                                double raan_deg, double arg_perigee_deg) {
  const auto doc = csv::read(path);
  OrbitProfile orbit;
  orbit.inclination_deg = inclination_deg;
  orbit.raan_deg = raan_deg;
  orbit.arg_perigee_deg = arg_perigee_deg;
  for (const auto& row : doc.rows) {
    if (row.fields.size() != 2) {
      throw Error(ErrorKind::parse,
                  doc.source + ":" + std::to_string(row.line) + ": expected `day, altitude_km`");
    }
    if (orbit.altitude.empty() && csv::to_lower(row.fields[0]) == "day") continue;
    orbit.altitude.push_back({csv::to_double(row.fields[0], doc.source, row.line),
                              csv::to_double(row.fields[1], doc.source, row.line)});
  }
  validate_orbit(orbit);
  return orbit;
}

// ---------------------------------------------------------------------------
// Segment plans

void validate_plan(const std::vector<SegmentWindow>& plan) {
  if (plan.empty()) throw Error(ErrorKind::validation, "empty segment plan");
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (!(plan[i].end_day > plan[i].start_day)) {
      throw Error(ErrorKind::validation, "segment " + std::to_string(i) + " has end <= start");
    }
    if (i > 0 && plan[i].start_day != plan[i - 1].end_day) {
      throw Error(ErrorKind::validation,
                  plan[i].start_day > plan[i - 1].end_day
                      ? "segment plan has a gap before segment " + std::to_string(i)
                      : "segment plan overlaps at segment " + std::to_string(i));
    }
  }
}

std::vector<SegmentWindow> equal_segments(double mission_days, std::size_t n_segments) {
  if (n_segments == 0) throw Error(ErrorKind::validation, "need at least one segment");
  if (!(mission_days > 0.0)) throw Error(ErrorKind::validation, "mission duration must be > 0");
  std::vector<SegmentWindow> plan(n_segments);
  const double width = mission_days / static_cast<double>(n_segments);
  for (std::size_t i = 0; i < n_segments; ++i) {
    plan[i].start_day = i == 0 ? 0.0 : plan[i - 1].end_day;
    plan[i].end_day = i + 1 == n_segments ? mission_days : width * static_cast<double>(i + 1);
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Spectrum files

SpectrumFile read_spectrum_file(const std::filesystem::path& path) {
  const auto doc = csv::read(path);
  SpectrumFile f;
  f.name = path.filename().string();
  f.species = parse_species(doc.require("species"));
  const auto kind = csv::to_lower(doc.require("kind"));
  if (kind == "differential") {
    f.kind = FluxKind::differential;
  } else if (kind == "integral") {
    f.kind = FluxKind::integral;
  } else {
    throw Error(ErrorKind::parse, doc.source + ": kind must be differential or integral");
  }
  f.duration_days = csv::to_double(doc.require("duration_days"), doc.source, 0);
  if (!(f.duration_days > 0.0)) {
    throw Error(ErrorKind::validation, doc.source + ": duration_days must be > 0");
  }
  if (doc.has("source")) f.source = parse_source(doc.meta.at("source"));
  if (doc.has("segment")) {
    f.segment = static_cast<std::size_t>(csv::to_double(doc.meta.at("segment"), doc.source, 0));
  }
  for (const auto& row : doc.rows) {
    if (row.fields.size() != 2) {
      throw Error(ErrorKind::parse,
                  doc.source + ":" + std::to_string(row.line) + ": expected `energy_MeV, flux`");
    }
    if (f.energy.empty() && !row.fields[0].empty() && std::isalpha(static_cast<unsigned char>(row.fields[0][0]))) {
      continue;  // column header
    }
    const double e = csv::to_double(row.fields[0], doc.source, row.line);
    const double v = csv::to_double(row.fields[1], doc.source, row.line);
    if (!f.energy.empty() && !(e > f.energy.back())) {
      throw Error(ErrorKind::validation, doc.source + ":" + std::to_string(row.line) +
                                             ": energy column is not strictly increasing");
    }
    if (v < 0.0) {
      throw Error(ErrorKind::validation,
                  doc.source + ":" + std::to_string(row.line) + ": negative flux");
    }
    if (e < 0.0) {
      throw Error(ErrorKind::validation,
                  doc.source + ":" + std::to_string(row.line) + ": negative energy");
    }
    f.energy.push_back(e);
    f.value.push_back(v);
  }
  if (f.energy.size() < 2) {
    throw Error(ErrorKind::validation, doc.source + ": need at least two energy rows");
  }
  return f;
}

ParticleSpectrum bin_spectrum(const SpectrumFile& file, double segment_days) {
  ParticleSpectrum spectrum;
  spectrum.species = file.species;
  spectrum.source = file.source;
  const double seconds = segment_days * kSecondsPerDay;
  for (std::size_t i = 0; i + 1 < file.energy.size(); ++i) {
    EnergyBin bin{file.energy[i], file.energy[i + 1], 0.0};
    if (file.kind == FluxKind::differential) {
      bin.fluence = 0.5 * (file.value[i] + file.value[i + 1]) * (bin.e_high - bin.e_low) * seconds;
    } else {
      const double diff = file.value[i] - file.value[i + 1];
      if (diff < 0.0) {
        throw Error(ErrorKind::validation,
                    file.name + ": integral spectrum increases between " +
                        std::to_string(bin.e_low) + " and " + std::to_string(bin.e_high) + " MeV");
      }
      bin.fluence = diff * (segment_days / file.duration_days);
    }
    spectrum.bins.push_back(bin);
  }
  validate_spectrum(spectrum);
  return spectrum;
}

std::vector<MissionSegment> ingest_spectra(const std::vector<std::filesystem::path>& files,
                                           const std::vector<SegmentWindow>& plan) {
  validate_plan(plan);
  std::vector<SpectrumFile> parsed;
  parsed.reserve(files.size());
  for (const auto& path : files) parsed.push_back(read_spectrum_file(path));
  std::vector<MissionSegment> segments;
  for (std::size_t k = 0; k < plan.size(); ++k) {
    MissionSegment seg;
    seg.index = k;
    seg.start_day = plan[k].start_day;
    seg.end_day = plan[k].end_day;
    for (const auto& f : parsed) {
      if (f.segment && *f.segment != k) continue;
      seg.spectra.push_back(bin_spectrum(f, seg.duration_days()));
    }
    segments.push_back(std::move(seg));
  }
  for (const auto& f : parsed) {
    if (f.segment && *f.segment >= plan.size()) {
      throw Error(ErrorKind::validation, f.name + ": segment index beyond the plan");
    }
  }
  return segments;
}

// ---------------------------------------------------------------------------
// Parametric surrogate

ParametricModel ParametricModel::defaults() {
  ParametricModel m;
  m.proton.flux_at_reference = 0.4;
  m.proton.reference_altitude_km = 410.0;
  m.proton.scale_height_km = 60.0;
  m.proton.e_fold_mev = 60.0;
  m.proton.grid_min_mev = 0.1;
  m.proton.grid_max_mev = 400.0;
  m.proton.bins = 60;

  m.electron.flux_at_reference = 1.0e5;
  m.electron.reference_altitude_km = 410.0;
  m.electron.scale_height_km = 80.0;
  m.electron.e_fold_mev = 0.4;
  m.electron.grid_min_mev = 0.04;
  m.electron.grid_max_mev = 7.0;
  m.electron.bins = 40;
  return m;
}

namespace {

// Fraction of a circular orbit spent within |latitude| <= band.
double band_residence(double inclination_deg, double band_deg) {
  const double si = std::fabs(std::sin(inclination_deg * std::numbers::pi / 180.0));
  const double sb = std::sin(band_deg * std::numbers::pi / 180.0);
  if (si <= sb) return 1.0;
  return 2.0 / std::numbers::pi * std::asin(sb / si);
}

}  // namespace

double parametric_amplitude(Species species, double altitude_km, double inclination_deg,
                            const ParametricModel& model) {
  if (!(altitude_km > 100.0 && altitude_km < 2000.0)) {
    throw Error(ErrorKind::range,
                "altitude " + std::to_string(altitude_km) + " km outside (100, 2000) km");
  }
  if (!(inclination_deg >= 0.0 && inclination_deg < 180.0)) {
    throw Error(ErrorKind::range, "inclination must lie in [0, 180) degrees");
  }
  const auto& p = model.for_species(species);
  const double inclination_factor =
      band_residence(inclination_deg, model.trapped_latitude_deg) /
      band_residence(model.reference_inclination_deg, model.trapped_latitude_deg);
  return p.flux_at_reference *
         std::exp((altitude_km - p.reference_altitude_km) / p.scale_height_km) *
         inclination_factor;
}

ParticleSpectrum parametric_spectrum(Species species, double altitude_km, double inclination_deg,
                                     double duration_days, const ParametricModel& model) {
  if (duration_days < 0.0) throw Error(ErrorKind::validation, "negative exposure duration");
  const auto& p = model.for_species(species);
  const double phi0 = parametric_amplitude(species, altitude_km, inclination_deg, model);
  const double seconds = duration_days * kSecondsPerDay;
  ParticleSpectrum spectrum;
  spectrum.species = species;
  spectrum.source = SourceKind::trapped;
  const double log_lo = std::log(p.grid_min_mev);
  const double step = (std::log(p.grid_max_mev) - log_lo) / static_cast<double>(p.bins);
  double lo = p.grid_min_mev;
  for (std::size_t i = 0; i < p.bins; ++i) {
    const double hi =
        i + 1 == p.bins ? p.grid_max_mev : std::exp(log_lo + step * static_cast<double>(i + 1));
    // Exact integral of phi0 exp(-E/E0) over the bin.
    const double integral =
        p.e_fold_mev * std::exp(-lo / p.e_fold_mev) * -std::expm1(-(hi - lo) / p.e_fold_mev);
    spectrum.bins.push_back({lo, hi, phi0 * seconds * integral});
    lo = hi;
  }
  return spectrum;
}

std::vector<MissionSegment> segment_mission(const OrbitProfile& orbit, std::size_t n_segments,
                                            double mission_days, const SpectrumSource& source) {
  validate_orbit(orbit);
  const auto plan = equal_segments(mission_days, n_segments);
  if (orbit.altitude.front().day > 0.0 || orbit.altitude.back().day < mission_days) {
    throw Error(ErrorKind::range, "orbit series shorter than the mission span");
  }
  std::vector<MissionSegment> segments;
  if (source.kind == SpectrumSource::Kind::ingested) {
    segments = ingest_spectra(source.files, plan);
  } else {
    for (std::size_t k = 0; k < plan.size(); ++k) {
      MissionSegment seg;
      seg.index = k;
      seg.start_day = plan[k].start_day;
      seg.end_day = plan[k].end_day;
      segments.push_back(std::move(seg));
    }
  }
  // Files listed next to a parametric source (solar, cosmic) are appended.
  std::vector<MissionSegment> extra;
  if (source.kind == SpectrumSource::Kind::parametric && !source.files.empty()) {
    extra = ingest_spectra(source.files, plan);
  }
  for (auto& seg : segments) {
    seg.mean_altitude_km = orbit.mean_altitude(seg.start_day, seg.end_day);
    if (source.kind == SpectrumSource::Kind::parametric) {
      for (Species s : source.species) {
        seg.spectra.push_back(parametric_spectrum(s, seg.mean_altitude_km, orbit.inclination_deg,
                                                  seg.duration_days(), source.model));
      }
      if (!extra.empty()) {
        for (auto& sp : extra[seg.index].spectra) seg.spectra.push_back(std::move(sp));
      }
    }
  }
  return segments;
}

}  // namespace satrad

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "satrad/spectrum.hpp"

namespace satrad {

inline constexpr double kSecondsPerDay = 86400.0;

struct AltitudeSample {
  double day = 0.0;
  double altitude_km = 0.0;
};

struct OrbitProfile {
  double inclination_deg = 51.64;
  double raan_deg = 48.59;
  double arg_perigee_deg = 67.56;
  std::vector<AltitudeSample> altitude;  // strictly increasing in day

  // Linear interpolation between samples; throws outside the series.
  double altitude_at(double day) const;
  // Exact time average of the interpolated series over [start_day, end_day].
  double mean_altitude(double start_day, double end_day) const;
};

void validate_orbit(const OrbitProfile& orbit);

// CSV rows `day, altitude_km`.
OrbitProfile load_orbit_profile(const std::filesystem::path& path, double inclination_deg = 51.64,
                                double raan_deg = 48.59, double arg_perigee_deg = 67.56);

struct SegmentWindow {
  double start_day = 0.0;
  double end_day = 0.0;
};

// Windows must be ascending, non-empty and contiguous.
void validate_plan(const std::vector<SegmentWindow>& plan);
std::vector<SegmentWindow> equal_segments(double mission_days, std::size_t n_segments);

struct MissionSegment {
  std::size_t index = 0;
  double start_day = 0.0;
  double end_day = 0.0;
  double mean_altitude_km = 0.0;
  std::vector<ParticleSpectrum> spectra;

  double duration_days() const { return end_day - start_day; }
};

enum class FluxKind { differential, integral };

// One exported spectrum file. Differential values are flux rates
// (/cm^2/s/MeV); integral values are fluences F(>E) (/cm^2) accumulated over
// duration_days.
struct SpectrumFile {
  std::string name;
  Species species = Species::proton;
  SourceKind source = SourceKind::trapped;
  FluxKind kind = FluxKind::differential;
  double duration_days = 0.0;
  std::optional<std::size_t> segment;  // applies to every segment when empty
  std::vector<double> energy;          // MeV, strictly increasing
  std::vector<double> value;
};

SpectrumFile read_spectrum_file(const std::filesystem::path& path);

// Bins the file on its own energy nodes for an exposure of segment_days.
ParticleSpectrum bin_spectrum(const SpectrumFile& file, double segment_days);

std::vector<MissionSegment> ingest_spectra(const std::vector<std::filesystem::path>& files,
                                           const std::vector<SegmentWindow>& plan);

// Exponential trapped-particle surrogate, phi(E) = phi0(h) exp(-E / E0).
// Not AP8/AE8: its only promises are positivity, growth with altitude and a
// softer electron than proton spectrum.
struct ParametricSpeciesModel {
  double flux_at_reference = 0.0;       // phi0 at the reference altitude, /cm^2/s/MeV
  double reference_altitude_km = 410.0;
  double scale_height_km = 60.0;        // phi0 grows as exp(h / scale_height)
  double e_fold_mev = 1.0;              // E0
  double grid_min_mev = 0.1;
  double grid_max_mev = 400.0;
  std::size_t bins = 60;
};

struct ParametricModel {
  ParametricSpeciesModel proton;
  ParametricSpeciesModel electron;
  double reference_inclination_deg = 51.64;
  double trapped_latitude_deg = 40.0;  // latitude band holding the trapped population

  static ParametricModel defaults();
  const ParametricSpeciesModel& for_species(Species s) const {
    return s == Species::proton ? proton : electron;
  }
};

// phi0(h, i) in /cm^2/s/MeV.
double parametric_amplitude(Species species, double altitude_km, double inclination_deg,
                            const ParametricModel& model = ParametricModel::defaults());

ParticleSpectrum parametric_spectrum(Species species, double altitude_km, double inclination_deg,
                                     double duration_days,
                                     const ParametricModel& model = ParametricModel::defaults());

struct SpectrumSource {
  enum class Kind { parametric, ingested };
  Kind kind = Kind::parametric;
  ParametricModel model = ParametricModel::defaults();
  std::vector<Species> species{Species::electron, Species::proton};
  // Ingested source: every spectrum. Parametric source: extra spectra (solar,
  // cosmic) appended to the trapped surrogate.
  std::vector<std::filesystem::path> files;
};

std::vector<MissionSegment> segment_mission(const OrbitProfile& orbit, std::size_t n_segments,
                                            double mission_days, const SpectrumSource& source);

}  // namespace satrad

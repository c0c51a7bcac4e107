#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "satrad/environment.hpp"
#include "satrad/geometry.hpp"
#include "satrad/physics.hpp"
#include "satrad/rng.hpp"

namespace satrad {

// Primary energy bands. The last band is open-ended.
struct EnergyBands {
  std::vector<double> edges;  // ascending, edges[0] = 0

  std::size_t size() const { return edges.size(); }
  std::size_t band_of(double energy) const;
  std::string label(std::size_t band) const;  // "0-2", "400+"
};

EnergyBands default_bands(Species species);

// Ascending edges starting at 0.
void validate_bands(const EnergyBands& bands);

struct BiasingConfig {
  enum class Mode { none, cone };
  Mode mode = Mode::none;
  // pi selects the smallest cone covering the target from each source point.
  double cone_half_angle = 3.14159265358979323846;
  std::string target_detector;
};

void validate_biasing(const BiasingConfig& biasing);

struct PrimaryParticle {
  Species species = Species::proton;
  double energy = 0.0;  // MeV
  Vec3 position;
  Vec3 direction;
  double weight = 1.0;
};

// Draws primaries on the scene's bounding sphere. Unbiased: uniform position,
// cosine-law inward direction, weight 1. Cone: directions restricted to a cone
// around the target detector's bounding ball with compensating weights. A
// zero-weight particle is a valid sample that leaves without scoring.
class PrimarySampler {
 public:
  PrimarySampler(const Scene& scene, const ParticleSpectrum& spectrum,
                 const BiasingConfig& biasing = {});

  PrimaryParticle sample(Rng& rng) const;
  int target() const { return target_; }  // detector index, -1 when unbiased

 private:
  double sample_energy(Rng& rng) const;

  const Scene* scene_;
  Species species_;
  std::vector<EnergyBin> bins_;
  std::vector<double> cumulative_;  // running fluence, last = total
  BiasingConfig biasing_;
  int target_ = -1;
  Vec3 target_center_;
  double target_radius_ = 0.0;
};

std::vector<PrimaryParticle> sample_primaries(const Scene& scene, const ParticleSpectrum& spectrum,
                                              std::size_t n, std::uint64_t seed,
                                              const BiasingConfig& biasing = {});

struct Deposit {
  std::size_t detector = 0;
  double deposited = 0.0;     // MeV
  double niel_energy = 0.0;   // MeV
  double track_length = 0.0;  // cm travelled inside the detector
};

struct TransportOutcome {
  std::vector<Deposit> deposits;
  double structure_loss = 0.0;  // MeV lost outside detectors
  double exit_energy = 0.0;     // MeV carried out of the scene
  bool out_of_range = false;    // above the table: dropped where it started
  bool niel_clamped = false;    // NIEL evaluated at a table edge
};

// Stopping tables resolved per scene material for one species.
class Transporter {
 public:
  Transporter(const Scene& scene, const PhysicsLibrary& physics, Species species);

  TransportOutcome run(const PrimaryParticle& particle) const;
  double max_energy() const { return max_energy_; }

 private:
  const Scene* scene_;
  Species species_;
  std::vector<const StoppingPowerTable*> tables_;  // per material, null for vacuum
  const NielTable* niel_ = nullptr;
  double max_energy_ = 0.0;
};

TransportOutcome transport_one(const Scene& scene, const PrimaryParticle& particle,
                               const PhysicsLibrary& physics);

struct Estimate {
  double value = 0.0;
  double error = 0.0;  // one standard error, statistical only
};

struct BandResult {
  std::string band;
  Estimate dose_rad;
  Estimate ddd;  // MeV/g
  std::uint64_t hits = 0;
};

// Tally of one spectrum (species and source) in one detector.
struct SpectrumTally {
  Species species = Species::proton;
  SourceKind source = SourceKind::trapped;
  std::uint64_t n_primaries = 0;
  std::uint64_t hits = 0;
  double fluence = 0.0;  // total incident fluence, /cm^2
  std::vector<BandResult> bands;
  Estimate dose_rad;
  Estimate ddd;
  Estimate track_length;  // cm^3 per the normalization, i.e. fluence x volume
  Estimate energy;        // total deposited MeV
  BiasingConfig::Mode biasing = BiasingConfig::Mode::none;
};

struct TallyResult {
  std::string detector;
  double mass = 0.0;  // g
  std::vector<SpectrumTally> spectra;
  std::uint64_t n_primaries = 0;
  std::uint64_t hits = 0;

  Estimate total_dose() const;  // rad, summed over spectra
  Estimate total_ddd() const;   // MeV/g
};

struct TallyOptions {
  std::size_t n_primaries = 100000;
  std::uint64_t seed = 0;
  BiasingConfig biasing;
  unsigned workers = 1;
  std::size_t chunk_size = 1024;
  // Per-species energy bands; default_bands when empty.
  std::vector<double> electron_band_edges;
  std::vector<double> proton_band_edges;

  EnergyBands bands(Species species) const;
};

struct TallyDiagnostics {
  std::uint64_t out_of_range = 0;
  std::uint64_t niel_clamped = 0;
};

// One entry per detector. In cone mode every detector is tallied from its own
// stream aimed at it; a named target restricts the run to that detector.
std::vector<TallyResult> run_tally(const Scene& scene, const MissionSegment& segment,
                                   const PhysicsLibrary& physics, const TallyOptions& options,
                                   TallyDiagnostics* diagnostics = nullptr);

struct SegmentTally {
  std::size_t segment = 0;
  double start_day = 0.0;
  double end_day = 0.0;
  std::vector<TallyResult> detectors;
};

struct CumulativePoint {
  std::size_t segment = 0;
  double end_day = 0.0;
  Estimate dose_rad;        // running total
  Estimate ddd;             // running total
  Estimate ddd_increment;   // this segment alone
};

struct CumulativeSeries {
  std::string detector;
  std::vector<CumulativePoint> points;
};

// Running sums per detector, errors in quadrature. Throws for segments out of
// time order.
std::vector<CumulativeSeries> accumulate_mission(const std::vector<SegmentTally>& segments);

}  // namespace satrad

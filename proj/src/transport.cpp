#include "satrad/transport.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

#include "satrad/error.hpp"

namespace satrad {

std::size_t EnergyBands::band_of(double energy) const {
  auto it = std::upper_bound(edges.begin(), edges.end(), energy);
  if (it == edges.begin()) return 0;
  return static_cast<std::size_t>(std::distance(edges.begin(), it)) - 1;
}

namespace {

std::string format_edge(double e) {
  std::string s = std::to_string(e);
  s.erase(s.find_last_not_of('0') + 1);
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

}  // namespace

std::string EnergyBands::label(std::size_t band) const {
  if (band + 1 >= edges.size()) return format_edge(edges.back()) + "+";
  return format_edge(edges[band]) + "-" + format_edge(edges[band + 1]);
}

EnergyBands default_bands(Species species) {
  if (species == Species::electron) return {{0.0, 2.0, 3.0, 7.0}};
  return {{0.0, 60.0, 200.0, 400.0}};
}

void validate_bands(const EnergyBands& bands) {
  if (bands.edges.empty() || bands.edges.front() != 0.0) {
    throw Error(ErrorKind::config, "energy bands must start at 0 MeV");
  }
  for (std::size_t i = 1; i < bands.edges.size(); ++i) {
    if (!(bands.edges[i] > bands.edges[i - 1])) {
      throw Error(ErrorKind::config, "energy band edges must be strictly ascending");
    }
  }
}

EnergyBands TallyOptions::bands(Species species) const {
  const auto& edges = species == Species::electron ? electron_band_edges : proton_band_edges;
  if (edges.empty()) return default_bands(species);
  EnergyBands b{edges};
  validate_bands(b);
  return b;
}

void validate_biasing(const BiasingConfig& biasing) {
  if (!(biasing.cone_half_angle > 0.0 && biasing.cone_half_angle <= std::numbers::pi)) {
    throw Error(ErrorKind::config, "cone half angle must lie in (0, pi]");
  }
  if (biasing.mode == BiasingConfig::Mode::cone && biasing.target_detector.empty()) {
    throw Error(ErrorKind::config, "cone biasing needs a target detector");
  }
}

// ---------------------------------------------------------------------------
// Source sampling

PrimarySampler::PrimarySampler(const Scene& scene, const ParticleSpectrum& spectrum,
                               const BiasingConfig& biasing)
    : scene_(&scene), species_(spectrum.species), bins_(spectrum.bins), biasing_(biasing) {
  validate_spectrum(spectrum);
  validate_biasing(biasing);
  if (bins_.empty()) throw Error(ErrorKind::validation, "empty spectrum");
  double running = 0.0;
  for (const auto& b : bins_) {
    running += b.fluence;
    cumulative_.push_back(running);
  }
  if (!(running > 0.0)) throw Error(ErrorKind::validation, "spectrum has zero total fluence");
  if (biasing.mode != BiasingConfig::Mode::cone) return;

  target_ = static_cast<int>(scene.detector_index(biasing.target_detector));
  const auto& det = scene.detectors()[static_cast<std::size_t>(target_)];
  target_center_ = det.center();
  target_radius_ = det.bounding_radius();
  const auto& sphere = scene.bounding_sphere();
  const double closest = sphere.radius - norm(target_center_ - sphere.center);
  if (!(closest > target_radius_)) {
    throw Error(ErrorKind::config,
                "detector '" + det.id + "' is not strictly inside the source sphere");
  }
  if (biasing.cone_half_angle < std::numbers::pi &&
      biasing.cone_half_angle < std::asin(target_radius_ / closest)) {
    throw Error(ErrorKind::config, "cone does not cover target detector '" + det.id + "'");
  }
}

double PrimarySampler::sample_energy(Rng& rng) const {
  const double x = rng.uniform() * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), x);
  std::size_t i = static_cast<std::size_t>(std::distance(cumulative_.begin(), it));
  i = std::min(i, bins_.size() - 1);
  const auto& b = bins_[i];
  return b.e_high - rng.uniform() * (b.e_high - b.e_low);
}

PrimaryParticle PrimarySampler::sample(Rng& rng) const {
  PrimaryParticle p;
  p.species = species_;
  p.energy = sample_energy(rng);

  const auto& sphere = scene_->bounding_sphere();
  const double z = 1.0 - 2.0 * rng.uniform();
  const double phi = 2.0 * std::numbers::pi * rng.uniform();
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  const Vec3 outward{r * std::cos(phi), r * std::sin(phi), z};
  p.position = sphere.center + outward * sphere.radius;
  const Vec3 inward = -outward;

  if (target_ < 0) {
    Vec3 u;
    Vec3 v;
    orthonormal_basis(inward, u, v);
    const double ct = std::sqrt(rng.uniform_open_zero());
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    const double az = 2.0 * std::numbers::pi * rng.uniform();
    p.direction = normalized(u * (st * std::cos(az)) + v * (st * std::sin(az)) + inward * ct);
    p.weight = 1.0;
    return p;
  }

  const Vec3 to_target = target_center_ - p.position;
  const double distance = norm(to_target);
  const Vec3 axis = to_target * (1.0 / distance);
  double sin2;             // sin^2 of the half angle
  double one_minus_cos;    // 1 - cos of the half angle
  double alpha;
  if (biasing_.cone_half_angle >= std::numbers::pi) {
    sin2 = (target_radius_ / distance) * (target_radius_ / distance);
    one_minus_cos = sin2 / (1.0 + std::sqrt(1.0 - sin2));
    alpha = std::asin(target_radius_ / distance);
  } else {
    alpha = biasing_.cone_half_angle;
    const double s = std::sin(alpha);
    const double h = std::sin(0.5 * alpha);
    sin2 = s * s;
    one_minus_cos = 2.0 * h * h;
  }
  Vec3 u;
  Vec3 v;
  orthonormal_basis(axis, u, v);
  auto draw_in_cone = [&] {
    const double ct = 1.0 - rng.uniform() * one_minus_cos;
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    const double az = 2.0 * std::numbers::pi * rng.uniform();
    return normalized(u * (st * std::cos(az)) + v * (st * std::sin(az)) + axis * ct);
  };

  const double axis_cos = std::clamp(dot(axis, inward), -1.0, 1.0);
  const double tilt = std::acos(axis_cos);
  if (tilt + alpha <= 0.5 * std::numbers::pi) {
    // Cosine law inside the cone by rejection; the weight is the cone's share
    // of the inward cosine measure, pi sin^2(alpha) (axis . n) / pi.
    const double cos_max = tilt <= alpha ? 1.0 : std::cos(tilt - alpha);
    Vec3 dir;
    do {
      dir = draw_in_cone();
    } while (rng.uniform() * cos_max > dot(dir, inward));
    p.direction = dir;
    p.weight = sin2 * axis_cos;
  } else {
    // Cone pokes out of the inward hemisphere: uniform in the cone with the
    // density ratio as a per-particle weight.
    p.direction = draw_in_cone();
    const double c = dot(p.direction, inward);
    p.weight = c > 0.0 ? c * 2.0 * one_minus_cos : 0.0;
  }
  return p;
}

std::vector<PrimaryParticle> sample_primaries(const Scene& scene, const ParticleSpectrum& spectrum,
                                              std::size_t n, std::uint64_t seed,
                                              const BiasingConfig& biasing) {
  if (n < 1) throw Error(ErrorKind::validation, "need at least one primary");
  PrimarySampler sampler(scene, spectrum, biasing);
  std::vector<PrimaryParticle> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(seed, 0, i);
    out.push_back(sampler.sample(rng));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Straight-line CSDA walk

Transporter::Transporter(const Scene& scene, const PhysicsLibrary& physics, Species species)
    : scene_(&scene), species_(species), max_energy_(std::numeric_limits<double>::infinity()) {
  const auto& materials = scene.materials();
  std::vector<bool> used(materials.size(), false);
  for (const auto& m : scene.meshes()) used[m.material] = true;
  for (const auto& d : scene.detectors()) used[d.material] = true;
  tables_.assign(materials.size(), nullptr);
  for (std::size_t i = 0; i < materials.size(); ++i) {
    if (!used[i]) continue;
    if (materials[i].density == 0.0 && !physics.has_stopping(species, materials[i].name)) continue;
    tables_[i] = &physics.stopping(species, materials[i].name);
    max_energy_ = std::min(max_energy_, tables_[i]->max_energy());
  }
  if (!scene.detectors().empty()) niel_ = &physics.niel(species);
}

TransportOutcome Transporter::run(const PrimaryParticle& particle) const {
  TransportOutcome out;
  double energy = particle.energy;
  if (particle.weight == 0.0) {
    out.exit_energy = energy;
    return out;
  }
  if (energy > max_energy_) {
    out.out_of_range = true;
    out.structure_loss = energy;
    return out;
  }
  const SlantPath path = scene_->trace_ray(particle.position, particle.direction);
  const auto& materials = scene_->materials();
  for (const auto& seg : path.segments) {
    if (energy <= 0.0) break;
    const StoppingPowerTable* table = tables_[seg.material];
    const double rho = materials[seg.material].density;
    if (rho == 0.0 || table == nullptr) {
      if (seg.detector >= 0) {
        out.deposits.push_back({static_cast<std::size_t>(seg.detector), 0.0, 0.0, seg.length});
      }
      continue;
    }
    const double detour = table->detour_factor();
    const double areal = rho * seg.length / detour;
    const double residual = table->csda_range(energy);
    double exit = 0.0;
    double consumed = residual;
    double travelled = residual * detour / rho;
    if (areal < residual) {
      exit = std::min(energy, table->energy_from_range(residual - areal));
      consumed = areal;
      travelled = seg.length;
    }
    const double loss = energy - exit;
    if (seg.detector >= 0) {
      Deposit d{static_cast<std::size_t>(seg.detector), loss, 0.0, travelled};
      double mid = 0.5 * (energy + exit);
      if (mid < niel_->min_energy() || mid > niel_->max_energy()) {
        out.niel_clamped = true;
        mid = std::clamp(mid, niel_->min_energy(), niel_->max_energy());
      }
      d.niel_energy = niel_->niel(mid) * consumed;
      out.deposits.push_back(d);
    } else {
      out.structure_loss += loss;
    }
    energy = exit;
  }
  out.exit_energy = energy;
  return out;
}

TransportOutcome transport_one(const Scene& scene, const PrimaryParticle& particle,
                               const PhysicsLibrary& physics) {
  return Transporter(scene, physics, particle.species).run(particle);
}

// ---------------------------------------------------------------------------
// Tallies

namespace {

struct Moments {
  double s1 = 0.0;
  double s2 = 0.0;

  void add(double x) {
    s1 += x;
    s2 += x * x;
  }
  Moments& operator+=(const Moments& o) {
    s1 += o.s1;
    s2 += o.s2;
    return *this;
  }
};

// Per detector and band. Each primary falls in exactly one band, so band
// moments add up to the species moments.
struct Cell {
  Moments deposit;
  Moments niel;
  Moments track;
  std::uint64_t hits = 0;

  Cell& operator+=(const Cell& o) {
    deposit += o.deposit;
    niel += o.niel;
    track += o.track;
    hits += o.hits;
    return *this;
  }
};

struct Chunk {
  std::vector<Cell> cells;
  std::uint64_t out_of_range = 0;
  std::uint64_t niel_clamped = 0;

  Chunk& operator+=(const Chunk& o) {
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i] += o.cells[i];
    out_of_range += o.out_of_range;
    niel_clamped += o.niel_clamped;
    return *this;
  }
};

// Mean over n primaries and its standard error, times scale.
Estimate estimate(const Moments& m, std::uint64_t n, double scale) {
  const double nd = static_cast<double>(n);
  const double mean = m.s1 / nd;
  const double var = std::max(0.0, (m.s2 - m.s1 * mean) / (nd * (nd - 1.0)));
  return {mean * scale, std::sqrt(var) * scale};
}

template <class Work>
void for_each_chunk(std::size_t n_chunks, unsigned workers, Work work) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n_chunks)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto loop = [&] {
    for (std::size_t c = next++; c < n_chunks; c = next++) {
      try {
        work(c);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n_chunks;
      }
    }
  };
  if (workers == 1) {
    loop();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(loop);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

// Fixed-shape pairwise reduction: the tree depends only on the chunk count.
Chunk reduce(std::vector<Chunk>& chunks, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return std::move(chunks[lo]);
  const std::size_t mid = lo + (hi - lo) / 2;
  Chunk left = reduce(chunks, lo, mid);
  left += reduce(chunks, mid, hi);
  return left;
}

std::uint64_t stream_key(const MissionSegment& segment, const ParticleSpectrum& spectrum,
                         std::size_t spectrum_index, int target) {
  std::uint64_t key = hash_combine(0x5A7A4ADULL, segment.index);
  key = hash_combine(key, static_cast<std::uint64_t>(spectrum.species));
  key = hash_combine(key, static_cast<std::uint64_t>(spectrum.source));
  key = hash_combine(key, spectrum_index);
  return hash_combine(key, static_cast<std::uint64_t>(target + 1));
}

// Tallies one spectrum into the listed detectors.
std::vector<SpectrumTally> tally_spectrum(const Scene& scene, const MissionSegment& segment,
                                          std::size_t spectrum_index, const Transporter& transporter,
                                          const TallyOptions& options, const BiasingConfig& biasing,
                                          const std::vector<std::size_t>& detectors,
                                          TallyDiagnostics* diagnostics) {
  const ParticleSpectrum& spectrum = segment.spectra[spectrum_index];
  const EnergyBands bands = options.bands(spectrum.species);
  const std::size_t nb = bands.size();
  const double fluence = spectrum.total_fluence();

  std::vector<SpectrumTally> out(detectors.size());
  for (auto& t : out) {
    t.species = spectrum.species;
    t.source = spectrum.source;
    t.n_primaries = options.n_primaries;
    t.fluence = fluence;
    t.biasing = biasing.mode;
    for (std::size_t b = 0; b < nb; ++b) t.bands.push_back({bands.label(b), {}, {}, 0});
  }
  if (fluence == 0.0) {
    validate_spectrum(spectrum);
    return out;
  }

  const PrimarySampler sampler(scene, spectrum, biasing);
  const std::uint64_t key = stream_key(segment, spectrum, spectrum_index, sampler.target());
  std::vector<int> slot(scene.detectors().size(), -1);
  for (std::size_t k = 0; k < detectors.size(); ++k) slot[detectors[k]] = static_cast<int>(k);

  const std::size_t chunk = std::max<std::size_t>(1, options.chunk_size);
  const std::size_t n = options.n_primaries;
  const std::size_t n_chunks = (n + chunk - 1) / chunk;
  std::vector<Chunk> chunks(n_chunks);
  for_each_chunk(n_chunks, options.workers, [&](std::size_t c) {
    Chunk acc;
    acc.cells.resize(detectors.size() * nb);
    std::vector<Deposit> merged(detectors.size());
    const std::size_t end = std::min(n, (c + 1) * chunk);
    for (std::size_t i = c * chunk; i < end; ++i) {
      Rng rng(options.seed, key, i);
      const PrimaryParticle p = sampler.sample(rng);
      const TransportOutcome o = transporter.run(p);
      acc.out_of_range += o.out_of_range;
      acc.niel_clamped += o.niel_clamped;
      const std::size_t band = bands.band_of(p.energy);
      for (auto& m : merged) m = Deposit{};
      for (const auto& d : o.deposits) {
        if (slot[d.detector] < 0) continue;
        auto& m = merged[static_cast<std::size_t>(slot[d.detector])];
        m.deposited += d.deposited;
        m.niel_energy += d.niel_energy;
        m.track_length += d.track_length;
      }
      for (std::size_t k = 0; k < detectors.size(); ++k) {
        const auto& m = merged[k];
        if (m.track_length <= 0.0) continue;
        Cell& cell = acc.cells[k * nb + band];
        cell.deposit.add(p.weight * m.deposited);
        cell.niel.add(p.weight * m.niel_energy);
        cell.track.add(p.weight * m.track_length);
        ++cell.hits;
      }
    }
    chunks[c] = std::move(acc);
  });
  const Chunk total = reduce(chunks, 0, n_chunks);
  if (diagnostics != nullptr) {
    diagnostics->out_of_range += total.out_of_range;
    diagnostics->niel_clamped += total.niel_clamped;
  }

  const double entries = fluence * std::numbers::pi * scene.bounding_sphere().radius *
                         scene.bounding_sphere().radius;
  for (std::size_t k = 0; k < detectors.size(); ++k) {
    const double mass = scene.detector_mass(detectors[k]);
    // A massless detector still scores track length but reports zero dose.
    const double per_mass = mass > 0.0 ? entries / mass : 0.0;
    auto& t = out[k];
    Cell sum;
    for (std::size_t b = 0; b < nb; ++b) {
      const Cell& cell = total.cells[k * nb + b];
      sum += cell;
      auto& br = t.bands[b];
      br.dose_rad = estimate(cell.deposit, n, per_mass / kMevPerGramPerRad);
      br.ddd = estimate(cell.niel, n, per_mass);
      br.hits = cell.hits;
      t.dose_rad.value += br.dose_rad.value;
      t.ddd.value += br.ddd.value;
    }
    t.dose_rad.error = estimate(sum.deposit, n, per_mass / kMevPerGramPerRad).error;
    t.ddd.error = estimate(sum.niel, n, per_mass).error;
    t.track_length = estimate(sum.track, n, entries);
    t.energy = estimate(sum.deposit, n, entries);
    t.hits = sum.hits;
  }
  return out;
}

}  // namespace

Estimate TallyResult::total_dose() const {
  Estimate e;
  for (const auto& s : spectra) {
    e.value += s.dose_rad.value;
    e.error += s.dose_rad.error * s.dose_rad.error;
  }
  e.error = std::sqrt(e.error);
  return e;
}

Estimate TallyResult::total_ddd() const {
  Estimate e;
  for (const auto& s : spectra) {
    e.value += s.ddd.value;
    e.error += s.ddd.error * s.ddd.error;
  }
  e.error = std::sqrt(e.error);
  return e;
}

std::vector<TallyResult> run_tally(const Scene& scene, const MissionSegment& segment,
                                   const PhysicsLibrary& physics, const TallyOptions& options,
                                   TallyDiagnostics* diagnostics) {
  if (options.n_primaries < 1000) {
    throw Error(ErrorKind::config, "n_primaries must be at least 1000 for a variance estimate");
  }
  const bool cone = options.biasing.mode == BiasingConfig::Mode::cone;
  if (!(options.biasing.cone_half_angle > 0.0 && options.biasing.cone_half_angle <= std::numbers::pi)) {
    throw Error(ErrorKind::config, "cone half angle must lie in (0, pi]");
  }
  std::vector<std::size_t> all;
  if (cone && !options.biasing.target_detector.empty()) {
    all.push_back(scene.detector_index(options.biasing.target_detector));
  } else {
    for (std::size_t k = 0; k < scene.detectors().size(); ++k) all.push_back(k);
  }
  const std::size_t nd = all.size();
  std::vector<TallyResult> results(nd);
  for (std::size_t k = 0; k < nd; ++k) {
    results[k].detector = scene.detectors()[all[k]].id;
    results[k].mass = scene.detector_mass(all[k]);
  }
  if (nd == 0) return results;

  for (std::size_t s = 0; s < segment.spectra.size(); ++s) {
    const Transporter transporter(scene, physics, segment.spectra[s].species);
    if (cone) {
      for (std::size_t k = 0; k < nd; ++k) {
        BiasingConfig aimed = options.biasing;
        aimed.target_detector = scene.detectors()[all[k]].id;
        auto t = tally_spectrum(scene, segment, s, transporter, options, aimed, {all[k]},
                                diagnostics);
        results[k].spectra.push_back(std::move(t.front()));
      }
    } else {
      auto t = tally_spectrum(scene, segment, s, transporter, options, options.biasing, all,
                              diagnostics);
      for (std::size_t k = 0; k < nd; ++k) results[k].spectra.push_back(std::move(t[k]));
    }
  }
  for (auto& r : results) {
    for (const auto& s : r.spectra) {
      r.n_primaries += s.n_primaries;
      r.hits += s.hits;
    }
  }
  return results;
}

std::vector<CumulativeSeries> accumulate_mission(const std::vector<SegmentTally>& segments) {
  std::vector<CumulativeSeries> series;
  if (segments.empty()) return series;
  for (const auto& d : segments.front().detectors) series.push_back({d.detector, {}});
  std::vector<double> dose_var(series.size(), 0.0);
  std::vector<double> ddd_var(series.size(), 0.0);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    if (i > 0 && (seg.segment <= segments[i - 1].segment ||
                  seg.start_day < segments[i - 1].end_day)) {
      throw Error(ErrorKind::validation, "segments out of time order at segment " +
                                             std::to_string(seg.segment));
    }
    if (seg.detectors.size() != series.size()) {
      throw Error(ErrorKind::validation, "detector set changes between segments");
    }
    for (std::size_t k = 0; k < series.size(); ++k) {
      const auto& d = seg.detectors[k];
      if (d.detector != series[k].detector) {
        throw Error(ErrorKind::validation, "detector set changes between segments");
      }
      const Estimate dose = d.total_dose();
      const Estimate ddd = d.total_ddd();
      CumulativePoint p;
      p.segment = seg.segment;
      p.end_day = seg.end_day;
      const auto& pts = series[k].points;
      p.dose_rad.value = (pts.empty() ? 0.0 : pts.back().dose_rad.value) + dose.value;
      p.ddd.value = (pts.empty() ? 0.0 : pts.back().ddd.value) + ddd.value;
      dose_var[k] += dose.error * dose.error;
      ddd_var[k] += ddd.error * ddd.error;
      p.dose_rad.error = std::sqrt(dose_var[k]);
      p.ddd.error = std::sqrt(ddd_var[k]);
      p.ddd_increment = ddd;
      series[k].points.push_back(p);
    }
  }
  return series;
}

}  // namespace satrad

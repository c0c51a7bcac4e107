// Shared fixtures and brute-force oracles for the unit and acceptance suites.
// The oracles deliberately avoid the library's own interpolation, range and
// ray-casting code so that agreement means something.
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "satrad/geometry.hpp"
#include "satrad/physics.hpp"
#include "satrad/rng.hpp"
#include "satrad/spectrum.hpp"

namespace test {

inline std::filesystem::path source_dir() { return SATRAD_SOURCE_DIR; }
inline std::filesystem::path data_path(const std::string& rel) { return source_dir() / "data" / rel; }

// ---------------------------------------------------------------------------
// Table rows read with plain streams, first two numeric columns.

struct Rows {
  std::vector<double> e;
  std::vector<double> v;
};

inline Rows read_rows(const std::filesystem::path& path) {
  Rows r;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream s(line);
    double e = 0.0;
    double v = 0.0;
    if (s >> e >> v) {
      r.e.push_back(e);
      r.v.push_back(v);
    }
  }
  return r;
}

// Power-law interpolation between bracketing rows.
inline double loglog(const Rows& r, double e) {
  std::size_t i = 0;
  while (i + 2 < r.e.size() && e > r.e[i + 1]) ++i;
  const double f = std::log(e / r.e[i]) / std::log(r.e[i + 1] / r.e[i]);
  return r.v[i] * std::pow(r.v[i + 1] / r.v[i], f);
}

// ---------------------------------------------------------------------------
// Physics oracles

// Bethe mass stopping power for protons, no shell or density correction.
inline double bethe_proton(double t_mev, double z_over_a, double i_ev) {
  constexpr double K = 0.307075;     // MeV cm^2 / mol
  constexpr double me = 0.51099895;  // MeV
  constexpr double mp = 938.27208816;
  const double gamma = 1.0 + t_mev / mp;
  const double beta2 = 1.0 - 1.0 / (gamma * gamma);
  const double bg2 = beta2 * gamma * gamma;
  const double ratio = me / mp;
  const double tmax = 2.0 * me * bg2 / (1.0 + 2.0 * gamma * ratio + ratio * ratio);
  const double i = i_ev * 1e-6;
  const double arg = 2.0 * me * bg2 * tmax / (i * i);
  return K * z_over_a / beta2 * (0.5 * std::log(arg) - beta2);
}

// CSDA range by trapezoid rule on a grid `refine` times finer than the nodes.
inline double trapezoid_range(const Rows& s, double energy, int refine = 10) {
  double range = s.e.front() / s.v.front();
  for (std::size_t i = 0; i + 1 < s.e.size() && s.e[i] < energy; ++i) {
    const double hi = std::min(energy, s.e[i + 1]);
    const int n = refine;
    for (int k = 0; k < n; ++k) {
      const double a = s.e[i] * std::pow(hi / s.e[i], static_cast<double>(k) / n);
      const double b = s.e[i] * std::pow(hi / s.e[i], static_cast<double>(k + 1) / n);
      range += 0.5 * (b - a) * (1.0 / loglog(s, a) + 1.0 / loglog(s, b));
    }
  }
  return range;
}

// Energy left after a straight path of areal density rho_l, by small explicit
// midpoint steps of dE/dx.
inline double slow_down(const Rows& s, double energy, double areal_density, int steps = 10000) {
  const double dx = areal_density / steps;
  double e = energy;
  for (int k = 0; k < steps && e > s.e.front(); ++k) {
    const double half = e - 0.5 * dx * loglog(s, e);
    if (half <= s.e.front()) return 0.0;
    e -= dx * loglog(s, half);
  }
  return std::max(e, 0.0);
}

// DDD of an exponential spectrum phi(E) = amplitude exp(-E/e0) on [lo, hi]
// using n fine log bins with exact bin fluences.
inline double fine_ddd(const Rows& niel, double amplitude, double e0, double lo, double hi, int n = 1000) {
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    const double a = lo * std::pow(hi / lo, static_cast<double>(k) / n);
    const double b = lo * std::pow(hi / lo, static_cast<double>(k + 1) / n);
    const double fluence = amplitude * e0 * (std::exp(-a / e0) - std::exp(-b / e0));
    sum += fluence * loglog(niel, std::sqrt(a * b));
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Geometry oracle: march along the ray in fixed steps, classify each point by
// brute-force crossing parity, and bisect every material change.

class VoxelOracle {
 public:
  explicit VoxelOracle(const satrad::Scene& scene) : scene_(&scene) {
    for (const auto& m : scene.meshes()) {
      double vol = 0.0;
      for (const auto& t : m.triangles) {
        vol += satrad::dot(m.vertices[t[0]], satrad::cross(m.vertices[t[1]], m.vertices[t[2]])) / 6.0;
      }
      volume_.push_back(std::fabs(vol));
    }
  }

  // Density at a point: detectors first, then the smallest enclosing mesh
  // (declaration order on ties), vacuum otherwise.
  double density_at(const satrad::Vec3& p) const {
    const auto& dets = scene_->detectors();
    for (const auto& d : dets) {
      if (d.contains(p)) return scene_->materials()[d.material].density;
    }
    int best = -1;
    for (std::size_t m = 0; m < scene_->meshes().size(); ++m) {
      if (!inside(scene_->meshes()[m], p)) continue;
      if (best < 0 || volume_[m] < volume_[static_cast<std::size_t>(best)]) best = static_cast<int>(m);
    }
    if (best < 0) return 0.0;
    return scene_->materials()[scene_->meshes()[static_cast<std::size_t>(best)].material].density;
  }

  double areal_density(const satrad::Vec3& origin, const satrad::Vec3& dir, double pitch = 0.01) const {
    const auto& s = scene_->bounding_sphere();
    const satrad::Vec3 oc = origin - s.center;
    const double b = satrad::dot(oc, dir);
    const double c = satrad::dot(oc, oc) - s.radius * s.radius;
    const double disc = b * b - c;
    if (disc <= 0.0) return 0.0;
    const double t_end = -b + std::sqrt(disc);
    double total = 0.0;
    double run_start = 0.0;
    double prev_t = 0.0;
    double rho = density_at(origin);
    for (double t = pitch; prev_t < t_end; t += pitch) {
      const double here = std::min(t, t_end);
      const double rho_here = density_at(origin + dir * here);
      if (rho_here != rho) {
        double lo = prev_t;
        double hi = here;
        for (int k = 0; k < 60; ++k) {
          const double mid = 0.5 * (lo + hi);
          if (density_at(origin + dir * mid) == rho) lo = mid; else hi = mid;
        }
        const double edge = 0.5 * (lo + hi);
        total += rho * (edge - run_start);
        run_start = edge;
        rho = rho_here;
      }
      prev_t = here;
    }
    total += rho * (t_end - run_start);
    return total;
  }

 private:
  static bool hit(const satrad::Vec3& o, const satrad::Vec3& d, const satrad::Vec3& a,
                  const satrad::Vec3& b, const satrad::Vec3& c) {
    // Moller-Trumbore, counts t > 0
    const satrad::Vec3 e1 = b - a;
    const satrad::Vec3 e2 = c - a;
    const satrad::Vec3 p = satrad::cross(d, e2);
    const double det = satrad::dot(e1, p);
    if (std::fabs(det) < 1e-300) return false;
    const double inv = 1.0 / det;
    const satrad::Vec3 s = o - a;
    const double u = satrad::dot(s, p) * inv;
    if (u < 0.0 || u > 1.0) return false;
    const satrad::Vec3 q = satrad::cross(s, e1);
    const double v = satrad::dot(d, q) * inv;
    if (v < 0.0 || u + v > 1.0) return false;
    return satrad::dot(e2, q) * inv > 0.0;
  }

  static bool inside(const satrad::TriangleMesh& m, const satrad::Vec3& p) {
    // an irrational-ish direction avoids edges of axis-aligned boxes
    const satrad::Vec3 d = satrad::normalized({0.5772156649, 0.6180339887, 0.5333333331});
    int crossings = 0;
    for (const auto& t : m.triangles) {
      crossings += hit(p, d, m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]);
    }
    return crossings % 2 == 1;
  }

  const satrad::Scene* scene_;
  std::vector<double> volume_;
};

// ---------------------------------------------------------------------------
// Small scenes

inline satrad::Material material(const std::string& name, double density, double z = 13.0) {
  return {name, density, z, {}};
}

// Aluminium box shell (outer half-size `half`, wall `wall`) around a silicon
// cube of half-size `det_half` at the origin.
inline satrad::Scene shielded_cube(double half = 2.0, double wall = 0.2, double det_half = 0.25) {
  using satrad::Vec3;
  std::vector<satrad::Material> mats{material("Al6061", 2.70), material("Vacuum", 0.0, 0.0),
                                     material("Si", 2.33, 14.0)};
  std::vector<satrad::TriangleMesh> meshes;
  meshes.push_back(satrad::make_box_mesh("shell", {-half, -half, -half}, {half, half, half}, 0));
  const double in = half - wall;
  meshes.push_back(satrad::make_box_mesh("cavity", {-in, -in, -in}, {in, in, in}, 1));
  satrad::DetectorVolume det;
  det.id = "D";
  det.shape = satrad::BoxShape{{-det_half, -det_half, -det_half}, {det_half, det_half, det_half}};
  det.material = 2;
  det.depletion_volume = 1e-6;
  return satrad::Scene(std::move(mats), std::move(meshes), {det});
}

// A bare silicon box in vacuum.
inline satrad::Scene bare_detector(const satrad::Vec3& half) {
  std::vector<satrad::Material> mats{material("Si", 2.33, 14.0)};
  satrad::DetectorVolume det;
  det.id = "D";
  det.shape = satrad::BoxShape{-1.0 * half, half};
  det.material = 0;
  det.depletion_volume = 1e-6;
  return satrad::Scene(std::move(mats), {}, {det});
}

// Aluminium slab of areal density `areal` on z in [0, areal / 2.7], a 0.05 cm
// silicon detector right behind it.
inline satrad::Scene slab_and_detector(double areal) {
  std::vector<satrad::Material> mats{material("Al6061", 2.70), material("Si", 2.33, 14.0)};
  const double t = areal / 2.70;
  std::vector<satrad::TriangleMesh> meshes{satrad::make_box_mesh("slab", {-5, -5, 0}, {5, 5, t}, 0)};
  satrad::DetectorVolume det;
  det.id = "D";
  det.shape = satrad::BoxShape{{-0.5, -0.5, t + 0.01}, {0.5, 0.5, t + 0.06}};
  det.material = 1;
  det.depletion_volume = 1e-6;
  return satrad::Scene(std::move(mats), std::move(meshes), {det});
}

inline satrad::ParticleSpectrum mono(satrad::Species species, double energy, double fluence,
                                     double width = 1e-3) {
  satrad::ParticleSpectrum s;
  s.species = species;
  s.bins.push_back({energy * (1.0 - width), energy * (1.0 + width), fluence});
  return s;
}

inline satrad::Vec3 random_unit(satrad::Rng& rng) {
  const double z = 2.0 * rng.uniform() - 1.0;
  const double phi = 2.0 * std::numbers::pi * rng.uniform();
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

}  // namespace test

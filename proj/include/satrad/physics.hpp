#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "satrad/spectrum.hpp"

namespace satrad {

// 1 rad = 0.01 J/kg = 6.2415e7 MeV/g.
inline constexpr double kMevPerGramPerRad = 6.2415e7;

// Piecewise power law through (energy, value) nodes: log-log linear between
// nodes, exact at nodes. Intervals touching a zero value fall back to linear
// interpolation so that thresholds (e.g. electron NIEL) are representable.
class LogLogCurve {
 public:
  LogLogCurve() = default;
  LogLogCurve(std::vector<double> energies, std::vector<double> values);

  double operator()(double energy) const;  // throws range error outside the nodes

  double min_energy() const { return energy_.front(); }
  double max_energy() const { return energy_.back(); }
  const std::vector<double>& energies() const { return energy_; }
  const std::vector<double>& values() const { return value_; }
  std::size_t interval(double energy) const;  // i with energy_[i] <= energy < energy_[i+1]
  double exponent(std::size_t i) const { return slope_[i]; }

 private:
  std::vector<double> energy_;
  std::vector<double> value_;
  std::vector<double> slope_;  // d ln(value) / d ln(energy) per interval
};

class StoppingPowerTable {
 public:
  StoppingPowerTable(Species species, std::string material, std::vector<double> energies,
                     std::vector<double> stopping, double detour_factor = 1.0);

  Species species() const { return species_; }
  const std::string& material() const { return material_; }
  const LogLogCurve& curve() const { return curve_; }
  double min_energy() const { return curve_.min_energy(); }
  double max_energy() const { return curve_.max_energy(); }
  // Straight-line range / CSDA range (<= 1); 1 for heavy particles.
  double detour_factor() const { return detour_; }

  // MeV cm^2/g, log-log interpolated.
  double stopping_power(double energy) const { return curve_(energy); }

  // g/cm^2. Integral of 1/S from 0 to energy; S is held at its first node
  // value below the table. Exact for the interpolated S (piecewise power law).
  double csda_range(double energy) const;

  // Inverse of csda_range on [0, csda_range(max_energy())].
  double energy_from_range(double range) const;

  std::map<std::string, std::string> metadata;

 private:
  double partial_range(std::size_t i, double energy) const;

  Species species_;
  std::string material_;
  LogLogCurve curve_;
  double detour_ = 1.0;
  std::vector<double> node_range_;
};

// Non-ionizing energy loss in silicon.
class NielTable {
 public:
  NielTable(Species species, std::vector<double> energies, std::vector<double> niel);

  Species species() const { return species_; }
  const LogLogCurve& curve() const { return curve_; }
  double niel(double energy) const { return curve_(energy); }  // MeV cm^2/g
  double min_energy() const { return curve_.min_energy(); }
  double max_energy() const { return curve_.max_energy(); }

  std::map<std::string, std::string> metadata;

 private:
  Species species_;
  LogLogCurve curve_;
};

struct Dose {
  double ionizing = 0.0;      // rad
  double displacement = 0.0;  // MeV/g
};

double dose_convert(double energy_mev, double mass_g);

// Sum over bins of fluence x NIEL at the geometric bin midpoint (E_high / 2
// for a bin starting at zero).
double ddd_from_fluence(const ParticleSpectrum& spectrum, const NielTable& niel);

StoppingPowerTable read_stopping_table(const std::filesystem::path& path);
NielTable read_niel_table(const std::filesystem::path& path);

class PhysicsLibrary {
 public:
  void add(StoppingPowerTable table);
  void add(NielTable table);

  bool has_stopping(Species species, const std::string& material) const;
  const StoppingPowerTable& stopping(Species species, const std::string& material) const;
  bool has_niel(Species species) const;
  const NielTable& niel(Species species) const;

  // file name -> version string, for run provenance
  std::map<std::string, std::string> versions;

 private:
  std::map<std::pair<Species, std::string>, StoppingPowerTable> stopping_;
  std::map<Species, NielTable> niel_;
};

// Loads every *.csv table in a directory.
PhysicsLibrary load_physics(const std::filesystem::path& directory);

}  // namespace satrad

#include "satrad/physics.hpp"

#include <algorithm>
#include <cmath>

#include "satrad/csv.hpp"
#include "satrad/error.hpp"

namespace satrad {

namespace {

std::string range_message(double energy, double lo, double hi) {
  return "energy " + std::to_string(energy) + " MeV outside table range [" + std::to_string(lo) +
         ", " + std::to_string(hi) + "] MeV";
}

// expm1(a x) / a, continuous at a = 0.
double power_integral(double a, double log_x) {
  if (a == 0.0) return log_x;
  return std::expm1(a * log_x) / a;
}

// Inverse of power_integral in log_x.
double inverse_power_integral(double a, double y) {
  if (a == 0.0) return y;
  return std::log1p(a * y) / a;
}

}  // namespace

LogLogCurve::LogLogCurve(std::vector<double> energies, std::vector<double> values)
    : energy_(std::move(energies)), value_(std::move(values)) {
  if (energy_.size() != value_.size() || energy_.size() < 2) {
    throw Error(ErrorKind::validation, "interpolation table needs >= 2 matching rows");
  }
  for (std::size_t i = 0; i < energy_.size(); ++i) {
    if (!(energy_[i] > 0.0) || (i > 0 && !(energy_[i] > energy_[i - 1]))) {
      throw Error(ErrorKind::validation, "table energies must be positive and strictly increasing");
    }
    if (!(value_[i] >= 0.0)) throw Error(ErrorKind::validation, "table values must be >= 0");
  }
  slope_.resize(energy_.size() - 1);
  for (std::size_t i = 0; i + 1 < energy_.size(); ++i) {
    if (value_[i] > 0.0 && value_[i + 1] > 0.0) {
      slope_[i] = std::log(value_[i + 1] / value_[i]) / std::log(energy_[i + 1] / energy_[i]);
    } else {
      slope_[i] = 0.0;
    }
  }
}

std::size_t LogLogCurve::interval(double energy) const {
  auto it = std::upper_bound(energy_.begin(), energy_.end(), energy);
  auto i = static_cast<std::size_t>(std::distance(energy_.begin(), it));
  if (i == 0) return 0;
  return std::min(i - 1, energy_.size() - 2);
}

double LogLogCurve::operator()(double energy) const {
  if (!(energy >= energy_.front()) || !(energy <= energy_.back())) {
    throw Error(ErrorKind::range, range_message(energy, energy_.front(), energy_.back()));
  }
  const std::size_t i = interval(energy);
  if (energy == energy_[i]) return value_[i];
  if (energy == energy_[i + 1]) return value_[i + 1];
  if (value_[i] == 0.0 || value_[i + 1] == 0.0) {
    const double f = (energy - energy_[i]) / (energy_[i + 1] - energy_[i]);
    return value_[i] + f * (value_[i + 1] - value_[i]);
  }
  return value_[i] * std::exp(slope_[i] * std::log(energy / energy_[i]));
}

// ---------------------------------------------------------------------------

StoppingPowerTable::StoppingPowerTable(Species species, std::string material,
                                       std::vector<double> energies, std::vector<double> stopping,
                                       double detour_factor)
    : species_(species),
      material_(std::move(material)),
      curve_(std::move(energies), std::move(stopping)),
      detour_(detour_factor) {
  if (curve_.energies().size() < 10) {
    throw Error(ErrorKind::validation,
                "stopping-power table for " + material_ + " needs at least 10 rows");
  }
  for (double s : curve_.values()) {
    if (!(s > 0.0)) {
      throw Error(ErrorKind::validation, "stopping power must be > 0 in table for " + material_);
    }
  }
  if (!(detour_ > 0.0 && detour_ <= 1.0)) {
    throw Error(ErrorKind::validation, "detour factor must lie in (0, 1] for " + material_);
  }
  const auto& e = curve_.energies();
  const auto& s = curve_.values();
  node_range_.resize(e.size());
  node_range_[0] = e[0] / s[0];
  for (std::size_t i = 0; i + 1 < e.size(); ++i) {
    node_range_[i + 1] = node_range_[i] + partial_range(i, e[i + 1]);
  }
}

double StoppingPowerTable::partial_range(std::size_t i, double energy) const {
  const auto& e = curve_.energies();
  const auto& s = curve_.values();
  // 1/S = (E_i/S_i) * x^(-k) / E_i with x = E/E_i; integrate over E.
  const double a = 1.0 - curve_.exponent(i);
  return e[i] / s[i] * power_integral(a, std::log(energy / e[i]));
}

double StoppingPowerTable::csda_range(double energy) const {
  const auto& e = curve_.energies();
  const auto& s = curve_.values();
  if (!(energy >= 0.0) || energy > e.back()) {
    throw Error(ErrorKind::range, range_message(energy, e.front(), e.back()));
  }
  if (energy <= e[0]) return energy / s[0];
  const std::size_t i = curve_.interval(energy);
  if (energy == e[i]) return node_range_[i];
  if (energy == e[i + 1]) return node_range_[i + 1];
  return node_range_[i] + partial_range(i, energy);
}

double StoppingPowerTable::energy_from_range(double range) const {
  const auto& e = curve_.energies();
  const auto& s = curve_.values();
  if (!(range >= 0.0) || range > node_range_.back()) {
    throw Error(ErrorKind::range, "residual range " + std::to_string(range) +
                                      " g/cm^2 outside table for " + material_);
  }
  if (range <= node_range_[0]) return range * s[0];
  auto it = std::upper_bound(node_range_.begin(), node_range_.end(), range);
  std::size_t i = static_cast<std::size_t>(std::distance(node_range_.begin(), it)) - 1;
  if (i >= e.size() - 1) return e.back();
  if (range == node_range_[i]) return e[i];
  const double a = 1.0 - curve_.exponent(i);
  const double y = (range - node_range_[i]) * s[i] / e[i];
  const double energy = e[i] * std::exp(inverse_power_integral(a, y));
  return std::clamp(energy, e[i], e[i + 1]);
}

// ---------------------------------------------------------------------------

NielTable::NielTable(Species species, std::vector<double> energies, std::vector<double> niel)
    : species_(species), curve_(std::move(energies), std::move(niel)) {}

double dose_convert(double energy_mev, double mass_g) {
  if (!(mass_g > 0.0)) throw Error(ErrorKind::validation, "dose conversion needs mass > 0");
  return energy_mev / mass_g / kMevPerGramPerRad;
}

double ddd_from_fluence(const ParticleSpectrum& spectrum, const NielTable& niel) {
  double total = 0.0;
  for (const auto& bin : spectrum.bins) {
    const double mid = bin.e_low > 0.0 ? std::sqrt(bin.e_low * bin.e_high) : 0.5 * bin.e_high;
    if (mid < niel.min_energy() || mid > niel.max_energy()) {
      throw Error(ErrorKind::range, "spectrum bin [" + std::to_string(bin.e_low) + ", " +
                                        std::to_string(bin.e_high) +
                                        "] MeV outside NIEL table range");
    }
    total += bin.fluence * niel.niel(mid);
  }
  return total;
}

// ---------------------------------------------------------------------------

namespace {

struct TableFile {
  csv::Document doc;
  Species species;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;  // per column
};

TableFile read_table_file(const std::filesystem::path& path) {
  TableFile f{csv::read(path), Species::proton, {}, {}};
  f.species = parse_species(f.doc.require("species"));
  const std::string spec = f.doc.require("columns");
  std::size_t start = 0;
  while (true) {
    auto comma = spec.find(',', start);
    f.columns.push_back(
        csv::trim(spec.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  f.data.assign(f.columns.size(), {});
  for (const auto& row : f.doc.rows) {
    if (row.fields.size() != f.columns.size()) {
      throw Error(ErrorKind::parse, path.string() + ":" + std::to_string(row.line) + ": expected " +
                                        std::to_string(f.columns.size()) + " columns");
    }
    for (std::size_t c = 0; c < row.fields.size(); ++c) {
      f.data[c].push_back(csv::to_double(row.fields[c], path.string(), row.line));
    }
  }
  return f;
}

}  // namespace

StoppingPowerTable read_stopping_table(const std::filesystem::path& path) {
  TableFile f = read_table_file(path);
  if (f.columns.size() < 2 || f.columns[0] != "E_MeV" || f.columns[1] != "S_MeVcm2_g") {
    throw Error(ErrorKind::parse, path.string() + ": expected columns E_MeV, S_MeVcm2_g");
  }
  double detour = 1.0;
  if (f.columns.size() >= 3 && f.columns[2] == "detour_factor" && !f.data[2].empty()) {
    detour = f.data[2].front();
    for (double d : f.data[2]) {
      if (d != detour) {
        throw Error(ErrorKind::parse, path.string() + ": detour_factor must be constant");
      }
    }
  }
  StoppingPowerTable table(f.species, f.doc.require("material"), std::move(f.data[0]),
                           std::move(f.data[1]), detour);
  table.metadata = f.doc.meta;
  return table;
}

NielTable read_niel_table(const std::filesystem::path& path) {
  TableFile f = read_table_file(path);
  if (f.columns.size() != 2 || f.columns[0] != "E_MeV" || f.columns[1] != "NIEL_MeVcm2_g") {
    throw Error(ErrorKind::parse, path.string() + ": expected columns E_MeV, NIEL_MeVcm2_g");
  }
  NielTable table(f.species, std::move(f.data[0]), std::move(f.data[1]));
  table.metadata = f.doc.meta;
  return table;
}

void PhysicsLibrary::add(StoppingPowerTable table) {
  auto key = std::make_pair(table.species(), table.material());
  stopping_.insert_or_assign(key, std::move(table));
}

void PhysicsLibrary::add(NielTable table) { niel_.insert_or_assign(table.species(), std::move(table)); }

bool PhysicsLibrary::has_stopping(Species species, const std::string& material) const {
  return stopping_.count({species, material}) != 0;
}

const StoppingPowerTable& PhysicsLibrary::stopping(Species species,
                                                   const std::string& material) const {
  auto it = stopping_.find({species, material});
  if (it == stopping_.end()) {
    throw Error(ErrorKind::validation, std::string("no ") + to_string(species) +
                                           " stopping-power table for material '" + material + "'");
  }
  return it->second;
}

bool PhysicsLibrary::has_niel(Species species) const { return niel_.count(species) != 0; }

const NielTable& PhysicsLibrary::niel(Species species) const {
  auto it = niel_.find(species);
  if (it == niel_.end()) {
    throw Error(ErrorKind::validation, std::string("no ") + to_string(species) + " NIEL table");
  }
  return it->second;
}

PhysicsLibrary load_physics(const std::filesystem::path& directory) {
  if (!std::filesystem::is_directory(directory)) {
    throw Error(ErrorKind::io, "physics table directory not found: " + directory.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(directory)) {
    if (entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  PhysicsLibrary lib;
  for (const auto& path : files) {
    const csv::Document doc = csv::read(path);
    const std::string columns = doc.has("columns") ? doc.meta.at("columns") : "";
    const std::string version = doc.has("version") ? doc.meta.at("version") : "unversioned";
    if (columns.find("NIEL_MeVcm2_g") != std::string::npos) {
      lib.add(read_niel_table(path));
    } else if (columns.find("S_MeVcm2_g") != std::string::npos) {
      lib.add(read_stopping_table(path));
    } else {
      continue;
    }
    lib.versions[path.filename().string()] = version;
  }
  return lib;
}

}  // namespace satrad

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace satrad {

enum class Species { proton, electron };

// Origin of a spectrum. Only trapped particles have a parametric surrogate;
// solar and cosmic spectra are accepted from files.
enum class SourceKind { trapped, solar, cosmic };

const char* to_string(Species species);
const char* to_string(SourceKind source);
Species parse_species(std::string_view text);
SourceKind parse_source(std::string_view text);

struct EnergyBin {
  double e_low = 0.0;    // MeV
  double e_high = 0.0;   // MeV
  double fluence = 0.0;  // particles / cm^2 over the exposure
};

// Omnidirectional integral fluence per energy bin.
struct ParticleSpectrum {
  Species species = Species::proton;
  SourceKind source = SourceKind::trapped;
  std::vector<EnergyBin> bins;

  double total_fluence() const;
};

// Bins contiguous, ascending, non-negative fluence and energy.
void validate_spectrum(const ParticleSpectrum& spectrum);

}  // namespace satrad

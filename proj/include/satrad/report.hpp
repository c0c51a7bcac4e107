#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "satrad/analysis.hpp"
#include "satrad/environment.hpp"
#include "satrad/transport.hpp"

namespace satrad {

using Json = nlohmann::ordered_json;

Json to_json(const Estimate& e);
Estimate estimate_from_json(const Json& j);

Json to_json(const ParticleSpectrum& spectrum);
ParticleSpectrum spectrum_from_json(const Json& j);

Json to_json(const MissionSegment& segment);
MissionSegment segment_from_json(const Json& j);

Json to_json(const TallyResult& tally);
Json to_json(const std::vector<CumulativeSeries>& series);
std::vector<CumulativeSeries> cumulative_from_json(const Json& j);

Json to_json(const CompareReport& report);

// One row per segment, detector, spectrum and band.
std::string tallies_csv(const std::vector<SegmentTally>& segments);

// Files are written with a trailing newline; JSON is indented by two spaces.
void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const Json& doc);
std::string read_text(const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);

}  // namespace satrad

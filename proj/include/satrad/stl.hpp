#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

#include "satrad/geometry.hpp"

namespace satrad::stl {

// Parses binary or ASCII STL. Coincident vertices are welded by exact
// coordinate equality so that topology checks can run on the result.
TriangleMesh parse(std::string_view bytes, std::string name, std::size_t material = 0);
TriangleMesh read(const std::filesystem::path& path, std::size_t material = 0);

std::string to_ascii(const TriangleMesh& mesh);
std::string to_binary(const TriangleMesh& mesh);

}  // namespace satrad::stl

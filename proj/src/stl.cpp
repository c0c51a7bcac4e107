#include "satrad/stl.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "satrad/csv.hpp"
#include "satrad/error.hpp"

namespace satrad::stl {

namespace {

class Welder {
 public:
  explicit Welder(TriangleMesh& mesh) : mesh_(mesh) {}

  std::uint32_t add(const Vec3& p) {
    const std::array<double, 3> key{p.x, p.y, p.z};
    auto [it, inserted] = index_.try_emplace(key, static_cast<std::uint32_t>(mesh_.vertices.size()));
    if (inserted) mesh_.vertices.push_back(p);
    return it->second;
  }

 private:
  TriangleMesh& mesh_;
  std::map<std::array<double, 3>, std::uint32_t> index_;
};

float read_f32(const char* p) {
  float f;
  std::memcpy(&f, p, sizeof f);
  return f;
}

void append_f32(std::string& out, float f) {
  char buf[4];
  std::memcpy(buf, &f, sizeof f);
  out.append(buf, 4);
}

bool looks_binary(std::string_view bytes) {
  if (bytes.size() < 84) return false;
  std::uint32_t count = 0;
  std::memcpy(&count, bytes.data() + 80, sizeof count);
  return bytes.size() == 84 + 50ULL * count;
}

TriangleMesh parse_binary(std::string_view bytes, std::string name, std::size_t material) {
  TriangleMesh mesh;
  mesh.name = std::move(name);
  mesh.material = material;
  Welder weld(mesh);
  std::uint32_t count = 0;
  std::memcpy(&count, bytes.data() + 80, sizeof count);
  mesh.triangles.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const char* rec = bytes.data() + 84 + 50ULL * i + 12;  // skip stored normal
    TriangleIndices tri{};
    for (int v = 0; v < 3; ++v) {
      const char* p = rec + 12 * v;
      tri[v] = weld.add({read_f32(p), read_f32(p + 4), read_f32(p + 8)});
    }
    mesh.triangles.push_back(tri);
  }
  return mesh;
}

TriangleMesh parse_ascii(std::string_view bytes, std::string name, std::size_t material) {
  TriangleMesh mesh;
  mesh.name = std::move(name);
  mesh.material = material;
  Welder weld(mesh);
  std::istringstream in{std::string(bytes)};
  std::string token;
  std::vector<std::uint32_t> pending;
  while (in >> token) {
    if (csv::to_lower(token) != "vertex") continue;
    std::string fields[3];
    if (!(in >> fields[0] >> fields[1] >> fields[2])) {
      throw Error(ErrorKind::parse, "STL '" + mesh.name + "': truncated vertex record");
    }
    Vec3 p;
    for (int a = 0; a < 3; ++a) p[a] = csv::to_double(fields[a], mesh.name, 0);
    pending.push_back(weld.add(p));
    if (pending.size() == 3) {
      mesh.triangles.push_back({pending[0], pending[1], pending[2]});
      pending.clear();
    }
  }
  if (!pending.empty()) {
    throw Error(ErrorKind::parse, "STL '" + mesh.name + "': vertex count not a multiple of 3");
  }
  return mesh;
}

}  // namespace

TriangleMesh parse(std::string_view bytes, std::string name, std::size_t material) {
  if (looks_binary(bytes)) return parse_binary(bytes, std::move(name), material);
  const auto head = csv::to_lower(csv::trim(bytes.substr(0, std::min<std::size_t>(bytes.size(), 256))));
  if (head.rfind("solid", 0) == 0) return parse_ascii(bytes, std::move(name), material);
  throw Error(ErrorKind::parse, "'" + name + "' is neither binary nor ASCII STL");
}

TriangleMesh read(const std::filesystem::path& path, std::size_t material) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.filename().string(), material);
}

std::string to_ascii(const TriangleMesh& mesh) {
  std::ostringstream out;
  out.precision(17);
  out << "solid " << mesh.name << "\n";
  for (const auto& tri : mesh.triangles) {
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    const Vec3 n = normalized(cross(b - a, c - a));
    out << "  facet normal " << n.x << ' ' << n.y << ' ' << n.z << "\n    outer loop\n";
    for (const Vec3* v : {&a, &b, &c}) {
      out << "      vertex " << v->x << ' ' << v->y << ' ' << v->z << "\n";
    }
    out << "    endloop\n  endfacet\n";
  }
  out << "endsolid " << mesh.name << "\n";
  return out.str();
}

std::string to_binary(const TriangleMesh& mesh) {
  std::string out(80, '\0');
  const std::string label = mesh.name.substr(0, 80);
  // A header starting with "solid" would make the file look like ASCII.
  out.replace(0, label.size(), label.rfind("solid", 0) == 0 ? std::string(label.size(), ' ') : label);
  const auto count = static_cast<std::uint32_t>(mesh.triangles.size());
  char buf[4];
  std::memcpy(buf, &count, 4);
  out.append(buf, 4);
  for (const auto& tri : mesh.triangles) {
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    const Vec3 n = normalized(cross(b - a, c - a));
    for (const Vec3* v : {&n, &a, &b, &c}) {
      append_f32(out, static_cast<float>(v->x));
      append_f32(out, static_cast<float>(v->y));
      append_f32(out, static_cast<float>(v->z));
    }
    out.append(2, '\0');
  }
  return out;
}

}  // namespace satrad::stl

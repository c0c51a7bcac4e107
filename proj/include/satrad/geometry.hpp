#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "satrad/vec3.hpp"

namespace satrad {

// Units throughout: cm, g, g/cm^3.

struct Material {
  std::string name;
  double density = 0.0;  // g/cm^3
  double effective_z = 0.0;
  std::vector<std::pair<std::string, double>> composition;  // (element, mass fraction)
};

// Throws validation errors for non-positive density or fractions not summing to 1.
void validate_material(const Material& material);

struct Aabb {
  Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity()};
  Vec3 hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
          -std::numeric_limits<double>::infinity()};

  void expand(const Vec3& p) {
    lo = component_min(lo, p);
    hi = component_max(hi, p);
  }
  void expand(const Aabb& b) {
    lo = component_min(lo, b.lo);
    hi = component_max(hi, b.hi);
  }
  bool empty() const { return lo.x > hi.x; }
  Vec3 center() const { return (lo + hi) * 0.5; }
  bool overlaps(const Aabb& o) const {
    return lo.x < o.hi.x && o.lo.x < hi.x && lo.y < o.hi.y && o.lo.y < hi.y && lo.z < o.hi.z &&
           o.lo.z < hi.z;
  }
};

using TriangleIndices = std::array<std::uint32_t, 3>;

struct TriangleMesh {
  std::string name;
  std::vector<Vec3> vertices;
  std::vector<TriangleIndices> triangles;
  std::size_t material = 0;  // index into the owning scene's material list
};

struct MeshCheck {
  std::size_t bad_indices = 0;
  std::size_t degenerate_triangles = 0;
  std::size_t open_edges = 0;          // undirected edges not shared by exactly two faces
  std::size_t misoriented_edges = 0;   // shared edges traversed in the same direction twice
  double signed_volume = 0.0;

  bool watertight() const { return open_edges == 0 && misoriented_edges == 0; }
};

MeshCheck check_mesh(const TriangleMesh& mesh);

// Validates indices, degeneracy and watertightness; flips the winding when the
// mesh is consistently oriented inward. Throws geometry errors naming the mesh.
void validate_and_orient(TriangleMesh& mesh);

TriangleMesh make_box_mesh(std::string name, const Vec3& lo, const Vec3& hi, std::size_t material);
TriangleMesh make_icosphere(std::string name, const Vec3& center, double radius, int subdivisions,
                            std::size_t material);

struct BoxShape {
  Vec3 lo;
  Vec3 hi;
};

struct CylinderShape {
  Vec3 base;     // center of the bottom cap
  Vec3 axis;     // unit vector from bottom to top cap
  double radius = 0.0;
  double height = 0.0;
};

using DetectorShape = std::variant<BoxShape, CylinderShape>;

struct DetectorVolume {
  std::string id;
  DetectorShape shape;
  std::size_t material = 0;
  double depletion_volume = 0.0;  // cm^3

  double volume() const;
  double surface_area() const;
  Aabb bounds() const;
  Vec3 center() const;
  double bounding_radius() const;  // about center()
  bool contains(const Vec3& p) const;
  // Parametric entry/exit distances of the infinite line origin + t*dir, if it
  // meets the volume. Entry may be negative when the origin is inside.
  std::optional<std::pair<double, double>> intersect(const Vec3& origin, const Vec3& dir) const;
};

struct BoundingSphere {
  Vec3 center;
  double radius = 0.0;
};

struct PathSegment {
  double entry = 0.0;   // distance from the ray origin, cm
  double length = 0.0;  // geometric length, cm
  std::size_t material = 0;
  int mesh = -1;      // owning mesh, -1 inside a detector
  int detector = -1;  // detector index, -1 in structure
};

struct SlantPath {
  std::vector<PathSegment> segments;
  double areal_density = 0.0;  // g/cm^2
};

class Bvh;

// Immutable after construction; every query is const and thread-safe.
class Scene {
 public:
  Scene(std::vector<Material> materials, std::vector<TriangleMesh> meshes,
        std::vector<DetectorVolume> detectors);
  ~Scene();
  Scene(Scene&&) noexcept;
  Scene& operator=(Scene&&) noexcept;

  const std::vector<Material>& materials() const { return materials_; }
  const std::vector<TriangleMesh>& meshes() const { return meshes_; }
  const std::vector<DetectorVolume>& detectors() const { return detectors_; }
  const BoundingSphere& bounding_sphere() const { return sphere_; }

  std::size_t material_index(const std::string& name) const;
  std::size_t detector_index(const std::string& id) const;
  double detector_mass(std::size_t detector) const;  // g

  // Ordered material segments from origin along dir, truncated at max_distance.
  // Overlaps resolve to the smallest enclosing mesh, then declaration order;
  // detector volumes take precedence over all meshes. Vacuum is omitted.
  SlantPath trace_ray(const Vec3& origin, const Vec3& dir,
                      double max_distance = std::numeric_limits<double>::infinity()) const;

  // Chord length of the half-ray from origin inside the detector.
  double detector_chord(const std::string& detector_id, const Vec3& origin, const Vec3& dir) const;
  double detector_chord(std::size_t detector, const Vec3& origin, const Vec3& dir) const;

 private:
  std::vector<Material> materials_;
  std::vector<TriangleMesh> meshes_;
  std::vector<DetectorVolume> detectors_;
  std::vector<int> mesh_rank_;  // lower rank wins overlaps
  BoundingSphere sphere_;
  double hit_merge_tolerance_ = 0.0;
  std::unique_ptr<Bvh> bvh_;
};

struct MaterialTable {
  std::vector<Material> materials;
  std::map<std::string, std::string> bindings;  // mesh file name or mesh name -> material

  const Material* find(const std::string& name) const;
};

MaterialTable load_material_table(const std::filesystem::path& path);

// STL (binary or ASCII) or native JSON scene. STL meshes carry no material:
// the sidecar table binds them by file name.
Scene load_scene(const std::filesystem::path& geometry_file,
                 const std::filesystem::path& material_table);

}  // namespace satrad

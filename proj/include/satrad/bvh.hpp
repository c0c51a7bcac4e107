#pragma once

#include <cstdint>
#include <vector>

#include "satrad/geometry.hpp"

namespace satrad {

struct SurfaceHit {
  double t = 0.0;
  std::uint32_t mesh = 0;
  int sign = 0;  // -1 entering (against the outward normal), +1 leaving
};

// Binary bounding volume hierarchy over the triangles of every mesh in a
// scene. Returns all crossings along a ray rather than the closest one.
// Triangle tests use the watertight formulation of Woop, Benthin and Wald
// (JCGT 2013), so a ray crossing a shared edge is never lost.
class Bvh {
 public:
  explicit Bvh(const std::vector<TriangleMesh>& meshes);

  // Appends crossings with 0 <= t <= t_max (unsorted).
  void collect_hits(const Vec3& origin, const Vec3& dir, double t_max,
                    std::vector<SurfaceHit>& out) const;

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t triangle_count() const { return tris_.size(); }

 private:
  struct Tri {
    Vec3 a, b, c;
    Vec3 normal;  // unnormalised (b - a) x (c - a)
    std::uint32_t mesh;
  };
  struct Node {
    Aabb box;
    std::uint32_t first = 0;  // first triangle (leaf) or right child (interior)
    std::uint32_t count = 0;  // > 0 for leaves
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end, std::vector<Vec3>& centroids);

  std::vector<Tri> tris_;
  std::vector<Node> nodes_;
};

}  // namespace satrad

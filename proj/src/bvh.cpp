#include "satrad/bvh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

namespace satrad {

namespace {

constexpr std::uint32_t kLeafSize = 4;

struct RayFrame {
  Vec3 origin;
  int kx = 0, ky = 1, kz = 2;
  double sx = 0.0, sy = 0.0, sz = 0.0;
  Vec3 inv;
  bool zero[3] = {false, false, false};
};

RayFrame make_frame(const Vec3& origin, const Vec3& dir) {
  RayFrame f;
  f.origin = origin;
  const double ax = std::fabs(dir.x), ay = std::fabs(dir.y), az = std::fabs(dir.z);
  f.kz = (ax > ay) ? (ax > az ? 0 : 2) : (ay > az ? 1 : 2);
  f.kx = (f.kz + 1) % 3;
  f.ky = (f.kx + 1) % 3;
  if (dir[f.kz] < 0.0) std::swap(f.kx, f.ky);
  f.sx = dir[f.kx] / dir[f.kz];
  f.sy = dir[f.ky] / dir[f.kz];
  f.sz = 1.0 / dir[f.kz];
  for (int a = 0; a < 3; ++a) {
    f.zero[a] = dir[a] == 0.0;
    f.inv[a] = f.zero[a] ? 0.0 : 1.0 / dir[a];
  }
  return f;
}

bool slab_test(const Aabb& box, const RayFrame& f, double t_max) {
  double t0 = 0.0;
  double t1 = t_max;
  for (int a = 0; a < 3; ++a) {
    const double o = f.origin[a];
    if (f.zero[a]) {
      if (o < box.lo[a] || o > box.hi[a]) return false;
      continue;
    }
    double near = (box.lo[a] - o) * f.inv[a];
    double far = (box.hi[a] - o) * f.inv[a];
    if (near > far) std::swap(near, far);
    t0 = std::max(t0, near);
    t1 = std::min(t1, far);
    if (t0 > t1) return false;
  }
  return true;
}

}  // namespace

Bvh::Bvh(const std::vector<TriangleMesh>& meshes) {
  for (std::uint32_t m = 0; m < meshes.size(); ++m) {
    const auto& mesh = meshes[m];
    for (const auto& tri : mesh.triangles) {
      const Vec3& a = mesh.vertices[tri[0]];
      const Vec3& b = mesh.vertices[tri[1]];
      const Vec3& c = mesh.vertices[tri[2]];
      tris_.push_back({a, b, c, cross(b - a, c - a), m});
    }
  }
  if (tris_.empty()) return;
  std::vector<Vec3> centroids(tris_.size());
  for (std::size_t i = 0; i < tris_.size(); ++i) {
    centroids[i] = (tris_[i].a + tris_[i].b + tris_[i].c) * (1.0 / 3.0);
  }
  nodes_.reserve(2 * tris_.size() / kLeafSize + 1);
  build(0, static_cast<std::uint32_t>(tris_.size()), centroids);
}

std::uint32_t Bvh::build(std::uint32_t begin, std::uint32_t end, std::vector<Vec3>& centroids) {
  const auto index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  Aabb box;
  Aabb centroid_box;
  for (std::uint32_t i = begin; i < end; ++i) {
    box.expand(tris_[i].a);
    box.expand(tris_[i].b);
    box.expand(tris_[i].c);
    centroid_box.expand(centroids[i]);
  }
  // Pad so that rounding in the slab test can never cull a true crossing.
  const Vec3 extent = box.hi - box.lo;
  const double pad = 1e-9 * (std::max({extent.x, extent.y, extent.z}) + 1.0);
  box.lo -= Vec3{pad, pad, pad};
  box.hi += Vec3{pad, pad, pad};
  nodes_[index].box = box;

  if (end - begin <= kLeafSize) {
    nodes_[index].first = begin;
    nodes_[index].count = end - begin;
    return index;
  }

  const Vec3 ce = centroid_box.hi - centroid_box.lo;
  const int axis = (ce.x >= ce.y && ce.x >= ce.z) ? 0 : (ce.y >= ce.z ? 1 : 2);
  const std::uint32_t mid = begin + (end - begin) / 2;

  // Median split on a permutation so triangles and centroids move together.
  std::vector<std::uint32_t> order(end - begin);
  std::iota(order.begin(), order.end(), begin);
  std::nth_element(order.begin(), order.begin() + (mid - begin), order.end(),
                   [&](std::uint32_t l, std::uint32_t r) {
                     const double cl = centroids[l][axis];
                     const double cr = centroids[r][axis];
                     return cl < cr || (cl == cr && l < r);
                   });
  std::vector<Tri> tmp_tris;
  std::vector<Vec3> tmp_centroids;
  tmp_tris.reserve(order.size());
  tmp_centroids.reserve(order.size());
  for (auto i : order) {
    tmp_tris.push_back(tris_[i]);
    tmp_centroids.push_back(centroids[i]);
  }
  std::copy(tmp_tris.begin(), tmp_tris.end(), tris_.begin() + begin);
  std::copy(tmp_centroids.begin(), tmp_centroids.end(), centroids.begin() + begin);

  build(begin, mid, centroids);
  const std::uint32_t right = build(mid, end, centroids);
  nodes_[index].first = right;
  nodes_[index].count = 0;
  return index;
}

void Bvh::collect_hits(const Vec3& origin, const Vec3& dir, double t_max,
                       std::vector<SurfaceHit>& out) const {
  if (nodes_.empty()) return;
  const RayFrame f = make_frame(origin, dir);
  std::uint32_t stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (!slab_test(node.box, f, t_max)) continue;
    if (node.count == 0) {
      const auto self = static_cast<std::uint32_t>(&node - nodes_.data());
      stack[top++] = node.first;
      stack[top++] = self + 1;
      continue;
    }
    for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
      const Tri& tri = tris_[i];
      const Vec3 a = tri.a - f.origin;
      const Vec3 b = tri.b - f.origin;
      const Vec3 c = tri.c - f.origin;
      const double ax = a[f.kx] - f.sx * a[f.kz];
      const double ay = a[f.ky] - f.sy * a[f.kz];
      const double bx = b[f.kx] - f.sx * b[f.kz];
      const double by = b[f.ky] - f.sy * b[f.kz];
      const double cx = c[f.kx] - f.sx * c[f.kz];
      const double cy = c[f.ky] - f.sy * c[f.kz];
      const double u = cx * by - cy * bx;
      const double v = ax * cy - ay * cx;
      const double w = bx * ay - by * ax;
      if ((u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0)) continue;
      const double det = u + v + w;
      if (det == 0.0) continue;
      const double t =
          (u * f.sz * a[f.kz] + v * f.sz * b[f.kz] + w * f.sz * c[f.kz]) / det;
      if (!(t >= 0.0) || t > t_max) continue;
      const double facing = dot(tri.normal, dir);
      if (facing == 0.0) continue;
      out.push_back({t, tri.mesh, facing < 0.0 ? -1 : 1});
    }
  }
}

}  // namespace satrad

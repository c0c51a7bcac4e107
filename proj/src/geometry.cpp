#include "satrad/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <unordered_map>

#include "satrad/bvh.hpp"
#include "satrad/error.hpp"

namespace satrad {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::optional<std::pair<double, double>> clip_slab(double origin, double dir, double lo, double hi,
                                                   double t0, double t1) {
  if (dir == 0.0) {
    if (origin < lo || origin > hi) return std::nullopt;
    return std::make_pair(t0, t1);
  }
  double near = (lo - origin) / dir;
  double far = (hi - origin) / dir;
  if (near > far) std::swap(near, far);
  t0 = std::max(t0, near);
  t1 = std::min(t1, far);
  if (t0 > t1) return std::nullopt;
  return std::make_pair(t0, t1);
}

}  // namespace

void validate_material(const Material& material) {
  if (material.name.empty()) throw Error(ErrorKind::validation, "material with empty name");
  if (!(material.density > 0.0)) {
    throw Error(ErrorKind::validation,
                "material '" + material.name + "': density must be > 0 g/cm^3");
  }
  if (!material.composition.empty()) {
    double sum = 0.0;
    for (const auto& [element, fraction] : material.composition) {
      if (fraction < 0.0) {
        throw Error(ErrorKind::validation,
                    "material '" + material.name + "': negative mass fraction for " + element);
      }
      sum += fraction;
    }
    if (std::fabs(sum - 1.0) > 1e-6) {
      throw Error(ErrorKind::validation, "material '" + material.name +
                                             "': mass fractions sum to " + std::to_string(sum));
    }
  }
}

MeshCheck check_mesh(const TriangleMesh& mesh) {
  MeshCheck check;
  const auto nv = mesh.vertices.size();
  std::unordered_map<std::uint64_t, int> directed;
  directed.reserve(mesh.triangles.size() * 3);
  for (const auto& tri : mesh.triangles) {
    if (tri[0] >= nv || tri[1] >= nv || tri[2] >= nv) {
      ++check.bad_indices;
      continue;
    }
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    const Vec3 n = cross(b - a, c - a);
    const double scale = std::max({dot(b - a, b - a), dot(c - a, c - a), dot(c - b, c - b)});
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] || norm(n) <= 1e-12 * scale) {
      ++check.degenerate_triangles;
    }
    check.signed_volume += dot(a, cross(b, c)) / 6.0;
    for (int e = 0; e < 3; ++e) {
      const std::uint64_t from = tri[e];
      const std::uint64_t to = tri[(e + 1) % 3];
      ++directed[(from << 32) | to];
    }
  }
  for (const auto& [key, count] : directed) {
    const std::uint64_t from = key >> 32;
    const std::uint64_t to = key & 0xFFFFFFFFULL;
    if (from > to && directed.count((to << 32) | from)) continue;  // counted from the other side
    auto rev = directed.find((to << 32) | from);
    const int reverse = rev == directed.end() ? 0 : rev->second;
    if (count == 1 && reverse == 1) continue;
    if (count + reverse == 2) {
      ++check.misoriented_edges;
    } else {
      ++check.open_edges;
    }
  }
  return check;
}

void validate_and_orient(TriangleMesh& mesh) {
  if (mesh.triangles.empty()) {
    throw Error(ErrorKind::geometry, "mesh '" + mesh.name + "' has no triangles");
  }
  const MeshCheck check = check_mesh(mesh);
  if (check.bad_indices > 0) {
    throw Error(ErrorKind::geometry, "mesh '" + mesh.name + "': " +
                                         std::to_string(check.bad_indices) +
                                         " triangles with out-of-range vertex indices");
  }
  if (check.degenerate_triangles > 0) {
    throw Error(ErrorKind::geometry, "mesh '" + mesh.name + "': " +
                                         std::to_string(check.degenerate_triangles) +
                                         " degenerate (zero-area) triangles");
  }
  if (!check.watertight()) {
    std::string msg = "mesh '" + mesh.name + "' is not watertight: " +
                      std::to_string(check.open_edges) + " open edges";
    if (check.misoriented_edges > 0) {
      msg += ", " + std::to_string(check.misoriented_edges) + " inconsistently oriented edges";
    }
    throw Error(ErrorKind::geometry, msg);
  }
  if (check.signed_volume == 0.0) {
    throw Error(ErrorKind::geometry, "mesh '" + mesh.name + "' encloses zero volume");
  }
  if (check.signed_volume < 0.0) {
    for (auto& tri : mesh.triangles) std::swap(tri[1], tri[2]);
  }
}

TriangleMesh make_box_mesh(std::string name, const Vec3& lo, const Vec3& hi,
                           std::size_t material) {
  TriangleMesh mesh;
  mesh.name = std::move(name);
  mesh.material = material;
  for (int i = 0; i < 8; ++i) {
    mesh.vertices.push_back({(i & 1) ? hi.x : lo.x, (i & 2) ? hi.y : lo.y, (i & 4) ? hi.z : lo.z});
  }
  // Outward-facing, counter-clockwise when seen from outside.
  mesh.triangles = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                    {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return mesh;
}

TriangleMesh make_icosphere(std::string name, const Vec3& center, double radius, int subdivisions,
                            std::size_t material) {
  const double p = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> unit = {{-1, p, 0}, {1, p, 0}, {-1, -p, 0}, {1, -p, 0},
                            {0, -1, p}, {0, 1, p}, {0, -1, -p}, {0, 1, -p},
                            {p, 0, -1}, {p, 0, 1}, {-p, 0, -1}, {-p, 0, 1}};
  for (auto& v : unit) v = normalized(v);
  std::vector<TriangleIndices> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoints;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      auto it = midpoints.find(key);
      if (it != midpoints.end()) return it->second;
      unit.push_back(normalized((unit[a] + unit[b]) * 0.5));
      const auto idx = static_cast<std::uint32_t>(unit.size() - 1);
      midpoints.emplace(key, idx);
      return idx;
    };
    std::vector<TriangleIndices> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const auto ab = midpoint(f[0], f[1]);
      const auto bc = midpoint(f[1], f[2]);
      const auto ca = midpoint(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
  TriangleMesh mesh;
  mesh.name = std::move(name);
  mesh.material = material;
  mesh.vertices.reserve(unit.size());
  for (const auto& v : unit) mesh.vertices.push_back(center + v * radius);
  mesh.triangles = std::move(faces);
  return mesh;
}

// ---------------------------------------------------------------------------
// DetectorVolume

double DetectorVolume::volume() const {
  if (const auto* box = std::get_if<BoxShape>(&shape)) {
    const Vec3 e = box->hi - box->lo;
    return e.x * e.y * e.z;
  }
  const auto& cyl = std::get<CylinderShape>(shape);
  return std::numbers::pi * cyl.radius * cyl.radius * cyl.height;
}

double DetectorVolume::surface_area() const {
  if (const auto* box = std::get_if<BoxShape>(&shape)) {
    const Vec3 e = box->hi - box->lo;
    return 2.0 * (e.x * e.y + e.y * e.z + e.z * e.x);
  }
  const auto& cyl = std::get<CylinderShape>(shape);
  return 2.0 * std::numbers::pi * cyl.radius * (cyl.radius + cyl.height);
}

Aabb DetectorVolume::bounds() const {
  Aabb b;
  if (const auto* box = std::get_if<BoxShape>(&shape)) {
    b.expand(box->lo);
    b.expand(box->hi);
    return b;
  }
  const auto& cyl = std::get<CylinderShape>(shape);
  const Vec3 top = cyl.base + cyl.axis * cyl.height;
  const Vec3 r{cyl.radius * std::sqrt(std::max(0.0, 1.0 - cyl.axis.x * cyl.axis.x)),
               cyl.radius * std::sqrt(std::max(0.0, 1.0 - cyl.axis.y * cyl.axis.y)),
               cyl.radius * std::sqrt(std::max(0.0, 1.0 - cyl.axis.z * cyl.axis.z))};
  b.expand(cyl.base - r);
  b.expand(cyl.base + r);
  b.expand(top - r);
  b.expand(top + r);
  return b;
}

Vec3 DetectorVolume::center() const {
  if (const auto* box = std::get_if<BoxShape>(&shape)) return (box->lo + box->hi) * 0.5;
  const auto& cyl = std::get<CylinderShape>(shape);
  return cyl.base + cyl.axis * (0.5 * cyl.height);
}

double DetectorVolume::bounding_radius() const {
  if (const auto* box = std::get_if<BoxShape>(&shape)) return 0.5 * norm(box->hi - box->lo);
  const auto& cyl = std::get<CylinderShape>(shape);
  return std::hypot(cyl.radius, 0.5 * cyl.height);
}

bool DetectorVolume::contains(const Vec3& p) const {
  if (const auto* box = std::get_if<BoxShape>(&shape)) {
    return p.x >= box->lo.x && p.x <= box->hi.x && p.y >= box->lo.y && p.y <= box->hi.y &&
           p.z >= box->lo.z && p.z <= box->hi.z;
  }
  const auto& cyl = std::get<CylinderShape>(shape);
  const Vec3 w = p - cyl.base;
  const double along = dot(w, cyl.axis);
  if (along < 0.0 || along > cyl.height) return false;
  const Vec3 radial = w - cyl.axis * along;
  return dot(radial, radial) <= cyl.radius * cyl.radius;
}

std::optional<std::pair<double, double>> DetectorVolume::intersect(const Vec3& origin,
                                                                   const Vec3& dir) const {
  if (const auto* box = std::get_if<BoxShape>(&shape)) {
    std::optional<std::pair<double, double>> range = std::make_pair(-kInf, kInf);
    for (int a = 0; a < 3 && range; ++a) {
      range = clip_slab(origin[a], dir[a], box->lo[a], box->hi[a], range->first, range->second);
    }
    return range;
  }
  const auto& cyl = std::get<CylinderShape>(shape);
  const Vec3 w = origin - cyl.base;
  const double w_along = dot(w, cyl.axis);
  const double d_along = dot(dir, cyl.axis);
  auto range = clip_slab(w_along, d_along, 0.0, cyl.height, -kInf, kInf);
  if (!range) return std::nullopt;
  const Vec3 wp = w - cyl.axis * w_along;
  const Vec3 dp = dir - cyl.axis * d_along;
  const double a = dot(dp, dp);
  const double c = dot(wp, wp) - cyl.radius * cyl.radius;
  if (a == 0.0) {
    if (c > 0.0) return std::nullopt;
    return range;
  }
  const double b = dot(wp, dp);
  const double disc = b * b - a * c;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  // Numerically stable root pair.
  const double q = -(b + std::copysign(sq, b));
  double t0 = q / a;
  double t1 = q != 0.0 ? c / q : -t0;
  if (t0 > t1) std::swap(t0, t1);
  const double lo = std::max(range->first, t0);
  const double hi = std::min(range->second, t1);
  if (lo > hi) return std::nullopt;
  return std::make_pair(lo, hi);
}

// ---------------------------------------------------------------------------
// Scene

Scene::~Scene() = default;
Scene::Scene(Scene&&) noexcept = default;
Scene& Scene::operator=(Scene&&) noexcept = default;

Scene::Scene(std::vector<Material> materials, std::vector<TriangleMesh> meshes,
             std::vector<DetectorVolume> detectors)
    : materials_(std::move(materials)),
      meshes_(std::move(meshes)),
      detectors_(std::move(detectors)) {
  std::set<std::string> names;
  for (const auto& m : materials_) {
    if (m.name.empty() || !names.insert(m.name).second) {
      throw Error(ErrorKind::validation, "duplicate or empty material name '" + m.name + "'");
    }
    if (m.density < 0.0) {
      throw Error(ErrorKind::validation, "material '" + m.name + "' has negative density");
    }
  }
  if (meshes_.empty() && detectors_.empty()) {
    throw Error(ErrorKind::geometry, "scene contains neither meshes nor detectors");
  }

  std::vector<double> volumes;
  for (auto& mesh : meshes_) {
    if (mesh.material >= materials_.size()) {
      throw Error(ErrorKind::validation, "mesh '" + mesh.name + "' references unknown material");
    }
    validate_and_orient(mesh);
    volumes.push_back(std::fabs(check_mesh(mesh).signed_volume));
  }
  std::vector<int> order(meshes_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return volumes[a] < volumes[b]; });
  mesh_rank_.assign(meshes_.size(), 0);
  for (std::size_t r = 0; r < order.size(); ++r) mesh_rank_[order[r]] = static_cast<int>(r);

  std::set<std::string> ids;
  for (const auto& det : detectors_) {
    if (det.id.empty() || !ids.insert(det.id).second) {
      throw Error(ErrorKind::validation, "duplicate or empty detector id '" + det.id + "'");
    }
    if (det.material >= materials_.size()) {
      throw Error(ErrorKind::validation, "detector '" + det.id + "' references unknown material");
    }
    if (const auto* cyl = std::get_if<CylinderShape>(&det.shape)) {
      if (std::fabs(norm(cyl->axis) - 1.0) > 1e-9 || !(cyl->radius > 0.0) ||
          !(cyl->height > 0.0)) {
        throw Error(ErrorKind::validation, "detector '" + det.id + "': invalid cylinder");
      }
    } else {
      const auto& box = std::get<BoxShape>(det.shape);
      if (!(box.hi.x > box.lo.x && box.hi.y > box.lo.y && box.hi.z > box.lo.z)) {
        throw Error(ErrorKind::validation, "detector '" + det.id + "': empty box");
      }
    }
    if (det.depletion_volume < 0.0 || det.depletion_volume > det.volume() * (1.0 + 1e-12)) {
      throw Error(ErrorKind::validation,
                  "detector '" + det.id + "': depletion volume must lie in [0, geometric volume]");
    }
  }
  // Axis-aligned bounds are exact for boxes and conservative for cylinders.
  for (std::size_t i = 0; i < detectors_.size(); ++i) {
    for (std::size_t j = i + 1; j < detectors_.size(); ++j) {
      if (detectors_[i].bounds().overlaps(detectors_[j].bounds())) {
        throw Error(ErrorKind::geometry, "detectors '" + detectors_[i].id + "' and '" +
                                             detectors_[j].id + "' overlap");
      }
    }
  }

  Aabb box;
  for (const auto& mesh : meshes_) {
    for (const auto& v : mesh.vertices) box.expand(v);
  }
  for (const auto& det : detectors_) box.expand(det.bounds());
  sphere_.center = box.center();
  double r2 = 0.0;
  auto grow = [&](const Vec3& p) {
    const Vec3 d = p - sphere_.center;
    r2 = std::max(r2, dot(d, d));
  };
  for (const auto& mesh : meshes_) {
    for (const auto& v : mesh.vertices) grow(v);
  }
  for (const auto& det : detectors_) {
    const Aabb b = det.bounds();
    for (int i = 0; i < 8; ++i) {
      grow({(i & 1) ? b.hi.x : b.lo.x, (i & 2) ? b.hi.y : b.lo.y, (i & 4) ? b.hi.z : b.lo.z});
    }
  }
  sphere_.radius = std::sqrt(r2) * 1.01;
  hit_merge_tolerance_ = 1e-10 * std::max(sphere_.radius, 1.0);
  bvh_ = std::make_unique<Bvh>(meshes_);
}

std::size_t Scene::material_index(const std::string& name) const {
  for (std::size_t i = 0; i < materials_.size(); ++i) {
    if (materials_[i].name == name) return i;
  }
  throw Error(ErrorKind::validation, "unknown material '" + name + "'");
}

std::size_t Scene::detector_index(const std::string& id) const {
  for (std::size_t i = 0; i < detectors_.size(); ++i) {
    if (detectors_[i].id == id) return i;
  }
  throw Error(ErrorKind::validation, "unknown detector '" + id + "'");
}

double Scene::detector_mass(std::size_t detector) const {
  const auto& det = detectors_.at(detector);
  return det.volume() * materials_[det.material].density;
}

double Scene::detector_chord(const std::string& detector_id, const Vec3& origin,
                             const Vec3& dir) const {
  return detector_chord(detector_index(detector_id), origin, dir);
}

double Scene::detector_chord(std::size_t detector, const Vec3& origin, const Vec3& dir) const {
  const auto range = detectors_.at(detector).intersect(origin, dir);
  if (!range) return 0.0;
  return std::max(0.0, range->second - std::max(range->first, 0.0));
}

SlantPath Scene::trace_ray(const Vec3& origin, const Vec3& dir, double max_distance) const {
  struct Event {
    double t;
    int mesh;      // -1 for detector events
    int detector;  // -1 for mesh events
    int sign;      // +1 leaving, -1 entering
  };

  std::vector<SurfaceHit> hits;
  bvh_->collect_hits(origin, dir, kInf, hits);
  std::sort(hits.begin(), hits.end(), [](const SurfaceHit& a, const SurfaceHit& b) {
    return a.mesh != b.mesh ? a.mesh < b.mesh : a.t < b.t;
  });

  std::vector<Event> events;
  events.reserve(hits.size() + 2 * detectors_.size());
  std::vector<int> depth(meshes_.size(), 0);
  // Crossings that coincide (shared vertex or edge) collapse to one net crossing.
  for (std::size_t i = 0; i < hits.size();) {
    std::size_t j = i;
    int net = 0;
    while (j < hits.size() && hits[j].mesh == hits[i].mesh &&
           hits[j].t - hits[i].t <= hit_merge_tolerance_) {
      net += hits[j].sign;
      ++j;
    }
    if (net != 0) {
      const int sign = net > 0 ? 1 : -1;
      events.push_back({hits[i].t, static_cast<int>(hits[i].mesh), -1, sign});
      depth[hits[i].mesh] += sign;  // leaving crossings minus entering ones = depth at origin
    }
    i = j;
  }
  for (auto& d : depth) d = std::max(d, 0);

  std::vector<char> inside_detector(detectors_.size(), 0);
  for (std::size_t d = 0; d < detectors_.size(); ++d) {
    const auto range = detectors_[d].intersect(origin, dir);
    if (!range || range->second <= 0.0) continue;
    if (range->first <= 0.0) {
      inside_detector[d] = 1;
    } else {
      events.push_back({range->first, -1, static_cast<int>(d), -1});
    }
    events.push_back({range->second, -1, static_cast<int>(d), 1});
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });

  SlantPath path;
  auto current = [&](int& mesh, int& det) {
    det = -1;
    mesh = -1;
    for (std::size_t d = 0; d < detectors_.size(); ++d) {
      if (inside_detector[d]) {
        det = static_cast<int>(d);
        return;
      }
    }
    int best_rank = std::numeric_limits<int>::max();
    for (std::size_t m = 0; m < meshes_.size(); ++m) {
      if (depth[m] > 0 && mesh_rank_[m] < best_rank) {
        best_rank = mesh_rank_[m];
        mesh = static_cast<int>(m);
      }
    }
  };
  auto emit = [&](double t0, double t1) {
    t1 = std::min(t1, max_distance);
    if (!(t1 > t0)) return;
    int mesh = -1;
    int det = -1;
    current(mesh, det);
    if (mesh < 0 && det < 0) return;
    const std::size_t material =
        det >= 0 ? detectors_[det].material : meshes_[static_cast<std::size_t>(mesh)].material;
    if (!path.segments.empty()) {
      auto& last = path.segments.back();
      if (last.mesh == mesh && last.detector == det && last.entry + last.length == t0) {
        last.length = t1 - last.entry;
        return;
      }
    }
    path.segments.push_back({t0, t1 - t0, material, mesh, det});
  };

  double t_prev = 0.0;
  for (const auto& ev : events) {
    if (t_prev >= max_distance) break;
    if (ev.t > t_prev) {
      emit(t_prev, ev.t);
      t_prev = ev.t;
    }
    if (ev.detector >= 0) {
      inside_detector[ev.detector] = ev.sign < 0 ? 1 : 0;
    } else {
      depth[ev.mesh] = std::max(0, depth[ev.mesh] - ev.sign);
    }
  }

  for (const auto& seg : path.segments) {
    path.areal_density += seg.length * materials_[seg.material].density;
  }
  return path;
}

}  // namespace satrad

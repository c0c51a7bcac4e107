#include <fstream>
#include <sstream>

#include "json.hpp"
#include "satrad/csv.hpp"
#include "satrad/error.hpp"
#include "satrad/geometry.hpp"
#include "satrad/stl.hpp"

namespace satrad {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse, path.string() + ": " + e.what());
  }
}

Vec3 to_vec3(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorKind::parse, what + ": expected [x, y, z]");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Material parse_material(const json& j) {
  Material m;
  m.name = j.at("name").get<std::string>();
  m.density = j.at("density").get<double>();
  m.effective_z = j.value("effective_Z", 0.0);
  if (j.contains("composition")) {
    for (const auto& entry : j.at("composition")) {
      m.composition.emplace_back(entry.at(0).get<std::string>(), entry.at(1).get<double>());
    }
  }
  return m;
}

}  // namespace

const Material* MaterialTable::find(const std::string& name) const {
  for (const auto& m : materials) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

MaterialTable load_material_table(const fs::path& path) {
  const json doc = read_json(path);
  MaterialTable table;
  try {
    for (const auto& entry : doc.at("materials")) {
      Material m = parse_material(entry);
      validate_material(m);
      if (table.find(m.name)) {
        throw Error(ErrorKind::validation, path.string() + ": duplicate material '" + m.name + "'");
      }
      table.materials.push_back(std::move(m));
    }
    if (doc.contains("bindings")) {
      for (const auto& [key, value] : doc.at("bindings").items()) {
        table.bindings[key] = value.get<std::string>();
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, path.string() + ": " + e.what());
  }
  return table;
}

Scene load_scene(const fs::path& geometry_file, const fs::path& material_table) {
  const MaterialTable table = load_material_table(material_table);
  std::vector<Material> materials = table.materials;
  auto material_of = [&](const std::string& name, const std::string& owner) -> std::size_t {
    for (std::size_t i = 0; i < materials.size(); ++i) {
      if (materials[i].name == name) return i;
    }
    throw Error(ErrorKind::validation,
                "unknown material name '" + name + "' for '" + owner + "'");
  };
  auto bound_material = [&](const std::string& key, const std::string& owner) -> std::size_t {
    auto it = table.bindings.find(key);
    if (it == table.bindings.end()) {
      throw Error(ErrorKind::validation, "no material binding for mesh '" + owner + "'");
    }
    return material_of(it->second, owner);
  };

  std::vector<TriangleMesh> meshes;
  std::vector<DetectorVolume> detectors;

  const auto ext = csv::to_lower(geometry_file.extension().string());
  if (ext == ".stl") {
    TriangleMesh mesh = stl::read(geometry_file);
    mesh.material = bound_material(geometry_file.filename().string(), mesh.name);
    meshes.push_back(std::move(mesh));
    return Scene(std::move(materials), std::move(meshes), {});
  }

  const json doc = read_json(geometry_file);
  const fs::path base = geometry_file.parent_path();
  try {
    for (const auto& jm : doc.value("meshes", json::array())) {
      const std::string name = jm.at("name").get<std::string>();
      TriangleMesh mesh;
      std::string binding_key = name;
      if (jm.contains("stl")) {
        const fs::path stl_path = base / jm.at("stl").get<std::string>();
        mesh = stl::read(stl_path);
        binding_key = stl_path.filename().string();
      } else if (jm.contains("box")) {
        mesh = make_box_mesh(name, to_vec3(jm.at("box").at("min"), name),
                             to_vec3(jm.at("box").at("max"), name), 0);
      } else if (jm.contains("sphere")) {
        const auto& s = jm.at("sphere");
        mesh = make_icosphere(name, to_vec3(s.at("center"), name), s.at("radius").get<double>(),
                              s.value("subdivisions", 3), 0);
      } else {
        for (const auto& v : jm.at("vertices")) mesh.vertices.push_back(to_vec3(v, name));
        for (const auto& t : jm.at("triangles")) {
          mesh.triangles.push_back(
              {t.at(0).get<std::uint32_t>(), t.at(1).get<std::uint32_t>(),
               t.at(2).get<std::uint32_t>()});
        }
      }
      mesh.name = name;
      mesh.material = jm.contains("material")
                          ? material_of(jm.at("material").get<std::string>(), name)
                          : bound_material(binding_key, name);
      meshes.push_back(std::move(mesh));
    }
    for (const auto& jd : doc.value("detectors", json::array())) {
      DetectorVolume det;
      det.id = jd.at("id").get<std::string>();
      det.material = material_of(jd.at("material").get<std::string>(), det.id);
      if (jd.contains("box")) {
        det.shape = BoxShape{to_vec3(jd.at("box").at("min"), det.id),
                             to_vec3(jd.at("box").at("max"), det.id)};
      } else {
        const auto& c = jd.at("cylinder");
        det.shape = CylinderShape{to_vec3(c.at("base"), det.id),
                                  normalized(to_vec3(c.at("axis"), det.id)),
                                  c.at("radius").get<double>(), c.at("height").get<double>()};
      }
      det.depletion_volume = jd.value("depletion_volume", det.volume());
      detectors.push_back(std::move(det));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, geometry_file.string() + ": " + e.what());
  }
  return Scene(std::move(materials), std::move(meshes), std::move(detectors));
}

}  // namespace satrad

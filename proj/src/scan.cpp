#include "vxf/scan.h"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vxf {

namespace {

struct PlyProperty {
  std::string type;
  std::string name;
};

size_t property_size(const std::string& type) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
  if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
  if (type == "int" || type == "uint" || type == "int32" || type == "uint32" || type == "float" ||
      type == "float32") {
    return 4;
  }
  if (type == "double" || type == "float64" || type == "int64" || type == "uint64") return 8;
  throw std::runtime_error("unsupported PLY property type: " + type);
}

double parse_scalar(const char* data, const std::string& type) {
  if (type == "float" || type == "float32") {
    float v;
    std::memcpy(&v, data, 4);
    return v;
  }
  if (type == "double" || type == "float64") {
    double v;
    std::memcpy(&v, data, 8);
    return v;
  }
  if (type == "uchar" || type == "uint8") {
    return static_cast<uint8_t>(data[0]);
  }
  if (type == "char" || type == "int8") {
    return static_cast<int8_t>(data[0]);
  }
  if (type == "short" || type == "int16") {
    int16_t v;
    std::memcpy(&v, data, 2);
    return v;
  }
  if (type == "ushort" || type == "uint16") {
    uint16_t v;
    std::memcpy(&v, data, 2);
    return v;
  }
  if (type == "int" || type == "int32") {
    int32_t v;
    std::memcpy(&v, data, 4);
    return v;
  }
  if (type == "uint" || type == "uint32") {
    uint32_t v;
    std::memcpy(&v, data, 4);
    return v;
  }
  throw std::runtime_error("unsupported PLY scalar type: " + type);
}

}  // namespace

Scan load_ply_points(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open PLY file: " + path);

  std::string line;
  if (!std::getline(in, line) || line.substr(0, 3) != "ply") {
    throw std::runtime_error("not a PLY file: " + path);
  }

  bool binary = false;
  size_t vertex_count = 0;
  std::vector<PlyProperty> props;
  bool in_vertex_element = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "comment" || tok == "obj_info") continue;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii") {
        binary = false;
      } else if (fmt == "binary_little_endian") {
        binary = true;
      } else {
        throw std::runtime_error("unsupported PLY format: " + fmt);
      }
    } else if (tok == "element") {
      std::string name;
      size_t count;
      ls >> name >> count;
      in_vertex_element = (name == "vertex");
      if (in_vertex_element) vertex_count = count;
    } else if (tok == "property") {
      if (!in_vertex_element) continue;  // face properties are not read
      PlyProperty p;
      ls >> p.type >> p.name;
      if (p.type == "list") throw std::runtime_error("list property on vertex element");
      props.push_back(p);
    } else if (tok == "end_header") {
      break;
    }
  }

  int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
  for (size_t i = 0; i < props.size(); ++i) {
    if (props[i].name == "x") ix = static_cast<int>(i);
    if (props[i].name == "y") iy = static_cast<int>(i);
    if (props[i].name == "z") iz = static_cast<int>(i);
    if (props[i].name == "red") ir = static_cast<int>(i);
    if (props[i].name == "green") ig = static_cast<int>(i);
    if (props[i].name == "blue") ib = static_cast<int>(i);
  }
  if (ix < 0 || iy < 0 || iz < 0) {
    throw std::runtime_error("PLY vertex element lacks x/y/z properties: " + path);
  }
  const bool has_color = ir >= 0 && ig >= 0 && ib >= 0;

  Scan scan;
  scan.points.reserve(vertex_count);
  if (has_color) scan.colors.reserve(vertex_count);

  if (binary) {
    size_t stride = 0;
    std::vector<size_t> offsets(props.size());
    for (size_t i = 0; i < props.size(); ++i) {
      offsets[i] = stride;
      stride += property_size(props[i].type);
    }
    std::vector<char> row(stride);
    for (size_t n = 0; n < vertex_count; ++n) {
      in.read(row.data(), static_cast<std::streamsize>(stride));
      if (static_cast<size_t>(in.gcount()) != stride) {
        throw std::runtime_error("truncated PLY vertex data: " + path);
      }
      auto field = [&](int i) { return parse_scalar(row.data() + offsets[i], props[i].type); };
      scan.points.emplace_back(static_cast<float>(field(ix)), static_cast<float>(field(iy)),
                               static_cast<float>(field(iz)));
      if (has_color) {
        scan.colors.push_back({static_cast<uint8_t>(field(ir)), static_cast<uint8_t>(field(ig)),
                               static_cast<uint8_t>(field(ib))});
      }
    }
  } else {
    for (size_t n = 0; n < vertex_count; ++n) {
      if (!std::getline(in, line)) throw std::runtime_error("truncated PLY vertex data: " + path);
      std::istringstream ls(line);
      std::vector<double> vals(props.size());
      for (size_t i = 0; i < props.size(); ++i) {
        if (!(ls >> vals[i])) throw std::runtime_error("malformed PLY vertex line: " + path);
      }
      scan.points.emplace_back(static_cast<float>(vals[ix]), static_cast<float>(vals[iy]),
                               static_cast<float>(vals[iz]));
      if (has_color) {
        scan.colors.push_back({static_cast<uint8_t>(vals[ir]), static_cast<uint8_t>(vals[ig]),
                               static_cast<uint8_t>(vals[ib])});
      }
    }
  }
  return scan;
}

std::vector<TimedPose> load_tum_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trajectory file: " + path);
  std::vector<TimedPose> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    double ts, tx, ty, tz, qx, qy, qz, qw;
    if (!(ls >> ts >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) {
      throw std::runtime_error("malformed trajectory line " + std::to_string(lineno) + " in " +
                               path);
    }
    Eigen::Quaternionf q(static_cast<float>(qw), static_cast<float>(qx), static_cast<float>(qy),
                         static_cast<float>(qz));
    if (std::abs(q.norm() - 1.0f) > 1e-3f) {
      throw std::runtime_error("non-unit quaternion on trajectory line " + std::to_string(lineno));
    }
    q.normalize();
    TimedPose tp;
    tp.timestamp = ts;
    tp.pose = Transform::Identity();
    tp.pose.linear() = q.toRotationMatrix();
    tp.pose.translation() =
        Point(static_cast<float>(tx), static_cast<float>(ty), static_cast<float>(tz));
    out.push_back(tp);
  }
  return out;
}

void save_ply_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write PLY file: " + path);
  const bool color = mesh.has_colors();
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << mesh.vertices.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "property float nx\nproperty float ny\nproperty float nz\n";
  if (color) {
    out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  }
  out << "element face " << mesh.triangles.size() << "\n";
  out << "property list uchar int vertex_indices\n";
  out << "end_header\n";

  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    float row[6] = {mesh.vertices[i].x(), mesh.vertices[i].y(), mesh.vertices[i].z(),
                    mesh.normals[i].x(), mesh.normals[i].y(), mesh.normals[i].z()};
    out.write(reinterpret_cast<const char*>(row), sizeof(row));
    if (color) {
      const Color& c = mesh.colors[i];
      const uint8_t rgb[3] = {c.r, c.g, c.b};
      out.write(reinterpret_cast<const char*>(rgb), 3);
    }
  }
  for (const auto& t : mesh.triangles) {
    const uint8_t n = 3;
    out.write(reinterpret_cast<const char*>(&n), 1);
    const int32_t idx[3] = {static_cast<int32_t>(t[0]), static_cast<int32_t>(t[1]),
                            static_cast<int32_t>(t[2])};
    out.write(reinterpret_cast<const char*>(idx), sizeof(idx));
  }
  if (!out) throw std::runtime_error("failed writing PLY file: " + path);
}

}  // namespace vxf

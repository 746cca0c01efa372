#include "lomap/io.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace lomap {

namespace fs = std::filesystem;

Scan read_kitti_bin(const std::string& path) {
  std::ifstream is(path, std::ios::binary | std::ios::ate);
  if (!is) throw Error("read_kitti_bin: cannot open " + path);
  const std::streamsize size = is.tellg();
  if (size % 16 != 0) {
    throw Error("read_kitti_bin: file size " + std::to_string(size) +
                " is not a multiple of 16: " + path);
  }
  is.seekg(0);
  const size_t n = static_cast<size_t>(size) / 16;
  std::vector<float> raw(n * 4);
  is.read(reinterpret_cast<char*>(raw.data()), size);
  if (!is) throw Error("read_kitti_bin: short read on " + path);

  Scan scan;
  scan.points.reserve(n);
  scan.intensities.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    const float x = raw[i * 4], y = raw[i * 4 + 1], z = raw[i * 4 + 2], w = raw[i * 4 + 3];
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z) || !std::isfinite(w)) {
      throw Error("read_kitti_bin: non-finite value at record " + std::to_string(i) + " in " +
                  path);
    }
    scan.points.emplace_back(x, y, z);
    scan.intensities.push_back(w);
  }
  return scan;
}

void write_kitti_bin(const Scan& scan, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("write_kitti_bin: cannot open " + path);
  for (size_t i = 0; i < scan.points.size(); ++i) {
    float rec[4] = {static_cast<float>(scan.points[i].x()), static_cast<float>(scan.points[i].y()),
                    static_cast<float>(scan.points[i].z()),
                    i < scan.intensities.size() ? scan.intensities[i] : 0.0f};
    os.write(reinterpret_cast<const char*>(rec), sizeof(rec));
  }
  if (!os) throw Error("write_kitti_bin: write failed for " + path);
}

namespace {

PoseSE3 check_rotation(Mat3 r, size_t line_no, const std::string& path, const Vec3& t) {
  const double err = orthonormality_error(r);
  if (err >= 1e-3) {
    throw Error("read_poses: rotation at line " + std::to_string(line_no) + " of " + path +
                " deviates from orthonormal by " + std::to_string(err));
  }
  if (err > 0) r = reorthonormalize(r);
  return {r, t};
}

}  // namespace

std::vector<PoseSE3> read_poses(const std::string& path, TrajFormat format) {
  std::ifstream is(path);
  if (!is) throw Error("read_poses: cannot open " + path);
  std::vector<PoseSE3> poses;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    if (format == TrajFormat::kKitti3x4) {
      double v[12];
      for (int i = 0; i < 12; ++i) {
        if (!(ss >> v[i])) {
          throw Error("read_poses: malformed kitti line " + std::to_string(line_no) + " in " +
                      path);
        }
      }
      Mat3 r;
      r << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
      poses.push_back(check_rotation(r, line_no, path, Vec3(v[3], v[7], v[11])));
    } else {
      double v[8];
      for (int i = 0; i < 8; ++i) {
        if (!(ss >> v[i])) {
          throw Error("read_poses: malformed tum line " + std::to_string(line_no) + " in " +
                      path);
        }
      }
      const Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);  // w, x, y, z
      if (std::abs(q.norm() - 1.0) >= 1e-3) {
        throw Error("read_poses: non-unit quaternion at line " + std::to_string(line_no) +
                    " in " + path);
      }
      poses.push_back(check_rotation(q.normalized().toRotationMatrix(), line_no, path,
                                     Vec3(v[1], v[2], v[3])));
    }
  }
  return poses;
}

void write_trajectory(const std::vector<PoseSE3>& poses, const std::string& path,
                      TrajFormat format) {
  std::ofstream os(path);
  if (!os) throw Error("write_trajectory: cannot open " + path);
  char buf[512];
  for (size_t i = 0; i < poses.size(); ++i) {
    const Mat3& r = poses[i].rotation;
    const Vec3& t = poses[i].translation;
    if (format == TrajFormat::kKitti3x4) {
      std::snprintf(buf, sizeof(buf),
                    "%.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n",
                    r(0, 0), r(0, 1), r(0, 2), t.x(), r(1, 0), r(1, 1), r(1, 2), t.y(), r(2, 0),
                    r(2, 1), r(2, 2), t.z());
    } else {
      const Eigen::Quaterniond q(r);
      std::snprintf(buf, sizeof(buf), "%zu %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", i,
                    t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w());
    }
    os << buf;
  }
  if (!os) throw Error("write_trajectory: write failed for " + path);
}

// ---------------------------------------------------------------------------
// PLY

namespace {

struct PlyProperty {
  std::string name;
  std::string type;
  bool is_list = false;
  std::string count_type;
};

struct PlyElement {
  std::string name;
  size_t count = 0;
  std::vector<PlyProperty> props;
};

size_t scalar_size(const std::string& type) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
  if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
  if (type == "int" || type == "uint" || type == "int32" || type == "uint32" || type == "float" ||
      type == "float32")
    return 4;
  if (type == "double" || type == "float64" || type == "int64" || type == "uint64") return 8;
  throw Error("ply: unknown scalar type " + type);
}

double read_scalar_binary(std::ifstream& is, const std::string& type) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), scalar_size(type));
  if (type == "float" || type == "float32") {
    float f;
    std::memcpy(&f, buf, 4);
    return f;
  }
  if (type == "double" || type == "float64") {
    double d;
    std::memcpy(&d, buf, 8);
    return d;
  }
  if (type == "uchar" || type == "uint8") return buf[0];
  if (type == "char" || type == "int8") return static_cast<int8_t>(buf[0]);
  if (type == "short" || type == "int16") {
    int16_t v;
    std::memcpy(&v, buf, 2);
    return v;
  }
  if (type == "ushort" || type == "uint16") {
    uint16_t v;
    std::memcpy(&v, buf, 2);
    return v;
  }
  if (type == "int" || type == "int32") {
    int32_t v;
    std::memcpy(&v, buf, 4);
    return v;
  }
  if (type == "uint" || type == "uint32") {
    uint32_t v;
    std::memcpy(&v, buf, 4);
    return v;
  }
  throw Error("ply: unsupported scalar type " + type);
}

struct PlyFile {
  bool binary = false;
  std::vector<PlyElement> elements;
};

PlyFile parse_ply_header(std::ifstream& is, const std::string& path) {
  std::string line;
  if (!std::getline(is, line) || line.substr(0, 3) != "ply") {
    throw Error("ply: missing magic in " + path);
  }
  PlyFile file;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "comment") continue;
    if (tok == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt == "binary_little_endian") {
        file.binary = true;
      } else if (fmt == "ascii") {
        file.binary = false;
      } else {
        throw Error("ply: unsupported format " + fmt + " in " + path);
      }
    } else if (tok == "element") {
      PlyElement el;
      ss >> el.name >> el.count;
      file.elements.push_back(el);
    } else if (tok == "property") {
      if (file.elements.empty()) throw Error("ply: property before element in " + path);
      PlyProperty prop;
      std::string t;
      ss >> t;
      if (t == "list") {
        prop.is_list = true;
        ss >> prop.count_type >> prop.type >> prop.name;
      } else {
        prop.type = t;
        ss >> prop.name;
      }
      file.elements.back().props.push_back(prop);
    } else if (tok == "end_header") {
      return file;
    }
  }
  throw Error("ply: truncated header in " + path);
}

}  // namespace

void write_ply_mesh(const TriMesh& mesh, const std::string& path, bool binary) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("write_ply_mesh: cannot open " + path);
  const bool with_quality = mesh.vertex_quality.size() == mesh.vertices.size() &&
                            !mesh.vertices.empty();
  os << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
  os << "element vertex " << mesh.vertices.size() << "\n";
  os << "property float x\nproperty float y\nproperty float z\n";
  if (with_quality) os << "property float quality\n";
  os << "element face " << mesh.triangles.size() << "\n";
  os << "property list uchar int vertex_indices\n";
  os << "end_header\n";
  if (binary) {
    for (size_t i = 0; i < mesh.vertices.size(); ++i) {
      float v[3] = {static_cast<float>(mesh.vertices[i].x()),
                    static_cast<float>(mesh.vertices[i].y()),
                    static_cast<float>(mesh.vertices[i].z())};
      os.write(reinterpret_cast<const char*>(v), sizeof(v));
      if (with_quality) {
        os.write(reinterpret_cast<const char*>(&mesh.vertex_quality[i]), sizeof(float));
      }
    }
    for (const auto& tri : mesh.triangles) {
      const unsigned char n = 3;
      os.write(reinterpret_cast<const char*>(&n), 1);
      int32_t idx[3] = {static_cast<int32_t>(tri[0]), static_cast<int32_t>(tri[1]),
                        static_cast<int32_t>(tri[2])};
      os.write(reinterpret_cast<const char*>(idx), sizeof(idx));
    }
  } else {
    for (size_t i = 0; i < mesh.vertices.size(); ++i) {
      os << static_cast<float>(mesh.vertices[i].x()) << " "
         << static_cast<float>(mesh.vertices[i].y()) << " "
         << static_cast<float>(mesh.vertices[i].z());
      if (with_quality) os << " " << mesh.vertex_quality[i];
      os << "\n";
    }
    for (const auto& tri : mesh.triangles) {
      os << "3 " << tri[0] << " " << tri[1] << " " << tri[2] << "\n";
    }
  }
  if (!os) throw Error("write_ply_mesh: write failed for " + path);
}

void write_ply_points(const std::vector<Vec3>& points, const std::string& path, bool binary,
                      const std::vector<float>* quality, double quality_clamp) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("write_ply_points: cannot open " + path);
  const bool with_quality = quality && quality->size() == points.size();
  os << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
  os << "element vertex " << points.size() << "\n";
  os << "property float x\nproperty float y\nproperty float z\n";
  if (with_quality) {
    os << "property float quality\n";
    if (quality_clamp > 0) os << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  }
  os << "element face 0\nproperty list uchar int vertex_indices\nend_header\n";
  for (size_t i = 0; i < points.size(); ++i) {
    float v[3] = {static_cast<float>(points[i].x()), static_cast<float>(points[i].y()),
                  static_cast<float>(points[i].z())};
    unsigned char rgb[3] = {0, 0, 0};
    if (with_quality && quality_clamp > 0) {
      const double s = std::clamp((*quality)[i] / quality_clamp, 0.0, 1.0);
      rgb[0] = static_cast<unsigned char>(255.0 * s);
      rgb[2] = static_cast<unsigned char>(255.0 * (1.0 - s));
    }
    if (binary) {
      os.write(reinterpret_cast<const char*>(v), sizeof(v));
      if (with_quality) {
        os.write(reinterpret_cast<const char*>(&(*quality)[i]), sizeof(float));
        if (quality_clamp > 0) os.write(reinterpret_cast<const char*>(rgb), 3);
      }
    } else {
      os << v[0] << " " << v[1] << " " << v[2];
      if (with_quality) {
        os << " " << (*quality)[i];
        if (quality_clamp > 0)
          os << " " << int(rgb[0]) << " " << int(rgb[1]) << " " << int(rgb[2]);
      }
      os << "\n";
    }
  }
  if (!os) throw Error("write_ply_points: write failed for " + path);
}

namespace {

void read_ply_impl(const std::string& path, std::vector<Vec3>& points,
                   std::vector<float>* quality, std::vector<std::array<uint32_t, 3>>* tris) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("ply: cannot open " + path);
  const PlyFile file = parse_ply_header(is, path);

  for (const PlyElement& el : file.elements) {
    if (el.name == "vertex") {
      int ix = -1, iy = -1, iz = -1, iq = -1;
      for (size_t i = 0; i < el.props.size(); ++i) {
        if (el.props[i].name == "x") ix = static_cast<int>(i);
        if (el.props[i].name == "y") iy = static_cast<int>(i);
        if (el.props[i].name == "z") iz = static_cast<int>(i);
        if (el.props[i].name == "quality") iq = static_cast<int>(i);
      }
      if (ix < 0 || iy < 0 || iz < 0) throw Error("ply: vertex element missing x/y/z in " + path);
      points.reserve(el.count);
      std::vector<double> vals(el.props.size());
      for (size_t n = 0; n < el.count; ++n) {
        if (file.binary) {
          for (size_t i = 0; i < el.props.size(); ++i) {
            if (el.props[i].is_list) throw Error("ply: list property on vertex in " + path);
            vals[i] = read_scalar_binary(is, el.props[i].type);
          }
        } else {
          for (size_t i = 0; i < el.props.size(); ++i) {
            if (!(is >> vals[i])) throw Error("ply: truncated vertex data in " + path);
          }
        }
        points.emplace_back(vals[ix], vals[iy], vals[iz]);
        if (quality && iq >= 0) quality->push_back(static_cast<float>(vals[iq]));
      }
    } else if (el.name == "face" && tris) {
      tris->reserve(el.count);
      for (size_t n = 0; n < el.count; ++n) {
        for (const PlyProperty& prop : el.props) {
          if (!prop.is_list) {
            if (file.binary) {
              read_scalar_binary(is, prop.type);
            } else {
              double tmp;
              is >> tmp;
            }
            continue;
          }
          size_t cnt;
          if (file.binary) {
            cnt = static_cast<size_t>(read_scalar_binary(is, prop.count_type));
          } else {
            is >> cnt;
          }
          std::vector<uint32_t> idx(cnt);
          for (size_t i = 0; i < cnt; ++i) {
            double v;
            if (file.binary) {
              v = read_scalar_binary(is, prop.type);
            } else if (!(is >> v)) {
              throw Error("ply: truncated face data in " + path);
            }
            idx[i] = static_cast<uint32_t>(v);
          }
          // fan-triangulate anything beyond triangles
          for (size_t i = 2; i < cnt; ++i) tris->push_back({idx[0], idx[i - 1], idx[i]});
        }
      }
    } else {
      // skip unknown element payload
      for (size_t n = 0; n < el.count; ++n) {
        for (const PlyProperty& prop : el.props) {
          if (prop.is_list) {
            size_t cnt;
            if (file.binary) {
              cnt = static_cast<size_t>(read_scalar_binary(is, prop.count_type));
            } else {
              is >> cnt;
            }
            for (size_t i = 0; i < cnt; ++i) {
              if (file.binary) {
                read_scalar_binary(is, prop.type);
              } else {
                double tmp;
                is >> tmp;
              }
            }
          } else if (file.binary) {
            read_scalar_binary(is, prop.type);
          } else {
            double tmp;
            is >> tmp;
          }
        }
      }
    }
  }
}

}  // namespace

TriMesh read_ply_mesh(const std::string& path) {
  TriMesh mesh;
  std::vector<float> quality;
  read_ply_impl(path, mesh.vertices, &quality, &mesh.triangles);
  if (quality.size() == mesh.vertices.size()) mesh.vertex_quality = std::move(quality);
  for (const auto& tri : mesh.triangles) {
    for (uint32_t v : tri) {
      if (v >= mesh.vertices.size()) throw Error("ply: face index out of range in " + path);
    }
  }
  return mesh;
}

PlyCloud read_ply_points(const std::string& path) {
  PlyCloud cloud;
  read_ply_impl(path, cloud.points, &cloud.quality, nullptr);
  if (cloud.quality.size() != cloud.points.size()) cloud.quality.clear();
  return cloud;
}

std::vector<std::string> list_scan_files(const std::string& dir) {
  if (!fs::is_directory(dir)) throw Error("scan directory does not exist: " + dir);
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".bin") {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace lomap

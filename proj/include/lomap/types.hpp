#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace lomap {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One LiDAR sweep in the sensor frame.
struct Scan {
  std::vector<Vec3> points;
  std::vector<float> intensities;  // empty, or one entry per point
  int index = 0;
};

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<uint32_t, 3>> triangles;
  std::vector<float> vertex_quality;  // optional per-vertex error channel
};

inline bool finite(const Vec3& v) {
  return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

}  // namespace lomap

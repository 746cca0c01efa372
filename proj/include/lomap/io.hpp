#pragma once

#include "lomap/pose.hpp"
#include "lomap/types.hpp"

#include <string>
#include <vector>

namespace lomap {

enum class TrajFormat { kKitti3x4, kTum };

/// KITTI .bin layout: 4 little-endian float32 per point (x, y, z, intensity).
Scan read_kitti_bin(const std::string& path);
void write_kitti_bin(const Scan& scan, const std::string& path);

std::vector<PoseSE3> read_poses(const std::string& path, TrajFormat format);
void write_trajectory(const std::vector<PoseSE3>& poses, const std::string& path,
                      TrajFormat format);

struct PlyCloud {
  std::vector<Vec3> points;
  std::vector<float> quality;  // empty or per point
};

void write_ply_mesh(const TriMesh& mesh, const std::string& path, bool binary = true);
void write_ply_points(const std::vector<Vec3>& points, const std::string& path,
                      bool binary = true, const std::vector<float>* quality = nullptr,
                      double quality_clamp = 0.0);
TriMesh read_ply_mesh(const std::string& path);
PlyCloud read_ply_points(const std::string& path);

/// Sorted list of *.bin files in a directory.
std::vector<std::string> list_scan_files(const std::string& dir);

}  // namespace lomap

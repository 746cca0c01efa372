#pragma once

#include "lomap/ground.hpp"
#include "lomap/pose.hpp"
#include "lomap/sdf.hpp"
#include "lomap/voxel_map.hpp"

#include <span>
#include <vector>

namespace lomap {

struct Ray {
  Vec3 dir_sensor = Vec3::UnitX();  // unit
  double depth = 0.0;               // range to the endpoint, meters
  bool is_ground = false;
  Vec3 normal_sensor = Vec3::UnitZ();  // ground rays only
  int point_index = -1;                // position in the candidate ordering
  // world-frame quantities under the selection pose
  Vec3 origin_w = Vec3::Zero();
  Vec3 dir_w = Vec3::UnitX();
  Vec3 endpoint_w = Vec3::Zero();
  Vec3 normal_w = Vec3::UnitZ();
};

/// Uniformly random subset (at most n) of the rays whose endpoint voxel is
/// allocated with hit count >= min_hits. Voxels created by scan
/// `allow_new_scan` also qualify (pass -1 outside the mapping pass).
/// Throws when no ray is eligible.
std::vector<Ray> select_rays(const LabeledScan& scan, const PoseSE3& pose, const VoxelMap& map,
                             int n, int min_hits, int allow_new_scan, uint64_t seed);

struct RayInterval {
  double t_enter = 0.0;
  double t_exit = 0.0;
  VoxelKey key;
};

/// Exact grid traversal; reports allocated voxels only, t ascending, clipped
/// to [0, t_max].
std::vector<RayInterval> ray_voxel_intersections(const Vec3& origin, const Vec3& dir,
                                                 const VoxelMap& map, double t_max);

/// Points at spacing step_ratio * voxel_size along each interval, stratified
/// jitter up to half a step when enabled. Labels the free/surface regions
/// against the truncation band and never emits beyond depth + truncation.
void sample_points(const Ray& ray, std::span<const RayInterval> intervals, double step_ratio,
                   double voxel_size, double truncation, bool jitter, uint64_t seed,
                   SampleBatch& out);

/// select + traverse + sample for a whole scan. When max_samples > 0 and the
/// batch comes out larger, a deterministic stride keeps roughly that many.
SampleBatch build_batch(const std::vector<Ray>& rays, const VoxelMap& map, double step_ratio,
                        double truncation, bool jitter, int scan_index, uint64_t seed,
                        size_t max_samples = 0);

}  // namespace lomap

#include "lomap/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace lomap {

namespace {

uint64_t mix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

int32_t cell_component(const VoxelKey& k, int a) { return a == 0 ? k.x : (a == 1 ? k.y : k.z); }

Ray make_ray(const Vec3& point_sensor, bool is_ground, const Vec3& normal_sensor, int index,
             const PoseSE3& pose) {
  Ray ray;
  ray.depth = point_sensor.norm();
  ray.dir_sensor = point_sensor / ray.depth;
  ray.is_ground = is_ground;
  ray.normal_sensor = normal_sensor;
  ray.point_index = index;
  ray.origin_w = pose.translation;
  ray.dir_w = pose.rotation * ray.dir_sensor;
  ray.endpoint_w = pose * point_sensor;
  ray.normal_w = pose.rotation * normal_sensor;
  return ray;
}

}  // namespace

std::vector<Ray> select_rays(const LabeledScan& scan, const PoseSE3& pose, const VoxelMap& map,
                             int n, int min_hits, int allow_new_scan, uint64_t seed) {
  if (n < 1) throw Error("select_rays: n must be >= 1");
  const double vsize = map.voxel_size();

  auto eligible = [&](const Vec3& point_sensor) {
    const Vec3 endpoint = pose * point_sensor;
    const int32_t idx = map.voxel_index(world_to_voxel(endpoint, vsize));
    if (idx < 0) return false;
    const VoxelRecord& rec = map.voxel(idx);
    return rec.hits >= static_cast<uint32_t>(min_hits) ||
           (allow_new_scan >= 0 && rec.created_scan == allow_new_scan);
  };

  std::vector<Ray> candidates;
  int index = 0;
  for (const GroundPoint& gp : scan.ground) {
    if (gp.point.norm() > 1e-6 && eligible(gp.point)) {
      candidates.push_back(make_ray(gp.point, true, gp.normal, index, pose));
    }
    ++index;
  }
  for (const Vec3& p : scan.non_ground) {
    if (p.norm() > 1e-6 && eligible(p)) {
      candidates.push_back(make_ray(p, false, Vec3::UnitZ(), index, pose));
    }
    ++index;
  }

  if (candidates.empty()) {
    throw Error("select_rays: no eligible rays (scan " + std::to_string(scan.index) + ")");
  }
  if (static_cast<int>(candidates.size()) <= n) return candidates;

  std::mt19937_64 rng(mix(seed ^ 0xA11CE5ULL));
  std::vector<Ray> out;
  out.reserve(n);
  std::sample(candidates.begin(), candidates.end(), std::back_inserter(out), n, rng);
  return out;
}

std::vector<RayInterval> ray_voxel_intersections(const Vec3& origin, const Vec3& dir,
                                                 const VoxelMap& map, double t_max) {
  std::vector<RayInterval> out;
  if (t_max <= 0) return out;
  const double size = map.voxel_size();
  constexpr double kEps = 1e-15;

  VoxelKey cell = world_to_voxel(origin, size);
  int step[3];
  double t_next_boundary[3], t_delta[3];
  for (int a = 0; a < 3; ++a) {
    if (dir[a] > kEps) {
      step[a] = 1;
      t_delta[a] = size / dir[a];
      t_next_boundary[a] = ((cell_component(cell, a) + 1) * size - origin[a]) / dir[a];
    } else if (dir[a] < -kEps) {
      step[a] = -1;
      t_delta[a] = -size / dir[a];
      t_next_boundary[a] = (cell_component(cell, a) * size - origin[a]) / dir[a];
    } else {
      step[a] = 0;
      t_delta[a] = std::numeric_limits<double>::infinity();
      t_next_boundary[a] = std::numeric_limits<double>::infinity();
    }
  }

  double t = 0.0;
  while (t < t_max) {
    const int axis = t_next_boundary[0] <= t_next_boundary[1]
                         ? (t_next_boundary[0] <= t_next_boundary[2] ? 0 : 2)
                         : (t_next_boundary[1] <= t_next_boundary[2] ? 1 : 2);
    const double tn = t_next_boundary[axis];
    if (std::min(tn, t_max) > t && map.voxel_index(cell) >= 0) {
      out.push_back({t, std::min(tn, t_max), cell});
    }
    if (tn >= t_max) break;
    t = tn;
    t_next_boundary[axis] += t_delta[axis];
    switch (axis) {
      case 0: cell.x += step[0]; break;
      case 1: cell.y += step[1]; break;
      case 2: cell.z += step[2]; break;
    }
  }
  return out;
}

void sample_points(const Ray& ray, std::span<const RayInterval> intervals, double step_ratio,
                   double voxel_size, double truncation, bool jitter, uint64_t seed,
                   SampleBatch& out) {
  if (step_ratio <= 0) throw Error("sample_points: step_ratio must be > 0");
  const double h = step_ratio * voxel_size;
  std::mt19937_64 rng(mix(seed));
  std::uniform_real_distribution<double> uni(-0.5, 0.5);

  // For ground rays the truncation band is measured in the ground-aware SDF:
  // a grazing ray crosses |phi| <= Tr over Tr / |dir . n| of ray length.
  // Labeling that stretch free would supervise near-ground points to Tr and
  // fight the surface term.
  double surface_band = truncation;
  if (ray.is_ground) {
    const double cos_inc = std::abs(ray.dir_w.dot(ray.normal_w));
    surface_band = truncation / std::max(cos_inc, 0.05);
  }

  for (const RayInterval& iv : intervals) {
    const double len = iv.t_exit - iv.t_enter;
    const int count = static_cast<int>(std::floor(len / h + 1e-9));
    for (int j = 0; j < count; ++j) {
      double t = iv.t_enter + (j + 0.5) * h;
      if (jitter) t += uni(rng) * h;
      if (t > ray.depth + truncation) continue;
      SamplePoint s;
      s.t = t;
      s.depth = ray.depth;
      s.p_sensor = ray.dir_sensor * t;
      s.ray_id = ray.point_index;
      if (t < ray.depth - surface_band) {
        s.region = Region::kFree;
      } else {
        s.region = Region::kSurface;
        s.is_ground = ray.is_ground;
        if (ray.is_ground) {
          s.endpoint_world = ray.endpoint_w;
          s.normal_world = ray.normal_w;
        } else {
          s.target = ray.depth - t;
        }
      }
      out.samples.push_back(s);
    }
  }
}

SampleBatch build_batch(const std::vector<Ray>& rays, const VoxelMap& map, double step_ratio,
                        double truncation, bool jitter, int scan_index, uint64_t seed,
                        size_t max_samples) {
  SampleBatch batch;
  batch.scan_index = scan_index;
  for (const Ray& ray : rays) {
    const auto intervals =
        ray_voxel_intersections(ray.origin_w, ray.dir_w, map, ray.depth + truncation);
    const uint64_t ray_seed =
        mix(seed ^ mix(static_cast<uint64_t>(scan_index) * 0x9E3779B1ULL +
                       static_cast<uint64_t>(ray.point_index)));
    sample_points(ray, intervals, step_ratio, map.voxel_size(), truncation, jitter, ray_seed,
                  batch);
  }
  if (max_samples > 0 && batch.samples.size() > max_samples) {
    const size_t stride = (batch.samples.size() + max_samples - 1) / max_samples;
    size_t kept = 0;
    for (size_t i = 0; i < batch.samples.size(); i += stride) {
      batch.samples[kept++] = batch.samples[i];
    }
    batch.samples.resize(kept);
  }
  return batch;
}

}  // namespace lomap

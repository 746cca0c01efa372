#pragma once

#include "lomap/pose.hpp"
#include "lomap/types.hpp"

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace lomap {

enum class PrimLabel { kGround, kStructure, kTransient };

struct Primitive {
  enum class Kind { kPlane, kBox, kSphere };
  Kind kind = Kind::kPlane;
  PrimLabel label = PrimLabel::kStructure;
  Vec3 point = Vec3::Zero();   // plane
  Vec3 normal = Vec3::UnitZ();  // plane, unit length
  Vec3 bmin = Vec3::Zero();    // box
  Vec3 bmax = Vec3::Zero();
  Vec3 center = Vec3::Zero();  // sphere
  double radius = 0.0;
  std::set<int> active_scans;  // transient primitives only
};

struct AnalyticScene {
  std::vector<Primitive> primitives;
  void validate() const;
  /// Copy without transient primitives.
  AnalyticScene static_only() const;
};

struct BeamConfig {
  std::vector<double> vertical_angles;  // radians
  double horizontal_resolution = 0.0174533;  // radians
  double max_range = 50.0;
  double noise_sigma = 0.0;
};

/// Nearest positive intersection distance, or nullopt.
std::optional<double> ray_primitive_distance(const Primitive& prim, const Vec3& origin,
                                             const Vec3& dir);

struct SynthScan {
  Scan scan;                    // sensor-frame points (range noise applied)
  std::vector<double> gt_range;  // noise-free range per emitted point
  std::vector<int> prim_index;   // scene primitive hit per emitted point
};

/// Casts one spinning multi-beam sweep from the given pose. Beams with no
/// hit inside max_range are omitted. Transient primitives only intersect
/// when scan_index is in their active set.
SynthScan synth_scan(const AnalyticScene& scene, const PoseSE3& pose, const BeamConfig& beams,
                     int scan_index, uint64_t seed = 0);

struct TrajectorySpec {
  enum class Kind { kLine, kArc };
  Kind kind = Kind::kLine;
  Vec3 start = Vec3::Zero();
  Vec3 end = Vec3::Zero();
  Vec3 arc_center = Vec3::Zero();  // z holds sensor height
  double arc_radius = 0.0;
  double arc_angle0 = 0.0;  // radians
  double arc_angle1 = 0.0;
  int scans = 0;
};

/// Sensor poses along the path, x-axis following the direction of travel.
std::vector<PoseSE3> make_trajectory(const TrajectorySpec& spec);

struct SceneFile {
  AnalyticScene scene;
  BeamConfig beams;
  TrajectorySpec traj;
};

SceneFile parse_scene_file(const std::string& path);

BeamConfig linear_beams(int count, double min_angle, double max_angle, double hres,
                        double max_range, double noise_sigma);

}  // namespace lomap

#pragma once

#include "lomap/types.hpp"

#include <vector>

namespace lomap {

struct GroundParams {
  int rings = 12;
  int sectors = 36;
  double dist_threshold = 0.1;  // meters to the cell plane; beyond it is non-ground
  double max_cone_deg = 20.0;   // plane normal must be within this of vertical
  double seed_height = 0.3;     // points within this of the cell's lowest z seed the fit
  int min_cell_points = 5;
  int min_scan_points = 10;
  int iterations = 2;
};

struct GroundPoint {
  Vec3 point;
  Vec3 normal;  // unit, positive z in sensor frame
};

struct LabeledScan {
  std::vector<GroundPoint> ground;
  std::vector<Vec3> non_ground;
  bool degenerate = false;  // set when the scan was too small to segment
  int index = 0;
};

/// Polar-grid ground segmentation: per cell, seed with the lowest points,
/// fit a plane by principal-axis analysis, accept near-plane points if the
/// plane is near-horizontal. Ground normals are oriented +z.
LabeledScan segment_ground(const Scan& scan, const GroundParams& params);

/// Labels everything non-ground (used when ground separation is disabled).
LabeledScan pass_through(const Scan& scan);

}  // namespace lomap

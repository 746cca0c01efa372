#include "lomap/ground.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace lomap {

namespace {

struct PlaneFit {
  Vec3 centroid = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  bool valid = false;
};

PlaneFit fit_plane(const std::vector<Vec3>& pts, const std::vector<int>& idx) {
  PlaneFit fit;
  if (idx.size() < 3) return fit;
  Vec3 mean = Vec3::Zero();
  for (int i : idx) mean += pts[i];
  mean /= static_cast<double>(idx.size());
  Mat3 cov = Mat3::Zero();
  for (int i : idx) {
    const Vec3 d = pts[i] - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  Vec3 n = eig.eigenvectors().col(0);  // smallest eigenvalue
  if (n.z() < 0) n = -n;
  fit.centroid = mean;
  fit.normal = n;
  fit.valid = true;
  return fit;
}

}  // namespace

LabeledScan pass_through(const Scan& scan) {
  LabeledScan out;
  out.index = scan.index;
  out.non_ground = scan.points;
  return out;
}

LabeledScan segment_ground(const Scan& scan, const GroundParams& params) {
  if (scan.points.empty()) throw Error("segment_ground: empty scan");
  LabeledScan out;
  out.index = scan.index;

  if (static_cast<int>(scan.points.size()) < params.min_scan_points) {
    out = pass_through(scan);
    out.degenerate = true;
    return out;
  }

  const auto& pts = scan.points;
  double max_range = 0.0;
  for (const Vec3& p : pts) max_range = std::max(max_range, std::hypot(p.x(), p.y()));
  max_range = std::max(max_range, 1e-6);

  const int cells = params.rings * params.sectors;
  std::vector<std::vector<int>> bins(cells);
  for (size_t i = 0; i < pts.size(); ++i) {
    const double r = std::hypot(pts[i].x(), pts[i].y());
    const double az = std::atan2(pts[i].y(), pts[i].x()) + M_PI;
    int ring = std::min(static_cast<int>(r / max_range * params.rings), params.rings - 1);
    int sector =
        std::min(static_cast<int>(az / (2.0 * M_PI) * params.sectors), params.sectors - 1);
    bins[ring * params.sectors + sector].push_back(static_cast<int>(i));
  }

  const double cos_cone = std::cos(params.max_cone_deg * M_PI / 180.0);
  std::vector<int8_t> label(pts.size(), 0);  // 0 non-ground, 1 ground
  std::vector<int> plane_of(pts.size(), -1);
  std::vector<PlaneFit> planes;
  std::vector<int> sparse_cells;

  for (int c = 0; c < cells; ++c) {
    const auto& bin = bins[c];
    if (bin.empty()) continue;
    if (static_cast<int>(bin.size()) < params.min_cell_points) {
      sparse_cells.push_back(c);
      continue;
    }
    double zmin = std::numeric_limits<double>::infinity();
    for (int i : bin) zmin = std::min(zmin, pts[i].z());
    std::vector<int> inliers;
    for (int i : bin) {
      if (pts[i].z() <= zmin + params.seed_height) inliers.push_back(i);
    }
    PlaneFit fit;
    for (int it = 0; it < params.iterations; ++it) {
      fit = fit_plane(pts, inliers);
      if (!fit.valid) break;
      inliers.clear();
      for (int i : bin) {
        if (std::abs((pts[i] - fit.centroid).dot(fit.normal)) <= params.dist_threshold) {
          inliers.push_back(i);
        }
      }
      if (inliers.size() < 3) {
        fit.valid = false;
        break;
      }
    }
    if (!fit.valid || fit.normal.z() < cos_cone) continue;
    const int plane_id = static_cast<int>(planes.size());
    planes.push_back(fit);
    for (int i : bin) {
      const double d = std::abs((pts[i] - fit.centroid).dot(fit.normal));
      if (d <= params.dist_threshold) {
        label[i] = 1;
        plane_of[i] = plane_id;
      }
    }
  }

  // Cells too sparse for their own fit borrow the mean accepted plane.
  if (!planes.empty() && !sparse_cells.empty()) {
    Vec3 n = Vec3::Zero(), cpt = Vec3::Zero();
    for (const PlaneFit& f : planes) {
      n += f.normal;
      cpt += f.centroid;
    }
    n.normalize();
    cpt /= static_cast<double>(planes.size());
    if (n.z() >= cos_cone) {
      const int plane_id = static_cast<int>(planes.size());
      planes.push_back({cpt, n, true});
      for (int c : sparse_cells) {
        for (int i : bins[c]) {
          if (std::abs((pts[i] - cpt).dot(n)) <= params.dist_threshold) {
            label[i] = 1;
            plane_of[i] = plane_id;
          }
        }
      }
    }
  }

  for (size_t i = 0; i < pts.size(); ++i) {
    if (label[i] == 1) {
      out.ground.push_back({pts[i], planes[plane_of[i]].normal});
    } else {
      out.non_ground.push_back(pts[i]);
    }
  }
  return out;
}

}  // namespace lomap

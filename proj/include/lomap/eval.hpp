#pragma once

#include "lomap/pose.hpp"
#include "lomap/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lomap {

/// Exact nearest-neighbor index over a fixed point set.
class KdTree {
 public:
  explicit KdTree(std::vector<Vec3> points);
  double nn_dist(const Vec3& query) const;
  size_t size() const { return points_.size(); }

 private:
  struct Node {
    int32_t left = -1, right = -1;
    int32_t begin = 0, end = 0;  // leaf range
    int8_t axis = -1;            // -1 for leaves
    double split = 0.0;
  };
  int32_t build(int32_t begin, int32_t end);
  void query(int32_t node, const Vec3& q, double& best_sq) const;

  std::vector<Vec3> points_;
  std::vector<Node> nodes_;
  int32_t root_ = -1;
};

struct MetricReport {
  double ate_rmse = 0.0;  // meters
  Vec3 per_axis_rmse = Vec3::Zero();
  double accuracy_cm = 0.0;
  double completion_cm = 0.0;
  double chamfer_l1_cm = 0.0;
  double f_score = 0.0;  // percent at the stated threshold
  double threshold = 0.1;
  std::optional<double> t_rel_percent;
  std::optional<double> r_rel_deg_per_100m;

  std::string to_text() const;
  std::string to_csv() const;
};

/// RMSE of residual translation norms after closed-form rigid alignment of
/// the estimated positions onto the ground truth (no scale). Per-axis RMSE is
/// reported in the aligned (ground-truth) frame.
double ate_rmse(const std::vector<PoseSE3>& est, const std::vector<PoseSE3>& gt,
                Vec3* per_axis = nullptr);

struct MeshMetrics {
  double accuracy = 0.0;    // meters, recon -> gt
  double completion = 0.0;  // meters, gt -> recon
  double chamfer_l1 = 0.0;  // meters
  double f_score = 0.0;     // percent
  double precision = 0.0;
  double recall = 0.0;
};

/// Area-uniform mesh sampling, deterministic under the seed.
std::vector<Vec3> sample_mesh_surface(const TriMesh& mesh, size_t count, uint64_t seed);

/// Symmetric cloud-to-cloud metrics; nearest neighbors are exact.
MeshMetrics cloud_metrics(const std::vector<Vec3>& recon, const std::vector<Vec3>& gt,
                          double threshold, bool parallel = true);

/// Per-point distance to the reference cloud (for error-map export).
std::vector<float> distances_to(const std::vector<Vec3>& points,
                                const std::vector<Vec3>& reference, bool parallel = true);

/// Drops gt points farther than crop_dist from the recon cloud (crop to the
/// observed region before computing completion).
std::vector<Vec3> crop_to_observed(const std::vector<Vec3>& gt, const std::vector<Vec3>& recon,
                                   double crop_dist);

struct RelErrors {
  double t_rel_percent = 0.0;
  double r_rel_deg_per_100m = 0.0;
};

/// KITTI subsequence protocol over lengths 100..800 m (step 100). nullopt
/// when the ground-truth path is shorter than the smallest length.
std::optional<RelErrors> rel_errors(const std::vector<PoseSE3>& est,
                                    const std::vector<PoseSE3>& gt);

}  // namespace lomap

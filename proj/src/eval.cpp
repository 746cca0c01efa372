#include "lomap/eval.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace lomap {

// ---------------------------------------------------------------------------
// KdTree

namespace {
constexpr int kLeafSize = 16;
}

KdTree::KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.empty()) throw Error("KdTree: empty point set");
  nodes_.reserve(2 * points_.size() / kLeafSize + 2);
  root_ = build(0, static_cast<int32_t>(points_.size()));
}

int32_t KdTree::build(int32_t begin, int32_t end) {
  Node node;
  node.begin = begin;
  node.end = end;
  const int32_t id = static_cast<int32_t>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = points_[begin], hi = points_[begin];
  for (int32_t i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(points_[i]);
    hi = hi.cwiseMax(points_[i]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  const int32_t mid = begin + (end - begin) / 2;
  std::nth_element(points_.begin() + begin, points_.begin() + mid, points_.begin() + end,
                   [axis](const Vec3& a, const Vec3& b) { return a[axis] < b[axis]; });
  nodes_[id].axis = static_cast<int8_t>(axis);
  nodes_[id].split = points_[mid][axis];
  const int32_t left = build(begin, mid);
  const int32_t right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::query(int32_t id, const Vec3& q, double& best_sq) const {
  const Node& node = nodes_[id];
  if (node.axis < 0) {
    for (int32_t i = node.begin; i < node.end; ++i) {
      best_sq = std::min(best_sq, (points_[i] - q).squaredNorm());
    }
    return;
  }
  const double d = q[node.axis] - node.split;
  const int32_t near = d < 0 ? node.left : node.right;
  const int32_t far = d < 0 ? node.right : node.left;
  query(near, q, best_sq);
  if (d * d < best_sq) query(far, q, best_sq);
}

double KdTree::nn_dist(const Vec3& q) const {
  double best_sq = std::numeric_limits<double>::infinity();
  query(root_, q, best_sq);
  return std::sqrt(best_sq);
}

// ---------------------------------------------------------------------------
// Trajectory metrics

double ate_rmse(const std::vector<PoseSE3>& est, const std::vector<PoseSE3>& gt,
                Vec3* per_axis) {
  if (est.size() != gt.size()) {
    throw Error("ate_rmse: trajectory length mismatch (" + std::to_string(est.size()) + " vs " +
                std::to_string(gt.size()) + ")");
  }
  if (est.size() < 2) throw Error("ate_rmse: need at least 2 poses");

  const Eigen::Index n = static_cast<Eigen::Index>(est.size());
  Eigen::Matrix3Xd src(3, n), dst(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    src.col(i) = est[i].translation;
    dst.col(i) = gt[i].translation;
  }
  const Eigen::Matrix4d align = Eigen::umeyama(src, dst, /*with_scaling=*/false);
  const Mat3 r = align.topLeftCorner<3, 3>();
  const Vec3 t = align.topRightCorner<3, 1>();

  double sum_sq = 0.0;
  Vec3 axis_sq = Vec3::Zero();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3 res = r * src.col(i) + t - dst.col(i);
    sum_sq += res.squaredNorm();
    axis_sq += res.cwiseProduct(res);
  }
  if (per_axis) *per_axis = (axis_sq / static_cast<double>(n)).cwiseSqrt();
  return std::sqrt(sum_sq / static_cast<double>(n));
}

std::optional<RelErrors> rel_errors(const std::vector<PoseSE3>& est,
                                    const std::vector<PoseSE3>& gt) {
  if (est.size() != gt.size()) throw Error("rel_errors: trajectory length mismatch");
  const size_t n = gt.size();
  if (n < 2) return std::nullopt;

  std::vector<double> dist(n, 0.0);
  for (size_t i = 1; i < n; ++i) {
    dist[i] = dist[i - 1] + (gt[i].translation - gt[i - 1].translation).norm();
  }

  double t_sum = 0.0, r_sum = 0.0;
  size_t count = 0;
  for (int len = 100; len <= 800; len += 100) {
    for (size_t i = 0; i < n; ++i) {
      // first index at least len meters further along the path
      const double target = dist[i] + len;
      if (dist[n - 1] < target) break;
      size_t j = i;
      while (j < n && dist[j] < target) ++j;
      if (j >= n) break;
      const PoseSE3 rel_gt = gt[i].inverse() * gt[j];
      const PoseSE3 rel_est = est[i].inverse() * est[j];
      const PoseSE3 err = rel_gt.inverse() * rel_est;
      const double actual = dist[j] - dist[i];
      t_sum += err.translation.norm() / actual;
      r_sum += rotation_angle(err.rotation) / actual;
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  RelErrors out;
  out.t_rel_percent = 100.0 * t_sum / static_cast<double>(count);
  out.r_rel_deg_per_100m = (r_sum / static_cast<double>(count)) * (180.0 / M_PI) * 100.0;
  return out;
}

// ---------------------------------------------------------------------------
// Reconstruction metrics

std::vector<Vec3> sample_mesh_surface(const TriMesh& mesh, size_t count, uint64_t seed) {
  if (mesh.triangles.empty()) throw Error("sample_mesh_surface: mesh has no triangles");
  std::vector<double> cum_area(mesh.triangles.size());
  double total = 0.0;
  for (size_t i = 0; i < mesh.triangles.size(); ++i) {
    const auto& tri = mesh.triangles[i];
    const Vec3 a = mesh.vertices[tri[0]];
    const Vec3 ab = mesh.vertices[tri[1]] - a;
    const Vec3 ac = mesh.vertices[tri[2]] - a;
    total += 0.5 * ab.cross(ac).norm();
    cum_area[i] = total;
  }
  if (total <= 0) throw Error("sample_mesh_surface: zero total area");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<Vec3> out;
  out.reserve(count);
  for (size_t s = 0; s < count; ++s) {
    const double pick = uni(rng) * total;
    const size_t i = static_cast<size_t>(
        std::lower_bound(cum_area.begin(), cum_area.end(), pick) - cum_area.begin());
    const auto& tri = mesh.triangles[std::min(i, mesh.triangles.size() - 1)];
    double u = uni(rng), v = uni(rng);
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    out.push_back(mesh.vertices[tri[0]] +
                  u * (mesh.vertices[tri[1]] - mesh.vertices[tri[0]]) +
                  v * (mesh.vertices[tri[2]] - mesh.vertices[tri[0]]));
  }
  return out;
}

std::vector<float> distances_to(const std::vector<Vec3>& points,
                                const std::vector<Vec3>& reference, bool parallel) {
  const KdTree tree(reference);
  std::vector<float> out(points.size());
#pragma omp parallel for schedule(static) if (parallel)
  for (int64_t i = 0; i < static_cast<int64_t>(points.size()); ++i) {
    out[i] = static_cast<float>(tree.nn_dist(points[i]));
  }
  return out;
}

MeshMetrics cloud_metrics(const std::vector<Vec3>& recon, const std::vector<Vec3>& gt,
                          double threshold, bool parallel) {
  if (recon.empty() || gt.empty()) throw Error("cloud_metrics: empty input cloud");
  const std::vector<float> d_recon = distances_to(recon, gt, parallel);
  const std::vector<float> d_gt = distances_to(gt, recon, parallel);

  MeshMetrics m;
  size_t hits = 0;
  double sum = 0.0;
  for (float d : d_recon) {
    sum += d;
    if (d <= threshold) ++hits;
  }
  m.accuracy = sum / static_cast<double>(d_recon.size());
  m.precision = static_cast<double>(hits) / static_cast<double>(d_recon.size());

  hits = 0;
  sum = 0.0;
  for (float d : d_gt) {
    sum += d;
    if (d <= threshold) ++hits;
  }
  m.completion = sum / static_cast<double>(d_gt.size());
  m.recall = static_cast<double>(hits) / static_cast<double>(d_gt.size());

  m.chamfer_l1 = 0.5 * (m.accuracy + m.completion);
  m.f_score = (m.precision + m.recall) > 0
                  ? 200.0 * m.precision * m.recall / (m.precision + m.recall)
                  : 0.0;
  return m;
}

std::vector<Vec3> crop_to_observed(const std::vector<Vec3>& gt, const std::vector<Vec3>& recon,
                                   double crop_dist) {
  const std::vector<float> d = distances_to(gt, recon);
  std::vector<Vec3> out;
  out.reserve(gt.size());
  for (size_t i = 0; i < gt.size(); ++i) {
    if (d[i] <= crop_dist) out.push_back(gt[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report formatting

std::string MetricReport::to_text() const {
  std::ostringstream os;
  os << "ate_rmse_m " << ate_rmse << "\n";
  os << "ate_rmse_x_m " << per_axis_rmse.x() << "\n";
  os << "ate_rmse_y_m " << per_axis_rmse.y() << "\n";
  os << "ate_rmse_z_m " << per_axis_rmse.z() << "\n";
  os << "accuracy_cm " << accuracy_cm << "\n";
  os << "completion_cm " << completion_cm << "\n";
  os << "chamfer_l1_cm " << chamfer_l1_cm << "\n";
  os << "f_score_pct " << f_score << " (threshold " << threshold << " m)\n";
  if (t_rel_percent) os << "t_rel_pct " << *t_rel_percent << "\n";
  if (r_rel_deg_per_100m) os << "r_rel_deg_per_100m " << *r_rel_deg_per_100m << "\n";
  return os.str();
}

std::string MetricReport::to_csv() const {
  std::ostringstream os;
  os << "ate_rmse_m,ate_x,ate_y,ate_z,accuracy_cm,completion_cm,chamfer_l1_cm,f_score_pct,"
        "threshold_m,t_rel_pct,r_rel_deg_per_100m\n";
  os << ate_rmse << "," << per_axis_rmse.x() << "," << per_axis_rmse.y() << ","
     << per_axis_rmse.z() << "," << accuracy_cm << "," << completion_cm << "," << chamfer_l1_cm
     << "," << f_score << "," << threshold << ",";
  if (t_rel_percent) os << *t_rel_percent;
  os << ",";
  if (r_rel_deg_per_100m) os << *r_rel_deg_per_100m;
  os << "\n";
  return os.str();
}

}  // namespace lomap

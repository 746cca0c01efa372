#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lomap/eval.hpp"
#include "reference/oracles.hpp"

#include <Eigen/Geometry>

#include <random>

using namespace lomap;

namespace {

std::vector<PoseSE3> random_trajectory(int n, uint64_t seed, double step = 1.0) {
  std::vector<PoseSE3> out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  PoseSE3 pose;
  for (int i = 0; i < n; ++i) {
    out.push_back(pose);
    Vec6 xi;
    xi << step * (1.0 + 0.1 * uni(rng)), 0.1 * uni(rng), 0.05 * uni(rng), 0.02 * uni(rng),
        0.02 * uni(rng), 0.1 * uni(rng);
    pose = pose * se3_exp(xi);
  }
  return out;
}

PoseSE3 random_rigid(uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Vec6 xi;
  for (int k = 0; k < 6; ++k) xi[k] = uni(rng);
  xi.head<3>() *= 10.0;
  return se3_exp(xi);
}

std::vector<Vec3> random_cloud(size_t n, uint64_t seed, double extent = 5.0) {
  std::vector<Vec3> pts(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-extent, extent);
  for (auto& p : pts) p = Vec3(uni(rng), uni(rng), uni(rng));
  return pts;
}

}  // namespace

TEST_CASE("kd-tree matches brute force nearest neighbors") {
  const auto cloud = random_cloud(3000, 5);
  const KdTree tree(cloud);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> uni(-7.0, 7.0);
  for (int i = 0; i < 500; ++i) {
    const Vec3 q(uni(rng), uni(rng), uni(rng));
    CHECK(tree.nn_dist(q) == doctest::Approx(ref::nn_brute(q, cloud)).epsilon(1e-12));
  }
}

TEST_CASE("ate_rmse: identity, alignment invariance, hand-computed case") {
  const auto gt = random_trajectory(40, 1);
  CHECK(ate_rmse(gt, gt) == doctest::Approx(0.0).epsilon(1e-12));

  // any shared rigid pre-transform is removed by the alignment
  const PoseSE3 g = random_rigid(2);
  std::vector<PoseSE3> moved;
  for (const PoseSE3& p : gt) moved.push_back(g * p);
  CHECK(ate_rmse(moved, gt) < 1e-9);

  // straight-line gt, +0.1 m z offset on odd indices: the optimal alignment
  // removes the offset mean and the tilt (the regression of the offsets on
  // the centered positions); the closed form is the regression residual
  std::vector<PoseSE3> line, noisy;
  double sum_xe = 0.0, sum_xx = 0.0, sum_ee = 0.0;
  const int n = 10;
  for (int i = 0; i < n; ++i) {
    PoseSE3 p;
    p.translation = Vec3(i, 0, 0);
    line.push_back(p);
    PoseSE3 q = p;
    if (i % 2 == 1) q.translation.z() += 0.1;
    noisy.push_back(q);
    const double xc = i - 4.5;
    const double ec = (i % 2 == 1 ? 0.1 : 0.0) - 0.05;
    sum_xe += xc * ec;
    sum_xx += xc * xc;
    sum_ee += ec * ec;
  }
  const double expected = std::sqrt((sum_ee - sum_xe * sum_xe / sum_xx) / n);
  Vec3 axis;
  const double rmse = ate_rmse(noisy, line, &axis);
  CHECK(rmse == doctest::Approx(expected).epsilon(1e-4));
  CHECK(axis.z() == doctest::Approx(expected).epsilon(1e-3));

  CHECK_THROWS_AS(ate_rmse(line, gt), Error);
  CHECK_THROWS_AS(ate_rmse({PoseSE3{}}, {PoseSE3{}}), Error);
}

TEST_CASE("ate invariance under shared rigid transforms, randomized") {
  const auto gt = random_trajectory(30, 7);
  auto est = gt;
  est[3].translation += Vec3(0.1, 0, 0);
  const double base = ate_rmse(est, gt);
  for (uint64_t s = 10; s < 15; ++s) {
    const PoseSE3 g = random_rigid(s);
    std::vector<PoseSE3> e2, g2;
    for (const PoseSE3& p : est) e2.push_back(g * p);
    for (const PoseSE3& p : gt) g2.push_back(g * p);
    CHECK(ate_rmse(e2, g2) == doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("cloud metrics: identical, separated, planar hand case") {
  const auto cloud = random_cloud(2000, 8);
  const MeshMetrics same = cloud_metrics(cloud, cloud, 0.1);
  CHECK(same.accuracy == 0.0);
  CHECK(same.completion == 0.0);
  CHECK(same.chamfer_l1 == 0.0);
  CHECK(same.f_score == doctest::Approx(100.0));

  auto far = cloud;
  for (Vec3& p : far) p += Vec3(10, 0, 0);
  const MeshMetrics sep = cloud_metrics(far, cloud, 0.1);
  CHECK(sep.f_score == 0.0);
  CHECK(sep.accuracy >= 10.0 - 5.0 * std::sqrt(3.0));  // bounded below by the gap

  // unit squares offset 0.05 normal to the plane
  std::vector<Vec3> a, b;
  for (int i = 0; i <= 50; ++i) {
    for (int j = 0; j <= 50; ++j) {
      a.emplace_back(i / 50.0, j / 50.0, 0.0);
      b.emplace_back(i / 50.0, j / 50.0, 0.05);
    }
  }
  const MeshMetrics plane = cloud_metrics(a, b, 0.1);
  CHECK(plane.accuracy == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(plane.completion == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(plane.chamfer_l1 == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(plane.f_score == doctest::Approx(100.0));

  CHECK_THROWS_AS(cloud_metrics({}, cloud, 0.1), Error);
}

TEST_CASE("chamfer is symmetric under swapping the clouds") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_cloud(200 + trial, rng());
    const auto b = random_cloud(150 + trial, rng());
    const MeshMetrics ab = cloud_metrics(a, b, 0.1);
    const MeshMetrics ba = cloud_metrics(b, a, 0.1);
    CHECK(ab.chamfer_l1 == doctest::Approx(ba.chamfer_l1).epsilon(1e-12));
    CHECK(ab.accuracy == doctest::Approx(ba.completion).epsilon(1e-12));
    CHECK(ab.completion == doctest::Approx(ba.accuracy).epsilon(1e-12));
  }
}

TEST_CASE("f-score is monotone non-decreasing in the threshold") {
  const auto a = random_cloud(500, 31);
  auto b = random_cloud(500, 32);
  double prev = -1.0;
  for (double tau : {0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 20.0}) {
    const double f = cloud_metrics(a, b, tau).f_score;
    CHECK(f >= prev);
    prev = f;
  }
}

TEST_CASE("mesh surface sampling is area-uniform and deterministic") {
  TriMesh mesh;
  mesh.vertices = {Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(0, 2, 0),
                   Vec3(10, 0, 0), Vec3(10.1, 0, 0), Vec3(10, 0.1, 0)};
  mesh.triangles = {{0, 1, 2}, {3, 4, 5}};  // areas 2.0 and 0.005
  const auto s1 = sample_mesh_surface(mesh, 4000, 9);
  const auto s2 = sample_mesh_surface(mesh, 4000, 9);
  REQUIRE(s1.size() == 4000);
  CHECK(s1[17] == s2[17]);
  size_t big = 0;
  for (const Vec3& p : s1) {
    if (p.x() < 5) ++big;
  }
  CHECK(static_cast<double>(big) / 4000.0 > 0.99);  // area ratio 400:1
}

TEST_CASE("rel_errors: identity, scaled translations, short-trajectory gate") {
  // straight line, 1 m per scan, 300 m long
  std::vector<PoseSE3> gt;
  for (int i = 0; i < 301; ++i) {
    PoseSE3 p;
    p.translation = Vec3(i, 0, 0);
    gt.push_back(p);
  }
  const auto zero = rel_errors(gt, gt);
  REQUIRE(zero.has_value());
  CHECK(zero->t_rel_percent == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(zero->r_rel_deg_per_100m == doctest::Approx(0.0).epsilon(1e-12));

  std::vector<PoseSE3> scaled;
  for (const PoseSE3& p : gt) {
    PoseSE3 q = p;
    q.translation *= 1.01;
    scaled.push_back(q);
  }
  const auto one_pct = rel_errors(scaled, gt);
  REQUIRE(one_pct.has_value());
  CHECK(one_pct->t_rel_percent == doctest::Approx(1.0).epsilon(1e-6));

  std::vector<PoseSE3> short_traj(gt.begin(), gt.begin() + 51);
  CHECK(!rel_errors(short_traj, short_traj).has_value());
}

TEST_CASE("crop_to_observed drops unobserved gt points") {
  std::vector<Vec3> recon = {{0, 0, 0}, {1, 0, 0}};
  std::vector<Vec3> gt = {{0, 0.1, 0}, {1, -0.1, 0}, {50, 0, 0}};
  const auto cropped = crop_to_observed(gt, recon, 2.0);
  CHECK(cropped.size() == 2);
}

TEST_CASE("parallel and serial distance queries agree exactly") {
  const auto a = random_cloud(2000, 41);
  const auto b = random_cloud(1500, 42);
  const auto dp = distances_to(a, b, true);
  const auto ds = distances_to(a, b, false);
  REQUIRE(dp.size() == ds.size());
  for (size_t i = 0; i < dp.size(); ++i) CHECK(dp[i] == ds[i]);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lomap/odometry.hpp"
#include "lomap/pose.hpp"

#include <Eigen/Dense>

#include <random>

using namespace lomap;

TEST_CASE("se3_exp basics") {
  CHECK(se3_exp(Vec6::Zero()).rotation.isApprox(Mat3::Identity(), 1e-15));
  CHECK(se3_exp(Vec6::Zero()).translation.norm() == 0.0);

  Vec6 xi = Vec6::Zero();
  xi.head<3>() = Vec3(1.0, -2.0, 0.5);
  const PoseSE3 t = se3_exp(xi);
  CHECK(t.rotation.isApprox(Mat3::Identity(), 1e-15));
  CHECK(t.translation.isApprox(Vec3(1.0, -2.0, 0.5), 1e-15));
}

TEST_CASE("se3_exp quarter turn about z matches Rodrigues closed form") {
  Vec6 xi = Vec6::Zero();
  xi.tail<3>() = Vec3(0, 0, M_PI_2);
  const PoseSE3 t = se3_exp(xi);
  Mat3 expected;
  expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  CHECK(t.rotation.isApprox(expected, 1e-12));
  CHECK(t.translation.norm() < 1e-15);
}

TEST_CASE("exp/log round trip for angles below pi") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int i = 0; i < 3000; ++i) {
    Vec6 xi;
    for (int k = 0; k < 6; ++k) xi[k] = 3.0 * uni(rng);
    const double angle = xi.tail<3>().norm();
    if (angle >= M_PI - 0.1) {
      xi.tail<3>() *= (M_PI - 0.1) / angle * std::abs(uni(rng));
    }
    const Vec6 back = se3_log(se3_exp(xi));
    CHECK((back - xi).norm() < 1e-9);
  }
}

TEST_CASE("se3_log errors near pi") {
  Vec6 xi = Vec6::Zero();
  xi.tail<3>() = Vec3(0, 0, M_PI - 1e-9);
  CHECK_THROWS_AS(se3_log(se3_exp(xi)), Error);
}

TEST_CASE("small-angle branch is continuous") {
  Vec6 xi = Vec6::Zero();
  xi.tail<3>() = Vec3(1e-7, -2e-7, 1e-7);
  xi.head<3>() = Vec3(0.3, 0.1, -0.2);
  const Vec6 back = se3_log(se3_exp(xi));
  CHECK((back - xi).norm() < 1e-12);
}

TEST_CASE("reorthonormalize projects to the nearest rotation") {
  Mat3 r = se3_exp((Vec6() << 0, 0, 0, 0.3, 0.2, 0.1).finished()).rotation;
  Mat3 noisy = r;
  noisy(0, 1) += 1e-5;
  const Mat3 fixed = reorthonormalize(noisy);
  CHECK(orthonormality_error(fixed) < 1e-12);
  CHECK(fixed.determinant() == doctest::Approx(1.0));
  CHECK((fixed - r).norm() < 1e-4);
}

TEST_CASE("constant motion model") {
  const PoseSE3 eye;
  CHECK(constant_motion_init(eye, eye).translation.norm() == 0.0);

  PoseSE3 t1, t2;
  t1.translation = Vec3(2, 0, 0);
  t2.translation = Vec3(1, 0, 0);
  const PoseSE3 init = constant_motion_init(t1, t2);
  CHECK(init.translation.isApprox(Vec3(3, 0, 0), 1e-14));

  auto rot_z = [](double deg) {
    Vec6 xi = Vec6::Zero();
    xi.tail<3>() = Vec3(0, 0, deg * M_PI / 180.0);
    return se3_exp(xi);
  };
  const PoseSE3 extrap = constant_motion_init(rot_z(10.0), rot_z(5.0));
  CHECK(extrap.rotation.isApprox(rot_z(15.0).rotation, 1e-12));
}

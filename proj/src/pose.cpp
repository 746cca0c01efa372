#include "lomap/pose.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace lomap {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

PoseSE3 se3_exp(const Vec6& xi) {
  const Vec3 rho = xi.head<3>();
  const Vec3 phi = xi.tail<3>();
  const double theta = phi.norm();
  const Mat3 K = skew(phi);

  Mat3 rotation;
  Mat3 v;
  if (theta < 1e-6) {
    rotation = Mat3::Identity() + K + 0.5 * K * K;
    v = Mat3::Identity() + 0.5 * K + (1.0 / 6.0) * K * K;
  } else {
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    rotation = Mat3::Identity() + (s / theta) * K + ((1.0 - c) / (theta * theta)) * K * K;
    v = Mat3::Identity() + ((1.0 - c) / (theta * theta)) * K +
        ((theta - s) / (theta * theta * theta)) * K * K;
  }
  return {rotation, v * rho};
}

double rotation_angle(const Mat3& rotation) {
  const double c = std::clamp((rotation.trace() - 1.0) * 0.5, -1.0, 1.0);
  return std::acos(c);
}

Vec6 se3_log(const PoseSE3& pose) {
  const double theta = rotation_angle(pose.rotation);
  if (theta >= M_PI - 1e-6) {
    throw Error("se3_log: rotation angle within 1e-6 of pi");
  }

  Vec3 phi;
  if (theta < 1e-6) {
    const Mat3 a = 0.5 * (pose.rotation - pose.rotation.transpose());
    phi = Vec3(a(2, 1), a(0, 2), a(1, 0));
  } else {
    const Mat3 a = (theta / (2.0 * std::sin(theta))) * (pose.rotation - pose.rotation.transpose());
    phi = Vec3(a(2, 1), a(0, 2), a(1, 0));
  }

  const Mat3 K = skew(phi);
  Mat3 v_inv;
  if (theta < 1e-6) {
    v_inv = Mat3::Identity() - 0.5 * K + (1.0 / 12.0) * K * K;
  } else {
    const double half = 0.5 * theta;
    const double cot = std::cos(half) / std::sin(half);
    v_inv = Mat3::Identity() - 0.5 * K +
            ((1.0 - half * cot) / (theta * theta)) * K * K;
  }

  Vec6 xi;
  xi.head<3>() = v_inv * pose.translation;
  xi.tail<3>() = phi;
  return xi;
}

double orthonormality_error(const Mat3& rotation) {
  return (rotation.transpose() * rotation - Mat3::Identity()).norm();
}

Mat3 reorthonormalize(const Mat3& rotation) {
  Eigen::JacobiSVD<Mat3> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0) {
    Mat3 d = Mat3::Identity();
    d(2, 2) = -1;
    r = svd.matrixU() * d * svd.matrixV().transpose();
  }
  return r;
}

}  // namespace lomap

#pragma once

#include "lomap/types.hpp"

namespace lomap {

/// Rigid transform. Tangent vectors are translation-first: xi = (rho, phi).
struct PoseSE3 {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }

  PoseSE3 operator*(const PoseSE3& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }

  PoseSE3 inverse() const {
    const Mat3 rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }

  static PoseSE3 identity() { return {}; }
};

Mat3 skew(const Vec3& v);

/// Closed-form exponential: Rodrigues for the rotation block plus the V
/// matrix coupling the translation. Series expansion below 1e-6 rad.
PoseSE3 se3_exp(const Vec6& xi);

/// Inverse of se3_exp. Throws for rotation angles within 1e-6 of pi.
Vec6 se3_log(const PoseSE3& pose);

/// Frobenius distance of R^T R from identity.
double orthonormality_error(const Mat3& rotation);

/// Nearest rotation matrix (polar decomposition via SVD).
Mat3 reorthonormalize(const Mat3& rotation);

double rotation_angle(const Mat3& rotation);

}  // namespace lomap

#pragma once

#include "lomap/adam.hpp"
#include "lomap/ground.hpp"
#include "lomap/pose.hpp"
#include "lomap/sampler.hpp"

#include <vector>

namespace lomap {

struct OdometryConfig {
  int iterations = 80;
  // momentum SGD on the tangent vector: step = lr * velocity, clipped
  // per component, linearly decayed over the iteration budget
  double lr_trans = 0.6;
  double lr_rot = 0.25;
  double clip_trans = 0.03;   // meters per iteration
  double clip_rot = 0.008;    // radians per iteration
  double momentum = 0.9;
  double lr_decay_floor = 0.05;
  int rays = 2048;
  int min_hits = 2;
  double step_ratio = 0.2;
  bool jitter = true;
  size_t max_samples = 8000;
  double early_stop_delta = 1e-5;
  int early_stop_window = 5;
  double divergence_factor = 10.0;
  int divergence_patience = 5;
};

struct OdometryState {
  PoseSE3 prev;        // pose of scan i-1
  PoseSE3 prev2;       // pose of scan i-2
  int scan_count = 0;  // scans processed so far
  int freeze_after = 10;

  bool decoder_frozen() const { return scan_count >= freeze_after; }
};

/// T_init = T_prev * (T_prev2^-1 * T_prev).
PoseSE3 constant_motion_init(const PoseSE3& prev, const PoseSE3& prev2);

/// Momentum step on the pose tangent, per-component clipping; shared by
/// tracking, mapping fine-tuning and key-scan refinement.
struct PoseStepper {
  Vec6 velocity = Vec6::Zero();

  Vec6 step(const Vec6& grad, const OdometryConfig& cfg, double scale, double decay) {
    velocity = cfg.momentum * velocity + grad;
    Vec6 xi;
    const double ct = cfg.clip_trans * scale;
    const double cr = cfg.clip_rot * scale;
    for (int k = 0; k < 3; ++k) {
      xi[k] = -decay * std::clamp(scale * cfg.lr_trans * velocity[k], -ct, ct);
    }
    for (int k = 3; k < 6; ++k) {
      xi[k] = -decay * std::clamp(scale * cfg.lr_rot * velocity[k], -cr, cr);
    }
    return xi;
  }
};

struct TrackResult {
  PoseSE3 pose;
  std::vector<double> loss_trace;
  int iterations = 0;
  bool diverged = false;
  double max_ortho_error = 0.0;  // worst pre-fix R^T R deviation seen
};

/// Pose-only minimization of the SDF losses over the tangent vector; the map
/// and decoder stay fixed. On divergence the result carries the
/// constant-motion pose and the diverged flag. Throws when no ray is
/// eligible.
TrackResult track_scan(const LabeledScan& scan, const OdometryState& state, const VoxelMap& map,
                       const Decoder& dec, const LossParams& loss_params,
                       const OdometryConfig& cfg, uint64_t seed, bool parallel = true);

}  // namespace lomap

#include "lomap/odometry.hpp"

#include <algorithm>
#include <cmath>

namespace lomap {

namespace {
uint64_t mix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

PoseSE3 constant_motion_init(const PoseSE3& prev, const PoseSE3& prev2) {
  return prev * (prev2.inverse() * prev);
}

TrackResult track_scan(const LabeledScan& scan, const OdometryState& state, const VoxelMap& map,
                       const Decoder& dec, const LossParams& loss_params,
                       const OdometryConfig& cfg, uint64_t seed, bool parallel) {
  const PoseSE3 init = constant_motion_init(state.prev, state.prev2);
  TrackResult result;
  result.pose = init;

  PoseStepper stepper;
  int diverged_streak = 0;
  double initial_loss = 0.0;

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const uint64_t iter_seed = mix(seed ^ (static_cast<uint64_t>(scan.index) << 20) ^
                                   static_cast<uint64_t>(iter));
    const auto rays = select_rays(scan, result.pose, map, cfg.rays, cfg.min_hits,
                                  /*allow_new_scan=*/-1, iter_seed);
    const SampleBatch batch = build_batch(rays, map, cfg.step_ratio, loss_params.truncation,
                                          cfg.jitter, scan.index, iter_seed, cfg.max_samples);
    const GradientBundle g =
        backward(batch, map, dec, result.pose, loss_params, kGradPose, parallel);
    if (!std::isfinite(g.loss.total)) {
      throw Error("track_scan: non-finite loss at scan " + std::to_string(scan.index) +
                  " iteration " + std::to_string(iter));
    }
    result.loss_trace.push_back(g.loss.total);
    ++result.iterations;

    const double decay =
        1.0 - (1.0 - cfg.lr_decay_floor) * static_cast<double>(iter) / cfg.iterations;
    const Vec6 xi = stepper.step(g.d_pose, cfg, 1.0, decay);
    result.pose = se3_exp(xi) * result.pose;
    result.max_ortho_error =
        std::max(result.max_ortho_error, orthonormality_error(result.pose.rotation));
    result.pose.rotation = reorthonormalize(result.pose.rotation);

    if (iter == 0) initial_loss = g.loss.total;
    if (g.loss.total > cfg.divergence_factor * initial_loss && iter > 0) {
      if (++diverged_streak >= cfg.divergence_patience) {
        result.pose = init;
        result.diverged = true;
        return result;
      }
    } else {
      diverged_streak = 0;
    }

    const int w = cfg.early_stop_window;
    if (iter >= w) {
      const double improvement =
          result.loss_trace[iter - w] - result.loss_trace[iter];
      if (improvement < cfg.early_stop_delta) break;
    }
  }
  return result;
}

}  // namespace lomap

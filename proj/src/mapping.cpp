#include "lomap/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace lomap {

namespace {
uint64_t mix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// One sample -> backward -> update step shared by mapping and refinement.
// Returns the batch loss.
double optimize_step(const LabeledScan& scan, PoseSE3& pose, bool clamp_pose, VoxelMap& map,
                     Decoder& dec, bool update_decoder, MapOptimizer& opt,
                     PoseStepper& stepper, const OdometryConfig& odo_cfg, double pose_scale,
                     double pose_decay, const LossParams& loss_params,
                     const MappingConfig& cfg, int allow_new_scan, uint64_t seed,
                     bool parallel) {
  const auto rays =
      select_rays(scan, pose, map, cfg.rays, cfg.min_hits, allow_new_scan, seed);
  const SampleBatch batch = build_batch(rays, map, cfg.step_ratio, loss_params.truncation,
                                        cfg.jitter, scan.index, seed, cfg.max_samples);
  unsigned mask = kGradEmbed;
  if (update_decoder) mask |= kGradDecoder;
  if (!clamp_pose) mask |= kGradPose;
  const GradientBundle g = backward(batch, map, dec, pose, loss_params, mask, parallel);
  if (!std::isfinite(g.loss.total)) {
    throw Error("map_scan: non-finite loss at scan " + std::to_string(scan.index));
  }

  opt.embeddings.apply(map, g.d_embeddings, cfg.lr_emb);
  if (update_decoder) opt.decoder.apply(dec, g.d_decoder, cfg.lr_dec);
  if (!clamp_pose) {
    pose = se3_exp(stepper.step(g.d_pose, odo_cfg, pose_scale, pose_decay)) * pose;
    pose.rotation = reorthonormalize(pose.rotation);
  }
  return g.loss.total;
}

}  // namespace

bool key_scan_check(int n_v, const PoseSE3& current, const KeyScanBuffer& buffer,
                    int nv_threshold, double dist_threshold) {
  if (!buffer.has_key) return true;
  if (n_v >= nv_threshold) return true;
  return (current.translation - buffer.last_key_pose.translation).norm() >= dist_threshold;
}

MapScanResult map_scan(const LabeledScan& scan, PoseSE3& pose, bool clamp_pose, VoxelMap& map,
                       Decoder& dec, bool decoder_frozen, MapOptimizer& opt,
                       const LossParams& loss_params, const MappingConfig& cfg,
                       const OdometryConfig& odo_cfg, uint64_t seed, bool parallel) {
  MapScanResult result;

  std::vector<Vec3> world;
  world.reserve(scan.ground.size() + scan.non_ground.size());
  for (const GroundPoint& gp : scan.ground) world.push_back(pose * gp.point);
  for (const Vec3& p : scan.non_ground) world.push_back(pose * p);
  result.n_v = map.insert_scan(world, scan.index);

  PoseStepper stepper;
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const uint64_t iter_seed = mix(seed ^ (static_cast<uint64_t>(scan.index) << 24) ^
                                   (0xB00ULL + static_cast<uint64_t>(iter)));
    const double decay = 1.0 - (1.0 - odo_cfg.lr_decay_floor) *
                                   static_cast<double>(iter) / cfg.iterations;
    result.final_loss =
        optimize_step(scan, pose, clamp_pose, map, dec, !decoder_frozen, opt, stepper,
                      odo_cfg, cfg.pose_lr_scale, decay, loss_params, cfg,
                      /*allow_new_scan=*/scan.index, iter_seed, parallel);
    ++result.iterations;
  }
  return result;
}

void refine_key_scans(const KeyScanBuffer& buffer, VoxelMap& map, Decoder& dec,
                      std::vector<PoseSE3>& poses, const std::vector<bool>& clamp,
                      MapOptimizer& opt, const LossParams& loss_params,
                      const MappingConfig& cfg, const OdometryConfig& odo_cfg, uint64_t seed,
                      bool parallel) {
  if (buffer.entries.empty()) throw Error("refine_key_scans: empty key-scan buffer");

  std::vector<size_t> order(buffer.entries.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<PoseStepper> steppers(buffer.entries.size());

  for (int epoch = 0; epoch < cfg.refine_epochs; ++epoch) {
    std::mt19937_64 rng(mix(seed ^ (0xC0FFEEULL + static_cast<uint64_t>(epoch))));
    std::shuffle(order.begin(), order.end(), rng);
    const double decay = 1.0 - (1.0 - odo_cfg.lr_decay_floor) *
                                   static_cast<double>(epoch) / cfg.refine_epochs;
    for (size_t oi : order) {
      const KeyScanEntry& entry = buffer.entries[oi];
      PoseSE3& pose = poses.at(entry.scan_index);
      const bool clamp_pose = clamp.empty() ? false : clamp.at(entry.scan_index);
      for (int it = 0; it < cfg.refine_iters; ++it) {
        const uint64_t s = mix(seed ^ (static_cast<uint64_t>(epoch) << 32) ^
                               (static_cast<uint64_t>(entry.scan_index) << 8) ^
                               static_cast<uint64_t>(it));
        optimize_step(entry.scan, pose, clamp_pose, map, dec, /*update_decoder=*/true, opt,
                      steppers[oi], odo_cfg, cfg.pose_lr_scale, decay, loss_params, cfg,
                      /*allow_new_scan=*/-1, s, parallel);
      }
    }
  }
}

}  // namespace lomap

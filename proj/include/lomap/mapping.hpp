#pragma once

#include "lomap/adam.hpp"
#include "lomap/ground.hpp"
#include "lomap/odometry.hpp"
#include "lomap/sampler.hpp"

#include <vector>

namespace lomap {

struct MappingConfig {
  int iterations = 100;
  double lr_emb = 1e-2;
  double lr_dec = 1e-3;
  double pose_lr_scale = 0.01;  // fraction of the odometry step sizes
  int rays = 4096;
  int min_hits = 2;
  double step_ratio = 0.5;
  bool jitter = true;
  size_t max_samples = 8000;
  int keyscan_nv_threshold = 500;  // N_t
  double keyscan_dist = 1.0;       // d_f
  double refine_trunc = 0.6;       // d_t
  int refine_epochs = 10;
  int refine_iters = 10;  // optimization steps per key scan per epoch
};

struct KeyScanEntry {
  int scan_index = 0;
  LabeledScan scan;
  int n_v = 0;  // newly allocated voxels when the scan was mapped
};

struct KeyScanBuffer {
  std::vector<KeyScanEntry> entries;
  PoseSE3 last_key_pose;
  bool has_key = false;
};

/// True iff n_v >= N_t (inclusive) or the displacement from the last key
/// pose is >= d_f. The first scan is always a key scan.
bool key_scan_check(int n_v, const PoseSE3& current, const KeyScanBuffer& buffer,
                    int nv_threshold, double dist_threshold);

/// Persistent optimizer state for the map, the decoder and the per-scan pose
/// fine-tuning.
struct MapOptimizer {
  EmbedAdam embeddings;
  DecoderAdam decoder;
};

struct MapScanResult {
  int n_v = 0;
  double final_loss = 0.0;
  int iterations = 0;
};

/// Integrates a tracked scan: voxel allocation followed by joint optimization
/// of embeddings and decoder (skipped when frozen) at full step and the pose
/// at a reduced step. The pose is updated in place unless clamped.
MapScanResult map_scan(const LabeledScan& scan, PoseSE3& pose, bool clamp_pose, VoxelMap& map,
                       Decoder& dec, bool decoder_frozen, MapOptimizer& opt,
                       const LossParams& loss_params, const MappingConfig& cfg,
                       const OdometryConfig& odo_cfg, uint64_t seed, bool parallel = true);

/// End-of-run refinement over the shuffled key-scan buffer: decoder unfrozen,
/// all buffered poses optimized (in place through `poses`) except clamped
/// indices. Deterministic under a fixed seed.
void refine_key_scans(const KeyScanBuffer& buffer, VoxelMap& map, Decoder& dec,
                      std::vector<PoseSE3>& poses, const std::vector<bool>& clamp,
                      MapOptimizer& opt, const LossParams& loss_params,
                      const MappingConfig& cfg, const OdometryConfig& odo_cfg, uint64_t seed,
                      bool parallel = true);

}  // namespace lomap

#pragma once

#include "lomap/ground.hpp"
#include "lomap/mapping.hpp"
#include "lomap/odometry.hpp"
#include "lomap/sdf.hpp"
#include "lomap/voxel_map.hpp"

#include <cstdint>
#include <string>

namespace lomap {

/// Every tunable of the pipeline, serializable as flat `key = value` lines.
/// Environment variables LOMAP_<KEY> override file values.
struct Config {
  // map
  double voxel_size = 0.2;
  int emb_dim = 16;
  std::string emb_init = "zero";  // zero | uniform
  double emb_init_scale = 1e-4;
  int64_t origin_offset_voxels = 1048576;
  double lookup_mem_gb = 1.0;
  std::string hit_count_mode = "points";  // points | scans

  // decoder
  int decoder_hidden = 256;

  // losses
  double truncation = 0.3;
  double loss_w_sdf = 1.0;
  double loss_w_free = 1.0;
  double loss_w_eik = 0.02;
  double eik_delta_ratio = 0.1;  // times voxel_size
  int eik_every = 3;             // Eikonal term on every k-th sample

  // sampling
  int rays_odom = 2048;
  int rays_map = 4096;
  double step_ratio_odom = 0.2;
  double step_ratio_map = 0.5;
  int min_hits = 2;  // M_n
  bool jitter = true;
  int max_batch_samples = 8000;  // cap per optimization step; 0 = unlimited

  // odometry (momentum steps on the pose tangent)
  int odom_iterations = 80;
  double odom_lr_trans = 0.6;
  double odom_lr_rot = 0.25;
  double odom_clip_trans = 0.03;
  double odom_clip_rot = 0.008;
  double odom_momentum = 0.9;
  double odom_lr_decay_floor = 0.05;
  double odom_early_stop_delta = 1e-5;
  int odom_early_stop_window = 5;
  double odom_divergence_factor = 10.0;
  int odom_divergence_patience = 5;
  bool abort_on_divergence = false;

  // mapping
  int map_iterations = 100;
  double lr_embeddings = 0.01;
  double lr_decoder = 0.001;
  double map_pose_lr_scale = 0.01;
  int freeze_after = 10;  // K

  // key scans and refinement
  int keyscan_nv_threshold = 500;  // N_t
  double keyscan_dist = 1.0;       // d_f
  double refine_trunc = 0.6;       // d_t
  bool refine_enabled = true;
  int refine_epochs = 10;
  int refine_iters = 10;

  // ground segmentation
  bool ground_enabled = true;
  int ground_rings = 12;
  int ground_sectors = 36;
  double ground_dist_threshold = 0.1;
  double ground_cone_deg = 20.0;
  double ground_seed_height = 0.3;

  // run
  uint64_t seed = 42;
  std::string mode = "sequential";  // sequential | pipelined
  bool parallel_kernels = true;

  static Config defaults() { return {}; }
  /// Parses the file, then applies LOMAP_* environment overrides.
  static Config from_file(const std::string& path);
  void apply_env_overrides();
  std::string serialize() const;
  void validate() const;

  VoxelMap::Params map_params() const;
  LossParams loss_params() const;
  OdometryConfig odometry_config() const;
  MappingConfig mapping_config() const;
  GroundParams ground_params() const;
};

}  // namespace lomap

#pragma once

#include "lomap/config.hpp"
#include "lomap/eval.hpp"
#include "lomap/mapping.hpp"
#include "lomap/mesher.hpp"
#include "lomap/odometry.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace lomap {

struct ScanDiag {
  int scan_index = 0;
  int iterations = 0;
  double track_loss = 0.0;
  double map_loss = 0.0;
  bool diverged = false;
};

struct KeyLog {
  int scan_index = 0;
  int n_v = 0;
  double displacement = 0.0;
  bool key = false;
};

struct PipelineResult {
  std::vector<PoseSE3> traj_odom;   // per-scan poses before key-scan refinement
  std::vector<PoseSE3> traj_final;  // after refinement (same when disabled)
  TriMesh mesh;
  std::vector<ScanDiag> diag;
  std::vector<KeyLog> key_log;
  int key_scans = 0;
};

using ScanProvider = std::function<Scan(int)>;

/// Full run: ground separation - tracking - mapping - key-scan selection,
/// then refinement and meshing. When out_dir is non-empty, writes
/// trajectory_odometry.txt, trajectory_final.txt, mesh.ply, map.ckpt,
/// decoder.ckpt, odometry_diag.csv and keyscans.csv there.
PipelineResult run_pipeline(const Config& cfg, int scan_count, const ScanProvider& provider,
                            const std::string& out_dir = "", std::ostream* progress = nullptr);

struct AblationRow {
  bool ground = false;
  bool refine = false;
  MetricReport report;
};

/// Cartesian product {ground on/off} x {refine on/off} under a shared seed.
/// gt_poses/gt_surface may be empty, in which case the metric fields stay 0.
std::vector<AblationRow> run_ablation(const Config& cfg, int scan_count,
                                      const ScanProvider& provider,
                                      const std::vector<PoseSE3>& gt_poses,
                                      const std::vector<Vec3>& gt_surface, double threshold,
                                      const std::string& out_dir, std::ostream* progress);

/// Sample budget for mesh metrics: 10 points per cm^2 capped at 1e6.
size_t mesh_sample_count(const TriMesh& mesh);

/// trajectory + mesh evaluation helper shared by the CLI and the ablation
/// driver.
MetricReport evaluate_run(const PipelineResult& run, const std::vector<PoseSE3>& gt_poses,
                          const std::vector<Vec3>& gt_surface, double threshold, uint64_t seed);

}  // namespace lomap

#include "lomap/pipeline.hpp"

#include <Eigen/Geometry>

#include "lomap/io.hpp"

#include <filesystem>
#include <fstream>
#include <future>
#include <ostream>

namespace lomap {

namespace fs = std::filesystem;

size_t mesh_sample_count(const TriMesh& mesh) {
  double area = 0.0;
  for (const auto& tri : mesh.triangles) {
    const Vec3 a = mesh.vertices[tri[0]];
    area += 0.5 * (mesh.vertices[tri[1]] - a).cross(mesh.vertices[tri[2]] - a).norm();
  }
  const double by_density = area * 1e5;  // 10 / cm^2 = 1e5 / m^2
  return static_cast<size_t>(std::max(1.0, std::min(1e6, by_density)));
}

namespace {

void write_outputs(const Config& cfg, const PipelineResult& result, const VoxelMap& map,
                   const Decoder& dec, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  write_trajectory(result.traj_odom, (dir / "trajectory_odometry.txt").string(),
                   TrajFormat::kKitti3x4);
  write_trajectory(result.traj_final, (dir / "trajectory_final.txt").string(),
                   TrajFormat::kKitti3x4);
  write_ply_mesh(result.mesh, (dir / "mesh.ply").string());
  map.save((dir / "map.ckpt").string());
  dec.save((dir / "decoder.ckpt").string());

  std::ofstream cfg_os(dir / "config_used.txt");
  cfg_os << cfg.serialize();

  std::ofstream diag(dir / "odometry_diag.csv");
  diag << "scan,iterations,track_loss,map_loss,diverged,tx,ty,tz\n";
  for (const ScanDiag& d : result.diag) {
    const Vec3& t = result.traj_final[d.scan_index].translation;
    diag << d.scan_index << "," << d.iterations << "," << d.track_loss << "," << d.map_loss
         << "," << (d.diverged ? 1 : 0) << "," << t.x() << "," << t.y() << "," << t.z() << "\n";
  }

  std::ofstream keys(dir / "keyscans.csv");
  keys << "scan,n_v,displacement,key\n";
  for (const KeyLog& k : result.key_log) {
    keys << k.scan_index << "," << k.n_v << "," << k.displacement << "," << (k.key ? 1 : 0)
         << "\n";
  }
}

}  // namespace

PipelineResult run_pipeline(const Config& cfg, int scan_count, const ScanProvider& provider,
                            const std::string& out_dir, std::ostream* progress) {
  cfg.validate();
  if (scan_count < 1) throw Error("run_pipeline: no scans");

  VoxelMap map(cfg.map_params());
  Decoder dec = Decoder::init(cfg.emb_dim, cfg.decoder_hidden, cfg.seed ^ 0xDECULL);
  MapOptimizer opt;
  const LossParams loss_params = cfg.loss_params();
  const OdometryConfig odo_cfg = cfg.odometry_config();
  const MappingConfig map_cfg = cfg.mapping_config();
  const GroundParams ground_params = cfg.ground_params();
  const bool parallel = cfg.parallel_kernels;
  const bool pipelined = cfg.mode == "pipelined";

  PipelineResult result;
  std::vector<PoseSE3> poses;
  std::vector<char> clamp;
  poses.reserve(scan_count);  // element addresses stay valid for the backend
  clamp.reserve(scan_count);
  KeyScanBuffer buffer;
  OdometryState state;
  state.freeze_after = cfg.freeze_after;

  // Deferred mapping of the previous scan (pipelined mode): runs while the
  // current scan is tracked against a snapshot.
  std::future<MapScanResult> pending;
  int pending_scan = -1;
  bool pending_running = false;
  LabeledScan pending_labeled;

  auto launch_pending = [&]() {
    const int idx = pending_scan;
    const bool clamp_pose = clamp[idx] != 0;
    const bool frozen = idx >= cfg.freeze_after;
    PoseSE3* pose_ptr = &poses[idx];
    const LabeledScan* scan_ptr = &pending_labeled;
    pending = std::async(std::launch::async, [&map, &dec, &opt, scan_ptr, pose_ptr, clamp_pose,
                                              frozen, &loss_params, &map_cfg, &odo_cfg,
                                              seed = cfg.seed + idx, parallel]() {
      return map_scan(*scan_ptr, *pose_ptr, clamp_pose, map, dec, frozen, opt, loss_params,
                      map_cfg, odo_cfg, seed, parallel);
    });
    pending_running = true;
  };

  auto finish_pending = [&]() {
    if (!pending_running) return;
    const MapScanResult res = pending.get();
    pending_running = false;
    const int idx = pending_scan;
    pending_scan = -1;
    result.diag[idx].map_loss = res.final_loss;
    const bool key = key_scan_check(res.n_v, poses[idx], buffer, map_cfg.keyscan_nv_threshold,
                                    map_cfg.keyscan_dist);
    const double disp =
        buffer.has_key ? (poses[idx].translation - buffer.last_key_pose.translation).norm()
                       : 0.0;
    result.key_log.push_back({idx, res.n_v, disp, key});
    if (key) {
      buffer.entries.push_back({idx, std::move(pending_labeled), res.n_v});
      buffer.last_key_pose = poses[idx];
      buffer.has_key = true;
    }
  };

  for (int i = 0; i < scan_count; ++i) {
    Scan scan;
    try {
      scan = provider(i);
    } catch (const std::exception& e) {
      throw Error("scan " + std::to_string(i) + " (input): " + e.what());
    }
    scan.index = i;
    if (scan.points.empty()) {
      throw Error("scan " + std::to_string(i) + " (input): empty scan");
    }

    LabeledScan labeled;
    try {
      labeled = cfg.ground_enabled ? segment_ground(scan, ground_params) : pass_through(scan);
      labeled.index = i;
    } catch (const std::exception& e) {
      throw Error("scan " + std::to_string(i) + " (ground segmentation): " + e.what());
    }

    ScanDiag diag;
    diag.scan_index = i;
    PoseSE3 pose;
    if (i == 0) {
      pose = PoseSE3::identity();
    } else {
      // Constant-motion inputs read before any concurrent pose fine-tuning.
      state.prev = poses[i - 1];
      state.prev2 = poses[i >= 2 ? i - 2 : i - 1];
      state.scan_count = i;

      VoxelMap snapshot_map;
      Decoder snapshot_dec;
      const VoxelMap* track_map = &map;
      const Decoder* track_dec = &dec;
      const bool overlap = pipelined && pending_scan >= 0;
      if (overlap) {
        snapshot_map = map;  // state after mapping scans <= i-2
        snapshot_dec = dec;
        track_map = &snapshot_map;
        track_dec = &snapshot_dec;
        launch_pending();
      }

      TrackResult track;
      try {
        track = track_scan(labeled, state, *track_map, *track_dec, loss_params, odo_cfg,
                           cfg.seed + i, parallel);
      } catch (const std::exception& e) {
        if (pending_running) pending.wait();
        throw Error("scan " + std::to_string(i) + " (odometry): " + e.what());
      }
      if (overlap) finish_pending();

      pose = track.pose;
      diag.iterations = track.iterations;
      diag.track_loss = track.loss_trace.empty() ? 0.0 : track.loss_trace.back();
      diag.diverged = track.diverged;
      if (track.diverged) {
        if (cfg.abort_on_divergence) {
          throw Error("scan " + std::to_string(i) +
                      " (odometry): divergence, constant-motion fallback rejected");
        }
        if (progress) {
          *progress << "scan " << i << ": odometry diverged, constant-motion fallback\n";
        }
      }
    }

    poses.push_back(pose);
    clamp.push_back(i == 0 ? 1 : 0);
    result.diag.push_back(diag);

    // Scan 0 always maps synchronously so the first tracking has a map.
    if (pipelined && i >= 1 && i + 1 < scan_count) {
      pending_labeled = std::move(labeled);
      pending_scan = i;
    } else {
      finish_pending();
      MapScanResult res;
      try {
        res = map_scan(labeled, poses[i], clamp[i] != 0, map, dec, i >= cfg.freeze_after, opt,
                       loss_params, map_cfg, odo_cfg, cfg.seed + i, parallel);
      } catch (const std::exception& e) {
        throw Error("scan " + std::to_string(i) + " (mapping): " + e.what());
      }
      result.diag[i].map_loss = res.final_loss;
      const bool key = key_scan_check(res.n_v, poses[i], buffer, map_cfg.keyscan_nv_threshold,
                                      map_cfg.keyscan_dist);
      const double disp =
          buffer.has_key ? (poses[i].translation - buffer.last_key_pose.translation).norm()
                         : 0.0;
      result.key_log.push_back({i, res.n_v, disp, key});
      if (key) {
        buffer.entries.push_back({i, std::move(labeled), res.n_v});
        buffer.last_key_pose = poses[i];
        buffer.has_key = true;
      }
    }

    if (progress) {
      *progress << "scan " << i << "/" << scan_count - 1 << " done\n";
    }
  }
  finish_pending();

  result.traj_odom = poses;
  result.key_scans = static_cast<int>(buffer.entries.size());

  if (cfg.refine_enabled && !buffer.entries.empty()) {
    if (progress) *progress << "refining " << buffer.entries.size() << " key scans\n";
    try {
      refine_key_scans(buffer, map, dec, poses, std::vector<bool>(clamp.begin(), clamp.end()),
                       opt, loss_params, map_cfg, odo_cfg, cfg.seed ^ 0xEF1EULL, parallel);
    } catch (const std::exception& e) {
      throw Error(std::string("refinement: ") + e.what());
    }
  }
  result.traj_final = poses;

  if (progress) *progress << "extracting mesh\n";
  result.mesh = marching_cubes(query_grid(map, dec, parallel), 0.0, parallel);

  if (!out_dir.empty()) {
    write_outputs(cfg, result, map, dec, out_dir);
  }
  return result;
}

MetricReport evaluate_run(const PipelineResult& run, const std::vector<PoseSE3>& gt_poses,
                          const std::vector<Vec3>& gt_surface, double threshold,
                          uint64_t seed) {
  MetricReport report;
  report.threshold = threshold;
  if (!gt_poses.empty()) {
    report.ate_rmse = ate_rmse(run.traj_final, gt_poses, &report.per_axis_rmse);
    const auto rel = rel_errors(run.traj_final, gt_poses);
    if (rel) {
      report.t_rel_percent = rel->t_rel_percent;
      report.r_rel_deg_per_100m = rel->r_rel_deg_per_100m;
    }
  }
  if (!gt_surface.empty() && !run.mesh.triangles.empty()) {
    const auto samples =
        sample_mesh_surface(run.mesh, mesh_sample_count(run.mesh), seed ^ 0x5A11ULL);
    const MeshMetrics m = cloud_metrics(samples, gt_surface, threshold);
    report.accuracy_cm = m.accuracy * 100.0;
    report.completion_cm = m.completion * 100.0;
    report.chamfer_l1_cm = m.chamfer_l1 * 100.0;
    report.f_score = m.f_score;
  }
  return report;
}

std::vector<AblationRow> run_ablation(const Config& cfg, int scan_count,
                                      const ScanProvider& provider,
                                      const std::vector<PoseSE3>& gt_poses,
                                      const std::vector<Vec3>& gt_surface, double threshold,
                                      const std::string& out_dir, std::ostream* progress) {
  std::vector<AblationRow> rows;
  for (const bool ground : {true, false}) {
    for (const bool refine : {true, false}) {
      Config variant = cfg;
      variant.ground_enabled = ground;
      variant.refine_enabled = refine;
      std::string sub;
      if (!out_dir.empty()) {
        sub = (fs::path(out_dir) / (std::string("ground_") + (ground ? "on" : "off") +
                                    "_refine_" + (refine ? "on" : "off")))
                  .string();
      }
      if (progress) {
        *progress << "ablation: ground=" << (ground ? "on" : "off")
                  << " refine=" << (refine ? "on" : "off") << " seed=" << variant.seed << "\n";
      }
      const PipelineResult run = run_pipeline(variant, scan_count, provider, sub, progress);
      AblationRow row;
      row.ground = ground;
      row.refine = refine;
      row.report = evaluate_run(run, gt_poses, gt_surface, threshold, cfg.seed);
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace lomap

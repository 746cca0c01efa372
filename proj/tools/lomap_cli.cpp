// Command-line frontend: run the odometry/mapping pipeline, extract meshes
// from checkpoints, evaluate trajectories and reconstructions, generate
// synthetic scan sequences, and run the ablation grid.

#include "lomap/config.hpp"
#include "lomap/eval.hpp"
#include "lomap/io.hpp"
#include "lomap/mesher.hpp"
#include "lomap/pipeline.hpp"
#include "lomap/synth.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

namespace fs = std::filesystem;
using namespace lomap;

namespace {

Config load_config(const std::string& config_path, uint64_t* seed_flag,
                   std::string* mode_flag) {
  Config cfg = config_path.empty() ? Config::defaults() : Config::from_file(config_path);
  if (config_path.empty()) cfg.apply_env_overrides();
  if (seed_flag) cfg.seed = *seed_flag;
  if (mode_flag) cfg.mode = *mode_flag;
  cfg.validate();
  return cfg;
}

int cmd_run(const std::string& config_path, const std::string& scan_dir,
            const std::string& out_dir, uint64_t* seed_flag, std::string* mode_flag) {
  const Config cfg = load_config(config_path, seed_flag, mode_flag);
  const auto files = list_scan_files(scan_dir);
  if (files.empty()) throw Error("no .bin scans in " + scan_dir);
  std::cerr << "running " << files.size() << " scans from " << scan_dir << "\n";
  run_pipeline(
      cfg, static_cast<int>(files.size()), [&](int i) { return read_kitti_bin(files[i]); },
      out_dir, &std::cerr);
  std::cerr << "outputs in " << out_dir << "\n";
  return 0;
}

int cmd_mesh(const std::string& map_path, const std::string& decoder_path,
             const std::string& out_path) {
  const VoxelMap map = VoxelMap::load(map_path);
  const Decoder dec = Decoder::load(decoder_path);
  const TriMesh mesh = marching_cubes(query_grid(map, dec));
  write_ply_mesh(mesh, out_path);
  std::cerr << "mesh: " << mesh.vertices.size() << " vertices, " << mesh.triangles.size()
            << " triangles -> " << out_path << "\n";
  return 0;
}

int cmd_eval_traj(const std::string& est_path, const std::string& gt_path,
                  const std::string& format, const std::string& csv_path) {
  const TrajFormat fmt = format == "tum" ? TrajFormat::kTum : TrajFormat::kKitti3x4;
  const auto est = read_poses(est_path, fmt);
  const auto gt = read_poses(gt_path, fmt);
  MetricReport report;
  report.ate_rmse = ate_rmse(est, gt, &report.per_axis_rmse);
  const auto rel = rel_errors(est, gt);
  if (rel) {
    report.t_rel_percent = rel->t_rel_percent;
    report.r_rel_deg_per_100m = rel->r_rel_deg_per_100m;
  }
  std::cout << report.to_text();
  if (!csv_path.empty()) {
    std::ofstream os(csv_path);
    os << report.to_csv();
  }
  return 0;
}

int cmd_eval_mesh(const std::string& recon_path, const std::string& gt_path, double threshold,
                  bool crop, double crop_dist, const std::string& error_map_path,
                  double error_clamp, uint64_t seed, const std::string& csv_path) {
  std::vector<Vec3> recon;
  if (recon_path.size() > 4 && fs::path(recon_path).extension() == ".ply") {
    const TriMesh mesh = read_ply_mesh(recon_path);
    if (!mesh.triangles.empty()) {
      recon = sample_mesh_surface(mesh, mesh_sample_count(mesh), seed);
    } else {
      recon = read_ply_points(recon_path).points;
    }
  } else {
    throw Error("eval-mesh: reconstruction must be a .ply file");
  }
  std::vector<Vec3> gt = read_ply_points(gt_path).points;
  if (recon.empty() || gt.empty()) throw Error("eval-mesh: empty cloud");
  if (crop) gt = crop_to_observed(gt, recon, crop_dist);
  if (gt.empty()) throw Error("eval-mesh: crop removed every gt point");

  const MeshMetrics m = cloud_metrics(recon, gt, threshold);
  MetricReport report;
  report.threshold = threshold;
  report.accuracy_cm = m.accuracy * 100.0;
  report.completion_cm = m.completion * 100.0;
  report.chamfer_l1_cm = m.chamfer_l1 * 100.0;
  report.f_score = m.f_score;
  std::cout << report.to_text();
  if (!csv_path.empty()) {
    std::ofstream os(csv_path);
    os << report.to_csv();
  }
  if (!error_map_path.empty()) {
    const auto dist = distances_to(recon, gt);
    write_ply_points(recon, error_map_path, true, &dist, error_clamp);
    std::cerr << "error map -> " << error_map_path << "\n";
  }
  return 0;
}

int cmd_synth(const std::string& scene_path, const std::string& out_dir, uint64_t seed,
              int gt_samples) {
  const SceneFile sf = parse_scene_file(scene_path);
  const auto poses = make_trajectory(sf.traj);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  fs::create_directories(dir / "scans");

  // noisy scans with transients active
  for (size_t i = 0; i < poses.size(); ++i) {
    const SynthScan s = synth_scan(sf.scene, poses[i], sf.beams, static_cast<int>(i), seed);
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu.bin", i);
    write_kitti_bin(s.scan, (dir / "scans" / name).string());
  }
  write_trajectory(poses, (dir / "poses_gt.txt").string(), TrajFormat::kKitti3x4);

  // noise-free static-scene hit points as observed ground-truth surface
  const AnalyticScene static_scene = sf.scene.static_only();
  BeamConfig clean = sf.beams;
  clean.noise_sigma = 0.0;
  std::vector<Vec3> surface;
  for (size_t i = 0; i < poses.size(); ++i) {
    const SynthScan s = synth_scan(static_scene, poses[i], clean, static_cast<int>(i), seed);
    for (const Vec3& p : s.scan.points) surface.push_back(poses[i] * p);
  }
  if (static_cast<int>(surface.size()) > gt_samples) {
    std::mt19937_64 rng(seed ^ 0x6757ULL);
    std::vector<Vec3> keep;
    keep.reserve(gt_samples);
    std::sample(surface.begin(), surface.end(), std::back_inserter(keep), gt_samples, rng);
    surface = std::move(keep);
  }
  write_ply_points(surface, (dir / "gt_surface.ply").string());
  std::cerr << "synth: " << poses.size() << " scans, " << surface.size()
            << " gt surface samples -> " << out_dir << "\n";
  return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& synth_dir,
               const std::string& out_dir, double threshold, uint64_t* seed_flag,
               std::string* mode_flag) {
  const Config cfg = load_config(config_path, seed_flag, mode_flag);
  const fs::path dir(synth_dir);
  const auto files = list_scan_files((dir / "scans").string());
  if (files.empty()) throw Error("no scans in " + synth_dir);
  std::vector<PoseSE3> gt_poses;
  if (fs::exists(dir / "poses_gt.txt")) {
    gt_poses = read_poses((dir / "poses_gt.txt").string(), TrajFormat::kKitti3x4);
  }
  std::vector<Vec3> gt_surface;
  if (fs::exists(dir / "gt_surface.ply")) {
    gt_surface = read_ply_points((dir / "gt_surface.ply").string()).points;
  }

  const auto rows = run_ablation(
      cfg, static_cast<int>(files.size()), [&](int i) { return read_kitti_bin(files[i]); },
      gt_poses, gt_surface, threshold, out_dir, &std::cerr);

  fs::create_directories(out_dir);
  std::ofstream os(fs::path(out_dir) / "ablation.csv");
  os << "ground,refine,seed,ate_rmse_m,ate_z_m,accuracy_cm,completion_cm,chamfer_l1_cm,"
        "f_score_pct\n";
  std::cout << "ground refine ate_rmse_m ate_z_m chamfer_l1_cm f_score_pct (seed " << cfg.seed
            << ")\n";
  for (const AblationRow& row : rows) {
    os << (row.ground ? 1 : 0) << "," << (row.refine ? 1 : 0) << "," << cfg.seed << ","
       << row.report.ate_rmse << "," << row.report.per_axis_rmse.z() << ","
       << row.report.accuracy_cm << "," << row.report.completion_cm << ","
       << row.report.chamfer_l1_cm << "," << row.report.f_score << "\n";
    std::cout << (row.ground ? "on " : "off") << "    " << (row.refine ? "on " : "off")
              << "    " << row.report.ate_rmse << " " << row.report.per_axis_rmse.z() << " "
              << row.report.chamfer_l1_cm << " " << row.report.f_score << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LiDAR odometry and sparse-voxel SDF mapping"};
  app.require_subcommand(1);

  std::string config_path, scan_dir, out_dir = "out";
  uint64_t seed_flag = 0;
  std::string mode_flag;
  bool print_config = false;

  app.add_flag("--print-config", print_config, "print the full default config and exit");

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "config file (key = value lines)");
    sub->add_option("--seed", seed_flag, "override the config seed");
    sub->add_option("--mode", mode_flag, "sequential | pipelined");
    sub->add_option("--output-dir", out_dir, "output directory");
  };

  auto* run = app.add_subcommand("run", "full pipeline over a directory of KITTI .bin scans");
  add_common(run);
  run->add_option("--scans", scan_dir, "directory of .bin scans")->required();

  auto* mesh = app.add_subcommand("mesh", "extract a mesh from map + decoder checkpoints");
  std::string map_path, dec_path, mesh_out = "mesh.ply";
  mesh->add_option("--map", map_path, "map checkpoint")->required();
  mesh->add_option("--decoder", dec_path, "decoder checkpoint")->required();
  mesh->add_option("--out", mesh_out, "output PLY");

  auto* evt = app.add_subcommand("eval-traj", "ATE / relative errors of two trajectories");
  std::string est_path, gt_path, fmt = "kitti", csv_path;
  evt->add_option("--est", est_path)->required();
  evt->add_option("--gt", gt_path)->required();
  evt->add_option("--format", fmt, "kitti | tum");
  evt->add_option("--csv", csv_path, "also write the report as CSV");

  auto* evm = app.add_subcommand("eval-mesh", "reconstruction metrics vs a gt cloud");
  std::string recon_path, gt_cloud_path, error_map_path;
  double threshold = 0.1, crop_dist = 2.0, error_clamp = 0.25;
  bool no_crop = false;
  uint64_t eval_seed = 42;
  evm->add_option("--recon", recon_path, "reconstructed mesh or cloud (.ply)")->required();
  evm->add_option("--gt", gt_cloud_path, "ground-truth cloud (.ply)")->required();
  evm->add_option("--threshold", threshold, "F-score threshold in meters");
  evm->add_flag("--no-crop", no_crop, "skip cropping gt to the observed region");
  evm->add_option("--crop-dist", crop_dist, "observed-region crop distance in meters");
  evm->add_option("--error-map", error_map_path, "write per-point error PLY");
  evm->add_option("--error-clamp", error_clamp, "error color ramp clamp in meters");
  evm->add_option("--seed", eval_seed, "mesh sampling seed");
  evm->add_option("--csv", csv_path, "also write the report as CSV");

  auto* synth = app.add_subcommand("synth", "generate a synthetic scan sequence");
  std::string scene_path;
  int gt_samples = 100000;
  uint64_t synth_seed = 42;
  synth->add_option("--scene", scene_path, "scene description file")->required();
  synth->add_option("--output-dir", out_dir, "output directory");
  synth->add_option("--seed", synth_seed, "noise / subsample seed");
  synth->add_option("--gt-samples", gt_samples, "ground-truth surface sample count");

  auto* abl = app.add_subcommand("ablate", "2x2 grid: ground separation x key-scan refine");
  add_common(abl);
  std::string synth_dir;
  double abl_threshold = 0.1;
  abl->add_option("--synth-dir", synth_dir, "directory produced by `synth`")->required();
  abl->add_option("--threshold", abl_threshold, "F-score threshold in meters");

  CLI11_PARSE(app, argc, argv);

  if (print_config) {
    std::cout << Config::defaults().serialize();
    return 0;
  }

  try {
    uint64_t* seed_ptr = app.count_all() && seed_flag != 0 ? &seed_flag : nullptr;
    std::string* mode_ptr = mode_flag.empty() ? nullptr : &mode_flag;
    if (run->parsed()) return cmd_run(config_path, scan_dir, out_dir, seed_ptr, mode_ptr);
    if (mesh->parsed()) return cmd_mesh(map_path, dec_path, mesh_out);
    if (evt->parsed()) return cmd_eval_traj(est_path, gt_path, fmt, csv_path);
    if (evm->parsed()) {
      return cmd_eval_mesh(recon_path, gt_cloud_path, threshold, !no_crop, crop_dist,
                           error_map_path, error_clamp, eval_seed, csv_path);
    }
    if (synth->parsed()) return cmd_synth(scene_path, out_dir, synth_seed, gt_samples);
    if (abl->parsed()) {
      return cmd_ablate(config_path, synth_dir, out_dir, abl_threshold, seed_ptr, mode_ptr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

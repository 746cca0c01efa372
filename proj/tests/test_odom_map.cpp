#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lomap/mapping.hpp"
#include "lomap/odometry.hpp"
#include "lomap/synth.hpp"

#include <Eigen/Geometry>

#include <random>

using namespace lomap;

namespace {

AnalyticScene desk_scene() {
  AnalyticScene scene;
  Primitive plane;
  plane.kind = Primitive::Kind::kPlane;
  plane.label = PrimLabel::kGround;
  plane.point = Vec3(0, 0, 0);
  scene.primitives.push_back(plane);
  Primitive box1;
  box1.kind = Primitive::Kind::kBox;
  box1.bmin = Vec3(3.0, -1.0, 0.0);
  box1.bmax = Vec3(4.0, 1.0, 1.6);
  scene.primitives.push_back(box1);
  Primitive box2;
  box2.kind = Primitive::Kind::kBox;
  box2.bmin = Vec3(-1.0, 2.5, 0.0);
  box2.bmax = Vec3(1.0, 3.5, 1.2);
  scene.primitives.push_back(box2);
  Primitive box3;
  box3.kind = Primitive::Kind::kBox;
  box3.bmin = Vec3(-3.5, -3.0, 0.0);
  box3.bmax = Vec3(-2.5, -1.0, 2.0);
  scene.primitives.push_back(box3);
  return scene;
}

BeamConfig desk_beams(double noise = 0.0) {
  return linear_beams(24, -35.0 * M_PI / 180, 8.0 * M_PI / 180, 2.0 * M_PI / 180, 30.0, noise);
}

struct TrainedMap {
  VoxelMap map;
  Decoder dec;
  MapOptimizer opt;
  LabeledScan labeled;
  LossParams loss_params;
  MappingConfig map_cfg;
  OdometryConfig odo_cfg;
  double first_loss = 0.0;

  TrainedMap() {
    PoseSE3 sensor;
    sensor.translation = Vec3(0, 0, 1.4);
    const Scan scan = synth_scan(desk_scene(), sensor, desk_beams(), 0, 3).scan;
    labeled = segment_ground(scan, GroundParams{});
    labeled.index = 0;

    dec = Decoder::init(16, 64, 11);
    map_cfg.iterations = 200;
    map_cfg.rays = 1024;
    map_cfg.jitter = true;

    PoseSE3 pose = sensor;
    const MapScanResult res = map_scan(labeled, pose, /*clamp_pose=*/true, map, dec,
                                       /*decoder_frozen=*/false, opt, loss_params, map_cfg,
                                       odo_cfg, 5, true);
    first_loss = res.final_loss;
    sensor_pose = sensor;
  }

  PoseSE3 sensor_pose;
};

TrainedMap& trained() {
  static TrainedMap instance;
  return instance;
}

double rot_angle_deg(const Mat3& a, const Mat3& b) {
  return rotation_angle(a.transpose() * b) * 180.0 / M_PI;
}

}  // namespace

TEST_CASE("key_scan_check: first scan, inclusive threshold, displacement") {
  KeyScanBuffer buffer;
  PoseSE3 pose;
  CHECK(key_scan_check(0, pose, buffer, 500, 1.0));  // first scan always key

  buffer.has_key = true;
  buffer.last_key_pose = pose;
  CHECK(!key_scan_check(0, pose, buffer, 500, 1.0));
  CHECK(key_scan_check(500, pose, buffer, 500, 1.0));  // N_v == N_t inclusive
  CHECK(!key_scan_check(499, pose, buffer, 500, 1.0));

  PoseSE3 moved;
  moved.translation = Vec3(1.0, 0, 0);
  CHECK(key_scan_check(0, moved, buffer, 500, 1.0));  // d_f inclusive
  moved.translation = Vec3(0.99, 0, 0);
  CHECK(!key_scan_check(0, moved, buffer, 500, 1.0));
}

TEST_CASE("map_scan reports N_v equal to the voxel-count delta and fits the plane") {
  TrainedMap& tm = trained();
  CHECK(tm.map.voxels().size() > 100);

  // N_v bookkeeping on a second insertion pass
  const size_t before = tm.map.voxels().size();
  VoxelMap copy = tm.map;
  Decoder dec_copy = tm.dec;
  MapOptimizer opt_copy;
  PoseSE3 pose = tm.sensor_pose;
  MappingConfig quick = tm.map_cfg;
  quick.iterations = 1;
  const MapScanResult res = map_scan(tm.labeled, pose, true, copy, dec_copy, false, opt_copy,
                                     tm.loss_params, quick, tm.odo_cfg, 6, true);
  CHECK(res.n_v == static_cast<int>(copy.voxels().size() - before));
  CHECK(res.n_v == 0);  // same scan, nothing new

  // the trained SDF is small near the observed surface
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  int hits = 0, total = 0;
  for (const GroundPoint& gp : tm.labeled.ground) {
    if (total >= 200) break;
    const auto v = query_sdf(tm.sensor_pose * gp.point, tm.map, tm.dec);
    if (!v) continue;
    ++total;
    if (std::abs(*v) < 0.05) ++hits;
  }
  REQUIRE(total >= 100);
  CHECK(static_cast<double>(hits) / total > 0.9);
}

TEST_CASE("mapping the same scan twice does not increase the final loss") {
  TrainedMap& tm = trained();
  VoxelMap copy = tm.map;
  Decoder dec_copy = tm.dec;
  MapOptimizer opt;
  PoseSE3 pose = tm.sensor_pose;
  MappingConfig cfg = tm.map_cfg;
  cfg.iterations = 30;
  const MapScanResult second = map_scan(tm.labeled, pose, true, copy, dec_copy, false, opt,
                                        tm.loss_params, cfg, tm.odo_cfg, 7, true);
  CHECK(second.final_loss <= tm.first_loss + 1e-6);
}

TEST_CASE("track_scan holds a converged pose fixed") {
  TrainedMap& tm = trained();
  OdometryState state;
  state.prev = tm.sensor_pose;
  state.prev2 = tm.sensor_pose;
  state.scan_count = 1;

  OdometryConfig cfg;
  cfg.iterations = 30;
  cfg.rays = 768;
  const TrackResult res =
      track_scan(tm.labeled, state, tm.map, tm.dec, tm.loss_params, cfg, 17, true);
  CHECK(!res.diverged);
  CHECK((res.pose.translation - tm.sensor_pose.translation).norm() < 1e-3);
  CHECK(rot_angle_deg(res.pose.rotation, tm.sensor_pose.rotation) < 0.01);
  for (double loss : res.loss_trace) CHECK(std::isfinite(loss));
  CHECK(res.max_ortho_error < 1e-9);
}

TEST_CASE("track_scan recovers a perturbed initialization") {
  TrainedMap& tm = trained();
  Vec6 xi;
  xi << 0.13, -0.12, 0.08, 0.0, 0.0, 2.0 * M_PI / 180.0;  // 0.2 m, 2 degrees
  const PoseSE3 init = se3_exp(xi) * tm.sensor_pose;
  OdometryState state;
  state.prev = init;
  state.prev2 = init;
  state.scan_count = 1;

  OdometryConfig cfg;
  cfg.iterations = 60;
  cfg.rays = 1024;
  const TrackResult res =
      track_scan(tm.labeled, state, tm.map, tm.dec, tm.loss_params, cfg, 19, true);
  CHECK(!res.diverged);
  CHECK((res.pose.translation - tm.sensor_pose.translation).norm() < 0.02);
  CHECK(rot_angle_deg(res.pose.rotation, tm.sensor_pose.rotation) < 0.2);
}

TEST_CASE("track_scan on an empty map raises the zero-eligible error") {
  TrainedMap& tm = trained();
  VoxelMap empty;
  OdometryState state;
  CHECK_THROWS_WITH_AS(
      track_scan(tm.labeled, state, empty, tm.dec, tm.loss_params, OdometryConfig{}, 1, true),
      doctest::Contains("no eligible rays"), Error);
}

TEST_CASE("refinement: converged single-scan buffer is a fixed point") {
  TrainedMap& tm = trained();
  VoxelMap copy = tm.map;
  Decoder dec_copy = tm.dec;
  MapOptimizer opt;
  KeyScanBuffer buffer;
  buffer.entries.push_back({0, tm.labeled, 100});
  buffer.has_key = true;
  buffer.last_key_pose = tm.sensor_pose;

  std::vector<PoseSE3> poses = {tm.sensor_pose};
  MappingConfig cfg = tm.map_cfg;
  cfg.refine_epochs = 2;
  cfg.refine_iters = 5;
  refine_key_scans(buffer, copy, dec_copy, poses, {false}, opt, tm.loss_params, cfg,
                   tm.odo_cfg, 23, true);
  CHECK((poses[0].translation - tm.sensor_pose.translation).norm() < 1e-3);

  // all poses clamped: bitwise no pose change
  std::vector<PoseSE3> clamped = {tm.sensor_pose};
  refine_key_scans(buffer, copy, dec_copy, clamped, {true}, opt, tm.loss_params, cfg,
                   tm.odo_cfg, 23, true);
  CHECK(clamped[0].translation == tm.sensor_pose.translation);
  CHECK(clamped[0].rotation == tm.sensor_pose.rotation);

  KeyScanBuffer empty;
  CHECK_THROWS_AS(refine_key_scans(empty, copy, dec_copy, poses, {false}, opt, tm.loss_params,
                                   cfg, tm.odo_cfg, 1, true),
                  Error);
}

TEST_CASE("embedding updates touch only stencil vertices") {
  TrainedMap& tm = trained();
  VoxelMap copy = tm.map;
  const auto rays = select_rays(tm.labeled, tm.sensor_pose, copy, 64, 1, 0, 31);
  const SampleBatch batch = build_batch(rays, copy, 0.5, 0.3, false, 0, 31);
  const GradientBundle g =
      backward(batch, copy, tm.dec, tm.sensor_pose, tm.loss_params, kGradEmbed, true);
  REQUIRE(!g.d_embeddings.empty());

  const std::vector<double> before = copy.embeddings();
  EmbedAdam adam;
  adam.apply(copy, g.d_embeddings, 1e-2);
  std::vector<bool> touched(copy.embedding_count(), false);
  for (const auto& [idx, grad] : g.d_embeddings) touched[idx] = true;
  const int dim = copy.emb_dim();
  for (size_t v = 0; v < copy.embedding_count(); ++v) {
    for (int k = 0; k < dim; ++k) {
      if (touched[v]) continue;
      CHECK(copy.embeddings()[v * dim + k] == before[v * dim + k]);
    }
  }
}

TEST_CASE("sequential tracking is deterministic") {
  TrainedMap& tm = trained();
  OdometryState state;
  state.prev = tm.sensor_pose;
  state.prev2 = tm.sensor_pose;
  OdometryConfig cfg;
  cfg.iterations = 10;
  cfg.rays = 256;
  const TrackResult a =
      track_scan(tm.labeled, state, tm.map, tm.dec, tm.loss_params, cfg, 37, true);
  const TrackResult b =
      track_scan(tm.labeled, state, tm.map, tm.dec, tm.loss_params, cfg, 37, true);
  CHECK(a.pose.translation == b.pose.translation);
  CHECK(a.pose.rotation == b.pose.rotation);
  REQUIRE(a.loss_trace.size() == b.loss_trace.size());
  for (size_t i = 0; i < a.loss_trace.size(); ++i) CHECK(a.loss_trace[i] == b.loss_trace[i]);
}

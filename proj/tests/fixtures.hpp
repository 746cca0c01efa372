#pragma once

// Shared test fixtures: random small maps with mixed sample batches for
// gradient checks, and small synthetic scenes.

#include "lomap/sdf.hpp"

#include <random>
#include <vector>

namespace lomap::testing {

/// Random small map + decoder + pose + mixed free/surface/ground batch.
/// Samples keep clear of voxel faces so a finite-difference step never
/// changes any interpolation stencil, and hidden-unit pre-activations are
/// nudged away from zero so no ReLU kink sits inside the difference interval.
struct GradFixture {
  VoxelMap map;
  Decoder dec;
  PoseSE3 pose;
  SampleBatch batch;
  LossParams params;

  static VoxelMap::Params map_params(uint64_t seed) {
    VoxelMap::Params p;
    p.init = EmbedInit::kUniform;
    p.init_scale = 0.1;
    p.seed = seed;
    return p;
  }

  explicit GradFixture(uint64_t seed, int samples = 120, int hidden = 32)
      : map(map_params(seed)) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);

    std::vector<Vec3> pts;
    for (int i = 0; i < 40; ++i) pts.push_back(Vec3(uni(rng), uni(rng), uni(rng)));
    map.insert_scan(pts, 0);

    dec = Decoder::init(map.emb_dim(), hidden, seed ^ 0xD);
    Vec6 xi;
    for (int k = 0; k < 6; ++k) xi[k] = 0.3 * uni(rng);
    pose = se3_exp(xi);

    params.truncation = 0.3;
    params.eik_delta = 0.002;
    params.eik_every = 1;  // gradient checks cover every term on every sample

    const PoseSE3 inv = pose.inverse();
    std::uniform_real_distribution<double> off(-0.3, 0.3);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(map.voxels().size()) - 1);
    for (int i = 0; i < samples; ++i) {
      const VoxelKey key = map.voxels()[pick(rng)].key;
      const Vec3 center = map.voxel_min(key) + Vec3::Constant(0.5 * map.voxel_size());
      const Vec3 p_world =
          center + Vec3(off(rng), off(rng), off(rng)) * map.voxel_size() * 0.5;

      SamplePoint s;
      s.p_sensor = inv * p_world;
      s.ray_id = i;
      const int kind = i % 3;
      if (kind == 0) {
        s.region = Region::kFree;
        s.t = 1.0;
        s.depth = 2.0;
      } else if (kind == 1) {
        s.region = Region::kSurface;
        s.t = 1.9;
        s.depth = 2.0;
        s.target = s.depth - s.t;
      } else {
        s.region = Region::kSurface;
        s.is_ground = true;
        s.t = 1.9;
        s.depth = 2.0;
        s.endpoint_world = p_world + Vec3(0.05 * uni(rng), 0.05 * uni(rng), 0.1);
        s.normal_world = Vec3(0.1 * uni(rng), 0.1 * uni(rng), 1.0).normalized();
      }
      batch.samples.push_back(s);
    }
    guard_relu_kinks();
  }

  double loss_at(const PoseSE3& at) const {
    return batch_loss(batch, map, dec, at, params).total;
  }

 private:
  // Pre-activations closer than this to zero get their unit bias shifted;
  // finite-difference probes move pre-activations by orders of magnitude less.
  static constexpr double kKinkMargin = 1e-4;

  void guard_relu_kinks() {
    for (int pass = 0; pass < 8; ++pass) {
      bool moved = false;
      for (const SamplePoint& s : batch.samples) {
        const Vec3 p = pose * s.p_sensor;
        moved |= guard_at(p);
        if (s.region == Region::kSurface) {
          for (int a = 0; a < 3; ++a) {
            for (double sign : {1.0, -1.0}) {
              Vec3 q = p;
              q[a] += sign * params.eik_delta;
              moved |= guard_at(q);
            }
          }
        }
      }
      if (!moved) return;
    }
  }

  bool guard_at(const Vec3& p) {
    const int32_t vi = map.voxel_index(world_to_voxel(p, map.voxel_size()));
    if (vi < 0) return false;
    const auto cs = map.vertex_embeddings(map.voxel(vi).key);
    std::array<Eigen::VectorXd, 8> corners;
    for (int c = 0; c < 8; ++c) corners[c] = map.embedding(cs.emb[c]);
    const Eigen::VectorXd f =
        tri_interpolate(p, corners, cs.aabb_min, map.voxel_size(), nullptr);
    const Eigen::VectorXd pre = dec.w1 * f + dec.b1;
    bool moved = false;
    for (Eigen::Index h = 0; h < pre.size(); ++h) {
      if (std::abs(pre[h]) < kKinkMargin) {
        dec.b1[h] += 3.0 * kKinkMargin;
        moved = true;
      }
    }
    return moved;
  }
};

}  // namespace lomap::testing

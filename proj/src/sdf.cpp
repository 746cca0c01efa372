#include "lomap/sdf.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace lomap {

TriWeights tri_weights(const Vec3& p, const Vec3& aabb_min, double voxel_size) {
  const Vec3 u = (p - aabb_min) / voxel_size;
  constexpr double kSlack = 1e-9;
  for (int a = 0; a < 3; ++a) {
    if (u[a] < -kSlack || u[a] > 1.0 + kSlack) {
      throw Error("tri_weights: point outside voxel (local coord " + std::to_string(u[a]) +
                  " on axis " + std::to_string(a) + ")");
    }
  }
  TriWeights tw;
  const double inv = 1.0 / voxel_size;
  for (int c = 0; c < 8; ++c) {
    double f[3], df[3];
    for (int a = 0; a < 3; ++a) {
      const bool hi = (c >> (2 - a)) & 1;  // bit 2 is x, bit 1 is y, bit 0 is z
      f[a] = hi ? u[a] : 1.0 - u[a];
      df[a] = hi ? 1.0 : -1.0;
    }
    tw.w[c] = f[0] * f[1] * f[2];
    tw.dw_dp[c] =
        Vec3(df[0] * f[1] * f[2], f[0] * df[1] * f[2], f[0] * f[1] * df[2]) * inv;
  }
  return tw;
}

Eigen::VectorXd tri_interpolate(const Vec3& p, const std::array<Eigen::VectorXd, 8>& corners,
                                const Vec3& aabb_min, double voxel_size,
                                std::array<double, 8>* weights_out) {
  const TriWeights tw = tri_weights(p, aabb_min, voxel_size);
  Eigen::VectorXd feature = Eigen::VectorXd::Zero(corners[0].size());
  for (int c = 0; c < 8; ++c) feature += tw.w[c] * corners[c];
  if (weights_out) *weights_out = tw.w;
  return feature;
}

namespace {

// Psi inside a known voxel; feature/trace are caller-owned scratch.
double eval_in_voxel(const VoxelMap& map, const Decoder& dec, const VoxelRecord& rec,
                     const Vec3& p, TriWeights& tw, Eigen::VectorXd& feature,
                     DecoderTrace* trace) {
  tw = tri_weights(p, map.voxel_min(rec.key), map.voxel_size());
  feature.setZero(map.emb_dim());
  for (int c = 0; c < 8; ++c) {
    feature.noalias() += tw.w[c] * map.embedding(rec.corner_emb[c]);
  }
  return decode(dec, feature, trace);
}

}  // namespace

std::optional<double> query_sdf(const Vec3& p, const VoxelMap& map, const Decoder& dec) {
  const int32_t idx = map.voxel_index(world_to_voxel(p, map.voxel_size()));
  if (idx < 0) return std::nullopt;
  TriWeights tw;
  Eigen::VectorXd feature;
  return eval_in_voxel(map, dec, map.voxel(idx), p, tw, feature, nullptr);
}

std::optional<Vec3> spatial_gradient(const Vec3& p, const VoxelMap& map, const Decoder& dec,
                                     double delta) {
  Vec3 g;
  for (int a = 0; a < 3; ++a) {
    Vec3 hi = p, lo = p;
    hi[a] += delta;
    lo[a] -= delta;
    const auto vh = query_sdf(hi, map, dec);
    const auto vl = query_sdf(lo, map, dec);
    if (!vh || !vl) return std::nullopt;
    g[a] = (*vh - *vl) / (2.0 * delta);
  }
  return g;
}

double target_sdf(const Vec3& p_sample, const Vec3& endpoint, const Vec3* normal,
                  bool is_ground, double ray_t, double depth) {
  if (is_ground) {
    if (!normal) throw Error("target_sdf: ground sample without a normal");
    return (p_sample - endpoint).dot(*normal);
  }
  (void)endpoint;
  return depth - ray_t;
}

double loss_free_space(std::span<const double> psi, double truncation) {
  if (truncation <= 0) throw Error("loss_free_space: truncation must be > 0");
  if (psi.empty()) return 0.0;
  double sum = 0.0;
  for (double v : psi) sum += (v - truncation) * (v - truncation);
  return sum / static_cast<double>(psi.size());
}

double loss_sdf(std::span<const double> psi, std::span<const double> phi) {
  if (psi.size() != phi.size()) throw Error("loss_sdf: size mismatch");
  if (psi.empty()) return 0.0;
  double sum = 0.0;
  for (size_t i = 0; i < psi.size(); ++i) sum += (psi[i] - phi[i]) * (psi[i] - phi[i]);
  return sum / static_cast<double>(psi.size());
}

double loss_eikonal(std::span<const Vec3> gradients) {
  if (gradients.empty()) return 0.0;
  double sum = 0.0;
  for (const Vec3& g : gradients) {
    const double r = g.norm() - 1.0;
    sum += r * r;
  }
  return sum / static_cast<double>(gradients.size());
}

// ---------------------------------------------------------------------------
// Batch forward + reverse

namespace {

constexpr int kBlockSamples = 256;

struct SampleLocation {
  int32_t voxel = -1;
  std::array<int32_t, 6> probe_voxel{-1, -1, -1, -1, -1, -1};
  bool eikonal = false;
};

struct BlockAccum {
  double sum_free = 0.0, sum_surf = 0.0, sum_eik = 0.0;
  Vec6 d_pose = Vec6::Zero();
  DecoderGrad d_dec;
  std::unordered_map<int32_t, Eigen::VectorXd> d_emb;
  bool has_dec = false;
};

struct Workspace {
  Eigen::VectorXd feature;
  Eigen::VectorXd dfeature;
  Eigen::VectorXd dh;
  DecoderTrace trace;
};

// Reverse step through decoder + interpolation for one evaluation at point p
// inside voxel rec, upstream derivative dy. Adds into the block accumulators
// and returns dPsi-weighted position gradient contribution.
Vec3 eval_backward(const VoxelMap& map, const Decoder& dec, const VoxelRecord& rec,
                   const TriWeights& tw, const Workspace& ws_fwd, double dy, unsigned mask,
                   BlockAccum& acc, Workspace& ws) {
  // decoder backward
  ws.dh = (dy * dec.w2.array() * (ws_fwd.trace.pre.array() > 0.0).cast<double>()).matrix();
  if (mask & kGradDecoder) {
    if (!acc.has_dec) {
      acc.d_dec.init_like(dec);
      acc.has_dec = true;
    }
    acc.d_dec.w2.noalias() += dy * ws_fwd.trace.pre.cwiseMax(0.0);
    acc.d_dec.b2 += dy;
    acc.d_dec.w1.noalias() += ws.dh * ws_fwd.feature.transpose();
    acc.d_dec.b1 += ws.dh;
  }
  ws.dfeature.noalias() = dec.w1.transpose() * ws.dh;

  Vec3 dp = Vec3::Zero();
  for (int c = 0; c < 8; ++c) {
    const auto emb = map.embedding(rec.corner_emb[c]);
    dp += ws.dfeature.dot(emb) * tw.dw_dp[c];
    if (mask & kGradEmbed) {
      auto [it, inserted] = acc.d_emb.try_emplace(rec.corner_emb[c]);
      if (inserted) it->second.setZero(map.emb_dim());
      it->second.noalias() += tw.w[c] * ws.dfeature;
    }
  }
  return dp;
}

}  // namespace

static GradientBundle batch_pass(const SampleBatch& batch, const VoxelMap& map,
                                 const Decoder& dec, const PoseSE3& pose,
                                 const LossParams& params, unsigned mask, bool parallel,
                                 bool want_grads) {
  const auto& samples = batch.samples;
  const int64_t n = static_cast<int64_t>(samples.size());
  const double vsize = map.voxel_size();
  const double delta = params.eik_delta;

  // Locate every sample (and its probes) so the term denominators are known
  // before any gradient scaling.
  std::vector<SampleLocation> loc(n);
  int n_free = 0, n_surf = 0, n_eik = 0, n_skip = 0;
#pragma omp parallel for schedule(static) reduction(+ : n_free, n_surf, n_eik, n_skip) \
    if (parallel)
  for (int64_t i = 0; i < n; ++i) {
    const SamplePoint& s = samples[i];
    const Vec3 p = pose * s.p_sensor;
    loc[i].voxel = map.voxel_index(world_to_voxel(p, vsize));
    if (loc[i].voxel < 0) {
      ++n_skip;
      continue;
    }
    if (s.region == Region::kFree) {
      ++n_free;
      continue;
    }
    ++n_surf;
    if (params.eik_every > 1 && (i % params.eik_every) != 0) continue;
    bool ok = true;
    for (int a = 0; a < 3 && ok; ++a) {
      for (int sgn = 0; sgn < 2 && ok; ++sgn) {
        Vec3 q = p;
        q[a] += sgn ? -delta : delta;
        const int32_t vi = map.voxel_index(world_to_voxel(q, vsize));
        loc[i].probe_voxel[a * 2 + sgn] = vi;
        if (vi < 0) ok = false;
      }
    }
    loc[i].eikonal = ok;
    if (ok) ++n_eik;
  }

  const int n_data = params.combined_data_norm ? n_free + n_surf : 0;
  const double scale_free =
      n_free > 0 ? 2.0 * params.w_free / (params.combined_data_norm ? n_data : n_free) : 0.0;
  const double scale_surf =
      n_surf > 0 ? 2.0 * params.w_sdf / (params.combined_data_norm ? n_data : n_surf) : 0.0;
  const double scale_eik = n_eik > 0 ? 2.0 * params.w_eik / n_eik : 0.0;

  const int64_t n_blocks = (n + kBlockSamples - 1) / kBlockSamples;
  std::vector<BlockAccum> blocks(n_blocks);
  std::vector<std::string> block_error(n_blocks);

#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int64_t b = 0; b < n_blocks; ++b) {
    BlockAccum& acc = blocks[b];
    Workspace fwd, bwd;
    TriWeights tw;
    std::array<TriWeights, 6> probe_tw;
    std::array<Workspace, 6> probe_ws;
    try {
      const int64_t lo = b * kBlockSamples;
      const int64_t hi = std::min(n, lo + kBlockSamples);
      for (int64_t i = lo; i < hi; ++i) {
        const SamplePoint& s = samples[i];
        if (loc[i].voxel < 0) continue;
        const VoxelRecord& rec = map.voxel(loc[i].voxel);
        const Vec3 p = pose * s.p_sensor;

        const double psi = eval_in_voxel(map, dec, rec, p, tw, fwd.feature,
                                         want_grads ? &fwd.trace : nullptr);
        if (!std::isfinite(psi)) {
          throw Error("backward: non-finite SDF value at sample " + std::to_string(i) +
                      (s.region == Region::kFree ? " (free-space term)" : " (sdf term)"));
        }

        Vec3 dLdp = Vec3::Zero();
        if (s.region == Region::kFree) {
          const double r = psi - params.truncation;
          acc.sum_free += r * r;
          if (want_grads) {
            dLdp += eval_backward(map, dec, rec, tw, fwd, scale_free * r, mask, acc, bwd);
          }
        } else {
          const double phi = s.is_ground
                                 ? (p - s.endpoint_world).dot(s.normal_world)
                                 : s.target;
          const double r = psi - phi;
          if (!std::isfinite(r)) {
            throw Error("backward: non-finite residual at sample " + std::to_string(i) +
                        " (sdf term)");
          }
          acc.sum_surf += r * r;
          if (want_grads) {
            const double dy = scale_surf * r;
            dLdp += eval_backward(map, dec, rec, tw, fwd, dy, mask, acc, bwd);
            if (s.is_ground) dLdp -= dy * s.normal_world;  // d(-phi)/dp
          }

          if (loc[i].eikonal) {
            Vec3 g;
            std::array<double, 6> probe_psi;
            for (int k = 0; k < 6; ++k) {
              Vec3 q = p;
              q[k / 2] += (k % 2 == 0) ? delta : -delta;
              const VoxelRecord& prec = map.voxel(loc[i].probe_voxel[(k / 2) * 2 + (k % 2)]);
              probe_psi[k] = eval_in_voxel(map, dec, prec, q, probe_tw[k],
                                           probe_ws[k].feature,
                                           want_grads ? &probe_ws[k].trace : nullptr);
              if (!std::isfinite(probe_psi[k])) {
                throw Error("backward: non-finite SDF value at sample " + std::to_string(i) +
                            " (eikonal probe)");
              }
            }
            for (int a = 0; a < 3; ++a) {
              g[a] = (probe_psi[a * 2] - probe_psi[a * 2 + 1]) / (2.0 * delta);
            }
            const double gnorm = g.norm();
            const double re = gnorm - 1.0;
            acc.sum_eik += re * re;
            if (want_grads && gnorm > 1e-12) {
              const Vec3 dg = (scale_eik * re / gnorm) * g;
              for (int k = 0; k < 6; ++k) {
                const double dpsi = ((k % 2 == 0) ? 1.0 : -1.0) * dg[k / 2] / (2.0 * delta);
                const VoxelRecord& prec =
                    map.voxel(loc[i].probe_voxel[(k / 2) * 2 + (k % 2)]);
                dLdp += eval_backward(map, dec, prec, probe_tw[k], probe_ws[k], dpsi, mask,
                                      acc, bwd);
              }
            }
          }
        }

        if (want_grads && (mask & kGradPose)) {
          acc.d_pose.head<3>() += dLdp;
          acc.d_pose.tail<3>() += p.cross(dLdp);
        }
      }
    } catch (const std::exception& e) {
      block_error[b] = e.what();
    }
  }

  for (const std::string& err : block_error) {
    if (!err.empty()) throw Error(err);
  }

  // Fixed-order reduction so results do not depend on scheduling.
  GradientBundle out;
  out.d_decoder.init_like(dec);
  std::unordered_map<int32_t, Eigen::VectorXd> emb_accum;
  double sum_free = 0.0, sum_surf = 0.0, sum_eik = 0.0;
  for (const BlockAccum& acc : blocks) {
    sum_free += acc.sum_free;
    sum_surf += acc.sum_surf;
    sum_eik += acc.sum_eik;
    if (!want_grads) continue;
    out.d_pose += acc.d_pose;
    if (acc.has_dec) out.d_decoder.add(acc.d_dec);
    for (const auto& [idx, vec] : acc.d_emb) {
      auto [it, inserted] = emb_accum.try_emplace(idx);
      if (inserted) it->second.setZero(map.emb_dim());
      it->second += vec;
    }
  }
  out.d_embeddings.assign(emb_accum.begin(), emb_accum.end());
  std::sort(out.d_embeddings.begin(), out.d_embeddings.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  out.loss.n_free = n_free;
  out.loss.n_surface = n_surf;
  out.loss.n_eikonal = n_eik;
  out.loss.n_skipped = n_skip;
  out.loss.free_space = n_free > 0 ? sum_free / n_free : 0.0;
  out.loss.sdf = n_surf > 0 ? sum_surf / n_surf : 0.0;
  out.loss.eikonal = n_eik > 0 ? sum_eik / n_eik : 0.0;
  if (params.combined_data_norm) {
    out.loss.total = (n_data > 0
                          ? (params.w_free * sum_free + params.w_sdf * sum_surf) / n_data
                          : 0.0) +
                     params.w_eik * out.loss.eikonal;
  } else {
    out.loss.total = params.w_free * out.loss.free_space + params.w_sdf * out.loss.sdf +
                     params.w_eik * out.loss.eikonal;
  }
  return out;
}

LossBreakdown batch_loss(const SampleBatch& batch, const VoxelMap& map, const Decoder& dec,
                         const PoseSE3& pose, const LossParams& params) {
  return batch_pass(batch, map, dec, pose, params, 0, true, false).loss;
}

GradientBundle backward(const SampleBatch& batch, const VoxelMap& map, const Decoder& dec,
                        const PoseSE3& pose, const LossParams& params, unsigned mask,
                        bool parallel) {
  return batch_pass(batch, map, dec, pose, params, mask, parallel, true);
}

}  // namespace lomap

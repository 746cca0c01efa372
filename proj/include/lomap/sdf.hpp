#pragma once

#include "lomap/decoder.hpp"
#include "lomap/pose.hpp"
#include "lomap/types.hpp"
#include "lomap/voxel_map.hpp"

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace lomap {

// ---------------------------------------------------------------------------
// Trilinear interpolation over one voxel

struct TriWeights {
  std::array<double, 8> w;         // z-fastest corner order, sum to 1
  std::array<Vec3, 8> dw_dp;       // derivative of each weight wrt world position
};

/// p must lie inside [aabb_min, aabb_min + size]^3 (closed). Throws otherwise.
TriWeights tri_weights(const Vec3& p, const Vec3& aabb_min, double voxel_size);

/// Spec-facing helper: feature = sum_i w_i e_i over the given 8 embeddings.
Eigen::VectorXd tri_interpolate(const Vec3& p, const std::array<Eigen::VectorXd, 8>& corners,
                                const Vec3& aabb_min, double voxel_size,
                                std::array<double, 8>* weights_out = nullptr);

// ---------------------------------------------------------------------------
// Field queries

/// Neural SDF at p, or nullopt when p lies outside every allocated voxel.
std::optional<double> query_sdf(const Vec3& p, const VoxelMap& map, const Decoder& dec);

/// Central finite differences of query_sdf, step delta per axis. nullopt when
/// any probe leaves the allocated region.
std::optional<Vec3> spatial_gradient(const Vec3& p, const VoxelMap& map, const Decoder& dec,
                                     double delta);

// ---------------------------------------------------------------------------
// Supervision targets and losses

/// Ground branch: (p_s - p) . n_p. Non-ground: signed ray distance depth - t.
double target_sdf(const Vec3& p_sample, const Vec3& endpoint, const Vec3* normal,
                  bool is_ground, double ray_t, double depth);

double loss_free_space(std::span<const double> psi, double truncation);
double loss_sdf(std::span<const double> psi, std::span<const double> phi);
double loss_eikonal(std::span<const Vec3> gradients);

// ---------------------------------------------------------------------------
// Sample batches and reverse-mode gradients

enum class Region { kFree, kSurface };

struct SamplePoint {
  Vec3 p_sensor = Vec3::Zero();  // sample position in the sensor frame (t * ray dir)
  double t = 0.0;                // ray parameter, meters
  double depth = 0.0;            // ray endpoint range, meters
  Region region = Region::kFree;
  bool is_ground = false;
  double target = 0.0;            // non-ground surface target (depth - t)
  Vec3 endpoint_world = Vec3::Zero();  // ground supervision anchors, frozen at batch build
  Vec3 normal_world = Vec3::UnitZ();
  int ray_id = -1;
};

struct SampleBatch {
  std::vector<SamplePoint> samples;
  int scan_index = 0;
};

struct LossParams {
  double w_sdf = 1.0;
  double w_free = 1.0;
  double w_eik = 0.02;
  double truncation = 0.3;
  double eik_delta = 0.02;  // meters
  // Apply the Eikonal term to every k-th sample only (1 = all). The probes
  // dominate evaluation cost; a strided subset regularizes just as well.
  int eik_every = 3;
  // Normalize the two data terms by the combined sample count instead of
  // per-term means. Free-space samples are scarce once ground rays carry the
  // ground-aware band; a per-term mean hands each of them an outsized weight
  // and biases the pose gradient.
  bool combined_data_norm = true;
};

struct LossBreakdown {
  double total = 0.0;
  double sdf = 0.0;
  double free_space = 0.0;
  double eikonal = 0.0;
  int n_free = 0;     // mapped free-space samples
  int n_surface = 0;  // mapped surface samples
  int n_eikonal = 0;  // surface samples with all six probes mapped
  int n_skipped = 0;  // samples outside the allocated region
};

struct GradientBundle {
  Vec6 d_pose = Vec6::Zero();  // translation-first tangent
  DecoderGrad d_decoder;
  std::vector<std::pair<int32_t, Eigen::VectorXd>> d_embeddings;  // sorted by vertex index
  LossBreakdown loss;
};

enum GradMask : unsigned {
  kGradPose = 1u,
  kGradEmbed = 2u,
  kGradDecoder = 4u,
  kGradAll = 7u,
};

/// Forward loss of the batch under the given pose. Samples whose position
/// (or, for the Eikonal term, any probe) falls outside the allocated region
/// are excluded from the corresponding mean.
LossBreakdown batch_loss(const SampleBatch& batch, const VoxelMap& map, const Decoder& dec,
                         const PoseSE3& pose, const LossParams& params);

/// Reverse-mode gradients of batch_loss. Pose gradients use the left
/// perturbation exp(xi) * T. Deterministic for any thread count: per-block
/// partials are reduced in fixed order.
GradientBundle backward(const SampleBatch& batch, const VoxelMap& map, const Decoder& dec,
                        const PoseSE3& pose, const LossParams& params,
                        unsigned mask = kGradAll, bool parallel = true);

}  // namespace lomap

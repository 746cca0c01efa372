#pragma once

#include "lomap/morton.hpp"
#include "lomap/paged_list.hpp"
#include "lomap/types.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lomap {

enum class EmbedInit { kZero, kUniform };
enum class HitCountMode { kPoints, kScans };

struct VoxelRecord {
  VoxelKey key;
  uint32_t hits = 0;
  int32_t created_scan = -1;
  int32_t last_hit_scan = -1;
  std::array<int32_t, 8> corner_emb{};  // embedding indices, z-fastest corner order
};

/// Sparse octree state stored flat: a voxel set with hit counts plus a
/// vertex-lattice embedding table addressed through a Morton look-up list.
/// Embeddings live on voxel corners and are shared between adjacent voxels.
class VoxelMap {
 public:
  struct Params {
    double voxel_size = 0.2;
    int emb_dim = 16;
    int64_t origin_offset = 1ll << 20;
    uint64_t lookup_mem_bytes = 1ull << 30;
    EmbedInit init = EmbedInit::kZero;
    double init_scale = 1e-4;
    HitCountMode hit_mode = HitCountMode::kPoints;
    uint64_t seed = 42;
  };

  VoxelMap() : VoxelMap(Params{}) {}
  explicit VoxelMap(const Params& params);

  /// Dynamic embedding generation: one gather over the look-up list, fresh
  /// consecutive indices for first occurrences of unvisited codes, one
  /// scatter back. No per-entry searches. Returns one index per input code.
  std::vector<int32_t> allocate_embeddings(std::span<const uint64_t> vertex_codes);

  /// Allocates the voxel of every point (with its 8 corner embeddings) or
  /// bumps its hit count. Returns N_v, the number of voxels created here.
  int insert_scan(std::span<const Vec3> world_points, int scan_index);

  struct CornerSet {
    std::array<int32_t, 8> emb;  // z-fastest binary corner order
    Vec3 aabb_min;
    Vec3 aabb_max;
  };
  /// Throws if the voxel is not allocated.
  CornerSet vertex_embeddings(const VoxelKey& key) const;

  /// -1 when the voxel is unallocated.
  int32_t voxel_index(const VoxelKey& key) const;
  const VoxelRecord& voxel(int32_t index) const { return voxels_[index]; }
  const std::vector<VoxelRecord>& voxels() const { return voxels_; }

  size_t embedding_count() const { return vertex_codes_.size(); }
  int emb_dim() const { return params_.emb_dim; }
  double voxel_size() const { return params_.voxel_size; }
  int64_t origin_offset() const { return params_.origin_offset; }
  const Params& params() const { return params_; }

  Eigen::Map<const Eigen::VectorXd> embedding(int32_t idx) const {
    return {embeddings_.data() + static_cast<size_t>(idx) * params_.emb_dim,
            params_.emb_dim};
  }
  Eigen::Map<Eigen::VectorXd> embedding(int32_t idx) {
    return {embeddings_.data() + static_cast<size_t>(idx) * params_.emb_dim,
            params_.emb_dim};
  }
  const std::vector<double>& embeddings() const { return embeddings_; }
  std::vector<double>& embeddings() { return embeddings_; }
  uint64_t vertex_code(int32_t emb_idx) const { return vertex_codes_[emb_idx]; }
  const std::vector<uint64_t>& vertex_codes() const { return vertex_codes_; }

  uint64_t voxel_code(const VoxelKey& key) const {
    return morton_encode(key, params_.origin_offset);
  }
  Vec3 voxel_min(const VoxelKey& key) const {
    return Vec3(key.x, key.y, key.z) * params_.voxel_size;
  }

  void save(const std::string& path) const;
  static VoxelMap load(const std::string& path);

 private:
  void init_new_embeddings(size_t count);

  Params params_;
  PagedIndexList vertex_lookup_;  // vertex Morton code -> embedding index
  PagedIndexList voxel_lookup_;   // voxel Morton code -> index into voxels_
  std::vector<VoxelRecord> voxels_;
  std::vector<uint64_t> vertex_codes_;  // embedding index -> vertex Morton code
  std::vector<double> embeddings_;      // flat, emb_dim per vertex
  uint64_t init_counter_ = 0;
};

}  // namespace lomap

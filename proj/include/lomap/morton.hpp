#pragma once

#include "lomap/types.hpp"

#include <cstdint>

namespace lomap {

/// Integer lattice coordinates, signed, relative to the world origin.
/// Used both for voxels and for the voxel-corner vertex lattice.
struct VoxelKey {
  int32_t x = 0;
  int32_t y = 0;
  int32_t z = 0;

  bool operator==(const VoxelKey&) const = default;
};

// 21 bits per axis after the origin offset: grid coords in [0, 2^21).
inline constexpr int kMortonBitsPerAxis = 21;
inline constexpr uint32_t kMortonAxisMax = (1u << kMortonBitsPerAxis) - 1;

// Spreads the low 21 bits of v so they occupy every third bit.
uint64_t morton_spread(uint32_t v);
uint32_t morton_compact(uint64_t v);

/// x occupies bits 0,3,6,..., y bits 1,4,7,..., z bits 2,5,8,...
inline uint64_t morton_encode_grid(uint32_t gx, uint32_t gy, uint32_t gz) {
  return morton_spread(gx) | (morton_spread(gy) << 1) | (morton_spread(gz) << 2);
}

inline void morton_decode_grid(uint64_t code, uint32_t& gx, uint32_t& gy, uint32_t& gz) {
  gx = morton_compact(code);
  gy = morton_compact(code >> 1);
  gz = morton_compact(code >> 2);
}

/// Applies the origin offset and encodes. Throws on out-of-range components.
uint64_t morton_encode(const VoxelKey& key, int64_t origin_offset);
VoxelKey morton_decode(uint64_t code, int64_t origin_offset);

/// floor(p / voxel_size) per component; boundary points go to the
/// higher-index voxel's lower face.
VoxelKey world_to_voxel(const Vec3& p, double voxel_size);

}  // namespace lomap

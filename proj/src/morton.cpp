#include "lomap/morton.hpp"

#include <cmath>

namespace lomap {

uint64_t morton_spread(uint32_t v) {
  uint64_t x = v & kMortonAxisMax;
  x = (x | (x << 32)) & 0x1f00000000ffffULL;
  x = (x | (x << 16)) & 0x1f0000ff0000ffULL;
  x = (x | (x << 8)) & 0x100f00f00f00f00fULL;
  x = (x | (x << 4)) & 0x10c30c30c30c30c3ULL;
  x = (x | (x << 2)) & 0x1249249249249249ULL;
  return x;
}

uint32_t morton_compact(uint64_t v) {
  uint64_t x = v & 0x1249249249249249ULL;
  x = (x | (x >> 2)) & 0x10c30c30c30c30c3ULL;
  x = (x | (x >> 4)) & 0x100f00f00f00f00fULL;
  x = (x | (x >> 8)) & 0x1f0000ff0000ffULL;
  x = (x | (x >> 16)) & 0x1f00000000ffffULL;
  x = (x | (x >> 32)) & 0x1fffffULL;
  return static_cast<uint32_t>(x);
}

uint64_t morton_encode(const VoxelKey& key, int64_t origin_offset) {
  const int64_t gx = static_cast<int64_t>(key.x) + origin_offset;
  const int64_t gy = static_cast<int64_t>(key.y) + origin_offset;
  const int64_t gz = static_cast<int64_t>(key.z) + origin_offset;
  if (gx < 0 || gy < 0 || gz < 0 || gx > kMortonAxisMax || gy > kMortonAxisMax ||
      gz > kMortonAxisMax) {
    throw Error("morton_encode: lattice coordinate out of range: (" + std::to_string(key.x) +
                ", " + std::to_string(key.y) + ", " + std::to_string(key.z) + ") with offset " +
                std::to_string(origin_offset));
  }
  return morton_encode_grid(static_cast<uint32_t>(gx), static_cast<uint32_t>(gy),
                            static_cast<uint32_t>(gz));
}

VoxelKey morton_decode(uint64_t code, int64_t origin_offset) {
  uint32_t gx, gy, gz;
  morton_decode_grid(code, gx, gy, gz);
  VoxelKey key;
  key.x = static_cast<int32_t>(static_cast<int64_t>(gx) - origin_offset);
  key.y = static_cast<int32_t>(static_cast<int64_t>(gy) - origin_offset);
  key.z = static_cast<int32_t>(static_cast<int64_t>(gz) - origin_offset);
  return key;
}

VoxelKey world_to_voxel(const Vec3& p, double voxel_size) {
  VoxelKey key;
  key.x = static_cast<int32_t>(std::floor(p.x() / voxel_size));
  key.y = static_cast<int32_t>(std::floor(p.y() / voxel_size));
  key.z = static_cast<int32_t>(std::floor(p.z() / voxel_size));
  return key;
}

}  // namespace lomap

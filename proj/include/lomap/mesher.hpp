#pragma once

#include "lomap/decoder.hpp"
#include "lomap/types.hpp"
#include "lomap/voxel_map.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace lomap {

/// SDF samples on the allocated-voxel corner lattice at grid pitch equal to
/// the voxel size. Cells are canonically sorted by Morton code.
struct SparseField {
  double voxel_size = 0.2;
  std::vector<double> values;                       // one sample per vertex
  std::vector<uint64_t> vertex_codes;               // Morton code per vertex
  std::vector<VoxelKey> cells;                      // allocated voxels, sorted
  std::vector<std::array<int32_t, 8>> cell_corners;  // z-fastest, into values
};

/// One decoder evaluation per allocated vertex (the trilinear weight is 1 at
/// a corner, so the corner SDF is exactly decode(embedding)).
SparseField query_grid(const VoxelMap& map, const Decoder& dec, bool parallel = true);

/// Standard 256-case marching cubes at the given iso level. Edge vertices are
/// deduplicated across cells; cells with any absent corner are skipped by
/// construction of the field. Output is independent of cell enumeration
/// order.
TriMesh marching_cubes(const SparseField& field, double iso = 0.0, bool parallel = true);

}  // namespace lomap

#include "lomap/mesher.hpp"

#include <Eigen/Geometry>

#include "lomap/morton.hpp"
#include "mc_tables.hpp"

#include <algorithm>
#include <unordered_map>

namespace lomap {

namespace {

// corner numbering used by the tables; offsets are (x, y, z)
constexpr int kCornerOffset[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                     {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
// maps table corner -> z-fastest storage index (x<<2 | y<<1 | z)
constexpr int kStorageCorner[8] = {0, 4, 6, 2, 1, 5, 7, 3};
constexpr int kEdgeCorners[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                     {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

struct EdgeKeyHash {
  size_t operator()(const std::pair<uint64_t, uint64_t>& k) const {
    uint64_t h = k.first * 0x9e3779b97f4a7c15ULL;
    h ^= k.second + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return static_cast<size_t>(h);
  }
};

}  // namespace

SparseField query_grid(const VoxelMap& map, const Decoder& dec, bool parallel) {
  SparseField field;
  field.voxel_size = map.voxel_size();
  field.vertex_codes = map.vertex_codes();
  field.values.resize(map.embedding_count());

#pragma omp parallel for schedule(static) if (parallel)
  for (int64_t i = 0; i < static_cast<int64_t>(field.values.size()); ++i) {
    field.values[i] = decode(dec, map.embedding(static_cast<int32_t>(i)), nullptr);
  }

  std::vector<std::pair<uint64_t, int32_t>> order;
  order.reserve(map.voxels().size());
  for (size_t i = 0; i < map.voxels().size(); ++i) {
    order.emplace_back(map.voxel_code(map.voxels()[i].key), static_cast<int32_t>(i));
  }
  std::sort(order.begin(), order.end());
  field.cells.reserve(order.size());
  field.cell_corners.reserve(order.size());
  for (const auto& [code, idx] : order) {
    field.cells.push_back(map.voxels()[idx].key);
    field.cell_corners.push_back(map.voxels()[idx].corner_emb);
  }
  return field;
}

TriMesh marching_cubes(const SparseField& field, double iso, bool parallel) {
  struct CellTri {
    std::array<std::pair<uint64_t, uint64_t>, 3> edge;  // canonical edge keys
    std::array<Vec3, 3> pos;
  };
  const int64_t n_cells = static_cast<int64_t>(field.cells.size());

  // canonical cell order, independent of the caller's enumeration
  std::vector<int32_t> order(n_cells);
  for (int64_t i = 0; i < n_cells; ++i) order[i] = static_cast<int32_t>(i);
  std::sort(order.begin(), order.end(), [&](int32_t a, int32_t b) {
    const VoxelKey& ka = field.cells[a];
    const VoxelKey& kb = field.cells[b];
    return std::tie(ka.x, ka.y, ka.z) < std::tie(kb.x, kb.y, kb.z);
  });

  std::vector<std::vector<CellTri>> cell_tris(n_cells);

#pragma omp parallel for schedule(static) if (parallel)
  for (int64_t ci = 0; ci < n_cells; ++ci) {
    const VoxelKey& key = field.cells[order[ci]];
    const auto& corners = field.cell_corners[order[ci]];

    double val[8];
    Vec3 pos[8];
    uint64_t code[8];
    int cube_index = 0;
    for (int b = 0; b < 8; ++b) {
      const int s = kStorageCorner[b];
      val[b] = field.values[corners[s]];
      code[b] = field.vertex_codes[corners[s]];
      pos[b] = Vec3(key.x + kCornerOffset[b][0], key.y + kCornerOffset[b][1],
                    key.z + kCornerOffset[b][2]) *
               field.voxel_size;
      if (val[b] < iso) cube_index |= 1 << b;
    }
    const int edges = mc::kEdgeTable[cube_index];
    if (edges == 0) continue;

    std::pair<uint64_t, uint64_t> edge_key[12];
    Vec3 edge_pos[12];
    for (int e = 0; e < 12; ++e) {
      if (!(edges & (1 << e))) continue;
      int a = kEdgeCorners[e][0], b = kEdgeCorners[e][1];
      if (code[a] > code[b]) std::swap(a, b);  // canonical orientation
      const double t = (iso - val[a]) / (val[b] - val[a]);
      edge_pos[e] = pos[a] + t * (pos[b] - pos[a]);
      edge_key[e] = {code[a], code[b]};
    }

    for (const int* tri = mc::kTriTable[cube_index]; *tri != -1; tri += 3) {
      CellTri ct;
      for (int k = 0; k < 3; ++k) {
        ct.edge[k] = edge_key[tri[k]];
        ct.pos[k] = edge_pos[tri[k]];
      }
      cell_tris[ci].push_back(ct);
    }
  }

  // Deterministic merge with shared-edge vertex dedup.
  TriMesh mesh;
  std::unordered_map<std::pair<uint64_t, uint64_t>, uint32_t, EdgeKeyHash> vertex_of;
  for (const auto& tris : cell_tris) {
    for (const CellTri& ct : tris) {
      std::array<uint32_t, 3> idx;
      for (int k = 0; k < 3; ++k) {
        auto [it, inserted] = vertex_of.try_emplace(ct.edge[k],
                                                    static_cast<uint32_t>(mesh.vertices.size()));
        if (inserted) mesh.vertices.push_back(ct.pos[k]);
        idx[k] = it->second;
      }
      if (idx[0] == idx[1] || idx[1] == idx[2] || idx[0] == idx[2]) continue;
      const Vec3 ab = mesh.vertices[idx[1]] - mesh.vertices[idx[0]];
      const Vec3 ac = mesh.vertices[idx[2]] - mesh.vertices[idx[0]];
      if (ab.cross(ac).squaredNorm() <= 0.0) continue;
      mesh.triangles.push_back(idx);
    }
  }
  return mesh;
}

}  // namespace lomap

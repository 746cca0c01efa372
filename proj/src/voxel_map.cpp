#include "lomap/voxel_map.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>

namespace lomap {

namespace {
// splitmix64, used to derive per-entry init streams from the map seed
uint64_t mix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

VoxelMap::VoxelMap(const Params& params)
    : params_(params),
      vertex_lookup_(params.lookup_mem_bytes),
      voxel_lookup_(params.lookup_mem_bytes) {
  if (params_.voxel_size <= 0) throw Error("VoxelMap: voxel_size must be > 0");
  if (params_.emb_dim <= 0) throw Error("VoxelMap: emb_dim must be > 0");
}

void VoxelMap::init_new_embeddings(size_t count) {
  const size_t dim = params_.emb_dim;
  if (params_.init == EmbedInit::kZero) {
    embeddings_.resize(embeddings_.size() + count * dim, 0.0);
    init_counter_ += count * dim;
    return;
  }
  embeddings_.reserve(embeddings_.size() + count * dim);
  for (size_t i = 0; i < count * dim; ++i) {
    const uint64_t h = mix(params_.seed ^ (init_counter_ + i));
    const double u = static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);  // [0,1)
    embeddings_.push_back((2.0 * u - 1.0) * params_.init_scale);
  }
  init_counter_ += count * dim;
}

std::vector<int32_t> VoxelMap::allocate_embeddings(std::span<const uint64_t> vertex_codes) {
  std::vector<int32_t> out(vertex_codes.size());
  if (vertex_codes.empty()) return out;

  uint64_t max_code = 0;
  for (uint64_t c : vertex_codes) max_code = std::max(max_code, c);
  vertex_lookup_.grow_to(max_code + 1);

  // Gather pass; reads are independent.
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < static_cast<int64_t>(vertex_codes.size()); ++i) {
    out[i] = vertex_lookup_.get(vertex_codes[i]);
  }

  // First occurrences of unvisited codes get consecutive fresh indices.
  const int32_t base = static_cast<int32_t>(vertex_codes_.size());
  int32_t fresh = 0;
  for (size_t i = 0; i < vertex_codes.size(); ++i) {
    if (out[i] >= 0) continue;
    int32_t idx = vertex_lookup_.get(vertex_codes[i]);
    if (idx < 0) {
      idx = base + fresh++;
      vertex_lookup_.set(vertex_codes[i], idx);
      vertex_codes_.push_back(vertex_codes[i]);
    }
    out[i] = idx;
  }
  init_new_embeddings(static_cast<size_t>(fresh));
  return out;
}

int VoxelMap::insert_scan(std::span<const Vec3> world_points, int scan_index) {
  std::vector<int32_t> new_voxels;
  for (const Vec3& p : world_points) {
    if (!finite(p)) throw Error("insert_scan: non-finite point");
    const VoxelKey key = world_to_voxel(p, params_.voxel_size);
    const uint64_t code = morton_encode(key, params_.origin_offset);
    voxel_lookup_.grow_to(code + 1);
    int32_t idx = voxel_lookup_.get(code);
    if (idx < 0) {
      idx = static_cast<int32_t>(voxels_.size());
      voxel_lookup_.set(code, idx);
      VoxelRecord rec;
      rec.key = key;
      rec.hits = 1;
      rec.created_scan = scan_index;
      rec.last_hit_scan = scan_index;
      voxels_.push_back(rec);
      new_voxels.push_back(idx);
    } else {
      VoxelRecord& rec = voxels_[idx];
      if (params_.hit_mode == HitCountMode::kPoints || rec.last_hit_scan != scan_index) {
        rec.hits += 1;
      }
      rec.last_hit_scan = scan_index;
    }
  }

  // One batched allocation over all corner vertices of the new voxels.
  std::vector<uint64_t> corner_codes;
  corner_codes.reserve(new_voxels.size() * 8);
  for (int32_t vi : new_voxels) {
    const VoxelKey& k = voxels_[vi].key;
    for (int c = 0; c < 8; ++c) {
      const VoxelKey vk{k.x + ((c >> 2) & 1), k.y + ((c >> 1) & 1), k.z + (c & 1)};
      corner_codes.push_back(morton_encode(vk, params_.origin_offset));
    }
  }
  const std::vector<int32_t> emb = allocate_embeddings(corner_codes);
  for (size_t i = 0; i < new_voxels.size(); ++i) {
    VoxelRecord& rec = voxels_[new_voxels[i]];
    for (int c = 0; c < 8; ++c) rec.corner_emb[c] = emb[i * 8 + c];
  }
  return static_cast<int>(new_voxels.size());
}

int32_t VoxelMap::voxel_index(const VoxelKey& key) const {
  const int64_t gx = key.x + params_.origin_offset;
  if (gx < 0 || gx > kMortonAxisMax) return -1;
  const int64_t gy = key.y + params_.origin_offset;
  if (gy < 0 || gy > kMortonAxisMax) return -1;
  const int64_t gz = key.z + params_.origin_offset;
  if (gz < 0 || gz > kMortonAxisMax) return -1;
  const uint64_t code = morton_encode_grid(gx, gy, gz);
  if (code >= voxel_lookup_.size()) return -1;
  return voxel_lookup_.get(code);
}

VoxelMap::CornerSet VoxelMap::vertex_embeddings(const VoxelKey& key) const {
  const int32_t idx = voxel_index(key);
  if (idx < 0) {
    throw Error("vertex_embeddings: voxel (" + std::to_string(key.x) + ", " +
                std::to_string(key.y) + ", " + std::to_string(key.z) + ") not allocated");
  }
  CornerSet cs;
  cs.emb = voxels_[idx].corner_emb;
  cs.aabb_min = voxel_min(key);
  cs.aabb_max = cs.aabb_min + Vec3::Constant(params_.voxel_size);
  return cs;
}

namespace {
constexpr char kMapMagic[8] = {'L', 'O', 'M', 'A', 'P', 'V', 'M', '1'};

template <typename T>
void write_pod(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
void read_pod(std::ifstream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
}
}  // namespace

void VoxelMap::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("VoxelMap::save: cannot open " + path);
  os.write(kMapMagic, sizeof(kMapMagic));
  write_pod(os, params_.voxel_size);
  write_pod(os, params_.origin_offset);
  const int32_t dim = params_.emb_dim;
  write_pod(os, dim);
  const uint64_t n_vert = vertex_codes_.size();
  const uint64_t n_vox = voxels_.size();
  write_pod(os, n_vert);
  write_pod(os, n_vox);
  os.write(reinterpret_cast<const char*>(vertex_codes_.data()), n_vert * sizeof(uint64_t));
  os.write(reinterpret_cast<const char*>(embeddings_.data()),
           embeddings_.size() * sizeof(double));
  for (const VoxelRecord& rec : voxels_) {
    const uint64_t code = morton_encode(rec.key, params_.origin_offset);
    write_pod(os, code);
    write_pod(os, rec.hits);
    write_pod(os, rec.created_scan);
  }
  if (!os) throw Error("VoxelMap::save: write failed for " + path);
}

VoxelMap VoxelMap::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("VoxelMap::load: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMapMagic, sizeof(magic)) != 0) {
    throw Error("VoxelMap::load: bad magic in " + path);
  }
  Params p;
  read_pod(is, p.voxel_size);
  read_pod(is, p.origin_offset);
  int32_t dim = 0;
  read_pod(is, dim);
  p.emb_dim = dim;
  uint64_t n_vert = 0, n_vox = 0;
  read_pod(is, n_vert);
  read_pod(is, n_vox);
  VoxelMap map(p);
  map.vertex_codes_.resize(n_vert);
  is.read(reinterpret_cast<char*>(map.vertex_codes_.data()), n_vert * sizeof(uint64_t));
  map.embeddings_.resize(n_vert * static_cast<size_t>(dim));
  is.read(reinterpret_cast<char*>(map.embeddings_.data()),
          map.embeddings_.size() * sizeof(double));
  uint64_t max_vcode = 0;
  for (uint64_t c : map.vertex_codes_) max_vcode = std::max(max_vcode, c);
  if (n_vert > 0) map.vertex_lookup_.grow_to(max_vcode + 1);
  for (uint64_t i = 0; i < n_vert; ++i) {
    map.vertex_lookup_.set(map.vertex_codes_[i], static_cast<int32_t>(i));
  }
  map.voxels_.reserve(n_vox);
  for (uint64_t i = 0; i < n_vox; ++i) {
    uint64_t code = 0;
    VoxelRecord rec;
    read_pod(is, code);
    read_pod(is, rec.hits);
    read_pod(is, rec.created_scan);
    rec.key = morton_decode(code, p.origin_offset);
    rec.last_hit_scan = rec.created_scan;
    for (int c = 0; c < 8; ++c) {
      const VoxelKey vk{rec.key.x + ((c >> 2) & 1), rec.key.y + ((c >> 1) & 1),
                        rec.key.z + (c & 1)};
      rec.corner_emb[c] = map.vertex_lookup_.get(morton_encode(vk, p.origin_offset));
      if (rec.corner_emb[c] < 0) throw Error("VoxelMap::load: missing corner vertex");
    }
    map.voxel_lookup_.grow_to(code + 1);
    map.voxel_lookup_.set(code, static_cast<int32_t>(i));
    map.voxels_.push_back(rec);
  }
  if (!is) throw Error("VoxelMap::load: truncated file " + path);
  return map;
}

}  // namespace lomap

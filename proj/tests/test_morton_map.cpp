#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lomap/morton.hpp"
#include "lomap/paged_list.hpp"
#include "lomap/voxel_map.hpp"
#include "reference/oracles.hpp"

#include <random>

using namespace lomap;

TEST_CASE("morton encoding matches the per-bit interleave oracle") {
  CHECK(morton_encode({0, 0, 0}, 0) == 0);
  CHECK(morton_encode({1, 1, 1}, 0) == 7);
  CHECK(morton_encode({3, 0, 0}, 0) == 9);

  std::mt19937_64 rng(7);
  std::uniform_int_distribution<uint32_t> dist(0, kMortonAxisMax);
  for (int i = 0; i < 2000; ++i) {
    const uint32_t x = dist(rng), y = dist(rng), z = dist(rng);
    CHECK(morton_encode_grid(x, y, z) == ref::morton_naive(x, y, z));
  }
}

TEST_CASE("morton round trip over a signed test box") {
  const int64_t offset = 1ll << 20;
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int32_t> dist(-(1 << 18), (1 << 18));
  for (int i = 0; i < 20000; ++i) {
    const VoxelKey key{dist(rng), dist(rng), dist(rng)};
    CHECK(morton_decode(morton_encode(key, offset), offset) == key);
  }
}

TEST_CASE("morton rejects out-of-range keys") {
  CHECK_THROWS_AS(morton_encode({-1, 0, 0}, 0), Error);
  CHECK_THROWS_AS(morton_encode({1 << 21, 0, 0}, 0), Error);
}

TEST_CASE("world_to_voxel floor convention") {
  CHECK(world_to_voxel({0.05, 0.05, 0.05}, 0.2) == VoxelKey{0, 0, 0});
  CHECK(world_to_voxel({-0.05, 0.0, 0.0}, 0.2) == VoxelKey{-1, 0, 0});
  CHECK(world_to_voxel({0.2, 0.2, 0.2}, 0.2) == VoxelKey{1, 1, 1});
}

TEST_CASE("paged list keeps dense semantics over sparse code ranges") {
  PagedIndexList list;
  list.grow_to(1ull << 40);
  CHECK(list.size() == 1ull << 40);
  CHECK(list.get(12345) == -1);
  CHECK(list.get((1ull << 40) - 1) == -1);
  list.set(1ull << 39, 42);
  CHECK(list.get(1ull << 39) == 42);
  CHECK(list.get((1ull << 39) + 1) == -1);
  CHECK(list.page_count() == 1);
  CHECK_THROWS_AS(list.get(1ull << 40), Error);
}

TEST_CASE("paged list memory ceiling errors out") {
  PagedIndexList list(PagedIndexList::kPageSize * sizeof(int32_t));  // one page only
  list.grow_to(1ull << 30);
  list.set(0, 1);
  CHECK_THROWS_AS(list.set(1ull << 29, 2), Error);
}

TEST_CASE("allocate_embeddings first-occurrence ordering") {
  VoxelMap map;
  const uint64_t codes[] = {2, 0, 2};
  const auto idx = map.allocate_embeddings(codes);
  CHECK(idx == std::vector<int32_t>{0, 1, 0});
  CHECK(map.embedding_count() == 2);

  // previously visited codes keep their indices, the table does not grow
  const auto again = map.allocate_embeddings(codes);
  CHECK(again == idx);
  CHECK(map.embedding_count() == 2);
}

TEST_CASE("allocate_embeddings equals the naive dictionary loop") {
  VoxelMap map;
  ref::NaiveAllocator naive;
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<uint64_t> code(0, 1 << 22);
  for (int batch = 0; batch < 20; ++batch) {
    std::vector<uint64_t> codes(10000);
    for (auto& c : codes) c = code(rng);
    CHECK(map.allocate_embeddings(codes) == naive.allocate(codes));
  }
  CHECK(map.embedding_count() == naive.dict.size());
}

TEST_CASE("insert_scan allocates endpoint voxels and counts N_v") {
  VoxelMap map;
  const Vec3 p(0.05, 0.05, 0.05);
  CHECK(map.insert_scan(std::vector<Vec3>{p}, 0) == 1);
  CHECK(map.embedding_count() == 8);

  // same point again: no new voxel, hit count 2
  CHECK(map.insert_scan(std::vector<Vec3>{p}, 1) == 0);
  const int32_t vi = map.voxel_index({0, 0, 0});
  REQUIRE(vi >= 0);
  CHECK(map.voxel(vi).hits == 2);
}

TEST_CASE("diagonally adjacent voxels share exactly one vertex") {
  VoxelMap map;
  const std::vector<Vec3> pts = {{0.1, 0.1, 0.1}, {0.3, 0.3, 0.3}};
  CHECK(map.insert_scan(pts, 0) == 2);
  CHECK(map.embedding_count() == 15);  // 8 + 8 - 1 shared corner
}

TEST_CASE("vertex sharing: corner handle equality across neighbors") {
  VoxelMap map;
  const std::vector<Vec3> pts = {{0.1, 0.1, 0.1}, {0.3, 0.3, 0.3}};
  map.insert_scan(pts, 0);
  const auto a = map.vertex_embeddings({0, 0, 0});
  const auto b = map.vertex_embeddings({1, 1, 1});
  CHECK(a.emb[7] == b.emb[0]);  // (1,1,1) corner of the first == (0,0,0) of the second
  CHECK(a.aabb_min == Vec3(0, 0, 0));
  CHECK(a.aabb_max == Vec3(0.2, 0.2, 0.2));
  CHECK_THROWS_AS(map.vertex_embeddings({5, 5, 5}), Error);
}

TEST_CASE("embedding table length equals distinct allocated vertex count") {
  VoxelMap map;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> coord(-2.0, 2.0);
  std::vector<Vec3> pts(500);
  for (auto& p : pts) p = Vec3(coord(rng), coord(rng), coord(rng));
  map.insert_scan(pts, 0);

  ref::NaiveAllocator naive;
  for (const VoxelRecord& rec : map.voxels()) {
    for (int c = 0; c < 8; ++c) {
      const VoxelKey vk{rec.key.x + ((c >> 2) & 1), rec.key.y + ((c >> 1) & 1),
                        rec.key.z + (c & 1)};
      const uint64_t code = morton_encode(vk, map.origin_offset());
      naive.allocate(std::span<const uint64_t>(&code, 1));
    }
  }
  CHECK(map.embedding_count() == naive.dict.size());
}

TEST_CASE("re-running insert_scan is a no-op for N_v") {
  VoxelMap map;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> coord(-3.0, 3.0);
  std::vector<Vec3> pts(300);
  for (auto& p : pts) p = Vec3(coord(rng), coord(rng), coord(rng));
  CHECK(map.insert_scan(pts, 0) > 0);
  CHECK(map.insert_scan(pts, 1) == 0);
}

TEST_CASE("scans hit-count mode counts each scan once per voxel") {
  VoxelMap::Params params;
  params.hit_mode = HitCountMode::kScans;
  VoxelMap map(params);
  const std::vector<Vec3> pts = {{0.1, 0.1, 0.1}, {0.11, 0.11, 0.11}, {0.12, 0.1, 0.1}};
  map.insert_scan(pts, 0);
  const int32_t vi = map.voxel_index({0, 0, 0});
  REQUIRE(vi >= 0);
  CHECK(map.voxel(vi).hits == 1);
  map.insert_scan(pts, 1);
  CHECK(map.voxel(vi).hits == 2);
}

TEST_CASE("map checkpoint round trip") {
  VoxelMap::Params params;
  params.init = EmbedInit::kUniform;
  VoxelMap map(params);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  std::vector<Vec3> pts(100);
  for (auto& p : pts) p = Vec3(coord(rng), coord(rng), coord(rng));
  map.insert_scan(pts, 0);

  const std::string path = "map_roundtrip.ckpt";
  map.save(path);
  const VoxelMap loaded = VoxelMap::load(path);
  REQUIRE(loaded.embedding_count() == map.embedding_count());
  REQUIRE(loaded.voxels().size() == map.voxels().size());
  CHECK(loaded.embeddings() == map.embeddings());
  for (size_t i = 0; i < map.voxels().size(); ++i) {
    const int32_t li = loaded.voxel_index(map.voxels()[i].key);
    REQUIRE(li >= 0);
    CHECK(loaded.voxel(li).hits == map.voxels()[i].hits);
    CHECK(loaded.voxel(li).corner_emb == map.voxels()[i].corner_emb);
  }
  std::remove(path.c_str());
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lomap/sampler.hpp"
#include "reference/oracles.hpp"

#include <random>
#include <unordered_map>

using namespace lomap;

namespace {

LabeledScan scan_of(const std::vector<Vec3>& pts) {
  LabeledScan ls;
  ls.non_ground = pts;
  return ls;
}

}  // namespace

TEST_CASE("select_rays: empty map raises the zero-eligible error") {
  VoxelMap map;
  const LabeledScan ls = scan_of({{1, 0, 0}, {0, 1, 0}});
  CHECK_THROWS_WITH_AS(select_rays(ls, PoseSE3{}, map, 8, 2, -1, 1),
                       doctest::Contains("no eligible rays"), Error);
}

TEST_CASE("select_rays: all endpoints eligible and n >= scan size returns all rays") {
  VoxelMap map;
  std::vector<Vec3> pts = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  map.insert_scan(pts, 0);
  map.insert_scan(pts, 1);  // hit counts 2 >= M_n
  const auto rays = select_rays(scan_of(pts), PoseSE3{}, map, 100, 2, -1, 1);
  CHECK(rays.size() == 3);
  for (const Ray& r : rays) {
    CHECK(r.dir_sensor.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.depth == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("select_rays honors the hit-count threshold, tallied naively") {
  VoxelMap map;
  std::vector<Vec3> twice = {{1, 0, 0}};
  std::vector<Vec3> thrice = {{0, 1, 0}};
  map.insert_scan(twice, 0);
  map.insert_scan(twice, 1);
  map.insert_scan(thrice, 0);
  map.insert_scan(thrice, 1);
  map.insert_scan(thrice, 2);

  // naive per-voxel tally
  std::unordered_map<uint64_t, int> tally;
  tally[map.voxel_code(world_to_voxel(twice[0], 0.2))] = 2;
  tally[map.voxel_code(world_to_voxel(thrice[0], 0.2))] = 3;

  const LabeledScan ls = scan_of({{1, 0, 0}, {0, 1, 0}});
  const auto rays = select_rays(ls, PoseSE3{}, map, 10, 3, -1, 1);
  REQUIRE(rays.size() == 1);
  CHECK(rays[0].endpoint_w.isApprox(Vec3(0, 1, 0), 1e-12));
  for (const Ray& r : rays) {
    const uint64_t code = map.voxel_code(world_to_voxel(r.endpoint_w, 0.2));
    CHECK(tally.at(code) >= 3);
  }
}

TEST_CASE("select_rays: newly created voxels are eligible only when allowed") {
  VoxelMap map;
  std::vector<Vec3> pts = {{1, 0, 0}};
  map.insert_scan(pts, 7);  // hits == 1 < M_n
  const LabeledScan ls = scan_of(pts);
  CHECK_THROWS_AS(select_rays(ls, PoseSE3{}, map, 4, 2, -1, 1), Error);
  const auto rays = select_rays(ls, PoseSE3{}, map, 4, 2, /*allow_new_scan=*/7, 1);
  CHECK(rays.size() == 1);
}

TEST_CASE("select_rays subset is deterministic under the seed") {
  VoxelMap map;
  std::vector<Vec3> pts;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  for (int i = 0; i < 200; ++i) pts.push_back(Vec3(uni(rng), uni(rng), uni(rng)));
  map.insert_scan(pts, 0);
  map.insert_scan(pts, 1);
  const LabeledScan ls = scan_of(pts);
  const auto a = select_rays(ls, PoseSE3{}, map, 50, 2, -1, 42);
  const auto b = select_rays(ls, PoseSE3{}, map, 50, 2, -1, 42);
  REQUIRE(a.size() == 50);
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].point_index == b[i].point_index);
}

TEST_CASE("ray_voxel_intersections: single-voxel hand case") {
  VoxelMap map;
  map.insert_scan(std::vector<Vec3>{{0.1, 0.1, 0.1}}, 0);  // voxel (0,0,0)
  const auto ivs =
      ray_voxel_intersections(Vec3(-0.1, 0.1, 0.1), Vec3(1, 0, 0), map, 10.0);
  REQUIRE(ivs.size() == 1);
  CHECK(ivs[0].t_enter == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(ivs[0].t_exit == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(ivs[0].key == VoxelKey{0, 0, 0});
}

TEST_CASE("ray_voxel_intersections: miss and origin-inside cases") {
  VoxelMap map;
  map.insert_scan(std::vector<Vec3>{{0.1, 0.1, 0.1}}, 0);
  CHECK(ray_voxel_intersections(Vec3(0, 0, 5), Vec3(1, 0, 0), map, 10.0).empty());

  const auto ivs = ray_voxel_intersections(Vec3(0.1, 0.1, 0.1), Vec3(0, 0, 1), map, 10.0);
  REQUIRE(ivs.size() == 1);
  CHECK(ivs[0].t_enter == 0.0);
  CHECK(ivs[0].t_exit == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("ray_voxel_intersections equals the brute-force slab oracle") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  VoxelMap map;
  std::vector<Vec3> pts;
  for (int i = 0; i < 300; ++i) pts.push_back(Vec3(uni(rng), uni(rng), uni(rng)));
  map.insert_scan(pts, 0);

  for (int trial = 0; trial < 300; ++trial) {
    const Vec3 origin(uni(rng), uni(rng), uni(rng));
    Vec3 dir(uni(rng), uni(rng), uni(rng));
    if (dir.norm() < 1e-6) continue;
    dir.normalize();
    const double t_max = 2.0 + 2.0 * std::abs(uni(rng));

    const auto got = ray_voxel_intersections(origin, dir, map, t_max);
    const auto want = ref::brute_force_intersections(origin, dir, map, t_max);
    REQUIRE(got.size() == want.size());
    for (size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].key == want[i].key);
      CHECK(std::abs(got[i].t_enter - want[i].t_enter) < 1e-9);
      CHECK(std::abs(got[i].t_exit - want[i].t_exit) < 1e-9);
      if (i > 0) CHECK(got[i].t_enter >= got[i - 1].t_exit - 1e-12);
    }
  }
}

TEST_CASE("sample_points: spacing, regions and the clip rule") {
  Ray ray;
  ray.dir_sensor = Vec3(1, 0, 0);
  ray.dir_w = Vec3(1, 0, 0);
  ray.depth = 10.0;
  ray.point_index = 0;

  SUBCASE("five interior points on a 0.2 interval at spacing 0.04") {
    const RayInterval iv{0.0, 0.2, VoxelKey{0, 0, 0}};
    SampleBatch batch;
    sample_points(ray, std::span<const RayInterval>(&iv, 1), 0.2, 0.2, 0.3, false, 1, batch);
    REQUIRE(batch.samples.size() == 5);
    for (int j = 0; j < 5; ++j) {
      CHECK(batch.samples[j].t == doctest::Approx(0.02 + 0.04 * j).epsilon(1e-12));
      CHECK(batch.samples[j].region == Region::kFree);
    }
  }

  SUBCASE("surface region and target near the endpoint") {
    const RayInterval iv{9.88, 9.92, VoxelKey{49, 0, 0}};
    SampleBatch batch;
    sample_points(ray, std::span<const RayInterval>(&iv, 1), 0.2, 0.2, 0.3, false, 1, batch);
    REQUIRE(batch.samples.size() == 1);
    CHECK(batch.samples[0].t == doctest::Approx(9.9).epsilon(1e-12));
    CHECK(batch.samples[0].region == Region::kSurface);
    CHECK(batch.samples[0].target == doctest::Approx(0.1).epsilon(1e-9));
  }

  SUBCASE("nothing beyond depth + truncation") {
    const RayInterval iv{10.25, 10.4, VoxelKey{51, 0, 0}};
    SampleBatch batch;
    sample_points(ray, std::span<const RayInterval>(&iv, 1), 0.2, 0.2, 0.3, false, 1, batch);
    for (const SamplePoint& s : batch.samples) CHECK(s.t <= 10.3);
  }
}

TEST_CASE("sample_points: stratified jitter stays inside its stratum") {
  Ray ray;
  ray.dir_sensor = Vec3(0, 1, 0);
  ray.dir_w = Vec3(0, 1, 0);
  ray.depth = 5.0;
  const RayInterval iv{1.0, 2.0, VoxelKey{0, 5, 0}};
  SampleBatch a, b;
  sample_points(ray, std::span<const RayInterval>(&iv, 1), 0.5, 0.2, 0.3, true, 9, a);
  sample_points(ray, std::span<const RayInterval>(&iv, 1), 0.5, 0.2, 0.3, true, 9, b);
  REQUIRE(a.samples.size() == 10);
  for (size_t j = 0; j < a.samples.size(); ++j) {
    CHECK(a.samples[j].t >= 1.0 + 0.1 * j);
    CHECK(a.samples[j].t < 1.0 + 0.1 * (j + 1));
    CHECK(a.samples[j].t == b.samples[j].t);  // deterministic under the seed
  }
}

TEST_CASE("build_batch: every sample lies inside an allocated voxel") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  VoxelMap map;
  std::vector<Vec3> pts;
  for (int i = 0; i < 400; ++i) pts.push_back(Vec3(uni(rng), uni(rng), uni(rng)));
  map.insert_scan(pts, 0);
  map.insert_scan(pts, 1);

  LabeledScan ls = scan_of(pts);
  const auto rays = select_rays(ls, PoseSE3{}, map, 64, 2, -1, 5);
  const SampleBatch batch = build_batch(rays, map, 0.2, 0.3, true, 0, 5);
  REQUIRE(!batch.samples.empty());
  for (const SamplePoint& s : batch.samples) {
    CHECK(map.voxel_index(world_to_voxel(s.p_sensor, map.voxel_size())) >= 0);
    CHECK(s.t <= s.depth + 0.3 + 1e-12);
    if (s.t < s.depth - 0.3) {
      CHECK(s.region == Region::kFree);
    } else {
      CHECK(s.region == Region::kSurface);
    }
  }
}

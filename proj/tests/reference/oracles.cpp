#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lomap::ref {

uint64_t morton_naive(uint32_t x, uint32_t y, uint32_t z) {
  uint64_t code = 0;
  for (int b = 0; b < 21; ++b) {
    code |= static_cast<uint64_t>((x >> b) & 1u) << (3 * b);
    code |= static_cast<uint64_t>((y >> b) & 1u) << (3 * b + 1);
    code |= static_cast<uint64_t>((z >> b) & 1u) << (3 * b + 2);
  }
  return code;
}

std::optional<std::pair<double, double>> slab_intersect(const Vec3& bmin, const Vec3& bmax,
                                                        const Vec3& origin, const Vec3& dir,
                                                        double t_max) {
  double t0 = 0.0, t1 = t_max;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(dir[a]) < 1e-15) {
      if (origin[a] < bmin[a] || origin[a] >= bmax[a]) return std::nullopt;
      continue;
    }
    double lo = (bmin[a] - origin[a]) / dir[a];
    double hi = (bmax[a] - origin[a]) / dir[a];
    if (lo > hi) std::swap(lo, hi);
    t0 = std::max(t0, lo);
    t1 = std::min(t1, hi);
  }
  if (t0 >= t1) return std::nullopt;
  return std::make_pair(t0, t1);
}

std::vector<RayInterval> brute_force_intersections(const Vec3& origin, const Vec3& dir,
                                                   const VoxelMap& map, double t_max) {
  std::vector<RayInterval> out;
  for (const VoxelRecord& rec : map.voxels()) {
    const Vec3 bmin = map.voxel_min(rec.key);
    const Vec3 bmax = bmin + Vec3::Constant(map.voxel_size());
    const auto hit = slab_intersect(bmin, bmax, origin, dir, t_max);
    if (hit) out.push_back({hit->first, hit->second, rec.key});
  }
  std::sort(out.begin(), out.end(),
            [](const RayInterval& a, const RayInterval& b) { return a.t_enter < b.t_enter; });
  return out;
}

double decode_naive(const Decoder& dec, const std::vector<double>& feature) {
  const int hidden = dec.hidden_dim();
  const int in = dec.in_dim();
  double y = dec.b2;
  for (int h = 0; h < hidden; ++h) {
    double pre = dec.b1[h];
    for (int i = 0; i < in; ++i) pre += dec.w1(h, i) * feature[i];
    if (pre > 0) y += dec.w2[h] * pre;
  }
  return y;
}

double loss_free_naive(const std::vector<double>& psi, double tr) {
  if (psi.empty()) return 0.0;
  double s = 0.0;
  for (double v : psi) s += (v - tr) * (v - tr);
  return s / static_cast<double>(psi.size());
}

double loss_sdf_naive(const std::vector<double>& psi, const std::vector<double>& phi) {
  if (psi.empty()) return 0.0;
  double s = 0.0;
  for (size_t i = 0; i < psi.size(); ++i) s += (psi[i] - phi[i]) * (psi[i] - phi[i]);
  return s / static_cast<double>(psi.size());
}

double loss_eikonal_naive(const std::vector<Vec3>& grads) {
  if (grads.empty()) return 0.0;
  double s = 0.0;
  for (const Vec3& g : grads) {
    const double n = std::sqrt(g.x() * g.x() + g.y() * g.y() + g.z() * g.z());
    s += (n - 1.0) * (n - 1.0);
  }
  return s / static_cast<double>(grads.size());
}

double nn_brute(const Vec3& q, const std::vector<Vec3>& pts) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& p : pts) best = std::min(best, (p - q).norm());
  return best;
}

}  // namespace lomap::ref

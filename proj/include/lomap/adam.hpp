#pragma once

#include "lomap/decoder.hpp"
#include "lomap/sdf.hpp"
#include "lomap/voxel_map.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace lomap {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam over a dense parameter vector.
class AdamDense {
 public:
  AdamDense() = default;
  explicit AdamDense(Eigen::Index size, AdamConfig cfg = {}) : cfg_(cfg) {
    m_.setZero(size);
    v_.setZero(size);
  }

  void reset() {
    m_.setZero();
    v_.setZero();
    t_ = 0;
  }

  /// Returns the update (lr * mhat / (sqrt(vhat) + eps)); lr may vary per
  /// component.
  Eigen::ArrayXd step(const Eigen::ArrayXd& grad, const Eigen::ArrayXd& lr) {
    ++t_;
    m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
    v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.square();
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    return lr * (m_ / bc1) / ((v_ / bc2).sqrt() + cfg_.eps);
  }
  Eigen::ArrayXd step(const Eigen::ArrayXd& grad, double lr) {
    return step(grad, Eigen::ArrayXd::Constant(grad.size(), lr));
  }

 private:
  AdamConfig cfg_;
  Eigen::ArrayXd m_, v_;
  int64_t t_ = 0;
};

/// Adam over the sparse embedding table; moments grow with the table and
/// per-vertex step counters drive the bias correction.
class EmbedAdam {
 public:
  explicit EmbedAdam(AdamConfig cfg = {}) : cfg_(cfg) {}

  void apply(VoxelMap& map, const std::vector<std::pair<int32_t, Eigen::VectorXd>>& grads,
             double lr);

 private:
  AdamConfig cfg_;
  std::vector<double> m_, v_;
  std::vector<uint32_t> t_;
};

/// Adam over all decoder parameters.
class DecoderAdam {
 public:
  explicit DecoderAdam(AdamConfig cfg = {}) : cfg_(cfg) {}
  void apply(Decoder& dec, const DecoderGrad& grad, double lr);

 private:
  void ensure(const Decoder& dec);
  AdamConfig cfg_;
  AdamDense w1_, b1_, w2_, b2_;
  bool ready_ = false;
};

}  // namespace lomap

#include "lomap/adam.hpp"

#include <cmath>

namespace lomap {

void EmbedAdam::apply(VoxelMap& map, const std::vector<std::pair<int32_t, Eigen::VectorXd>>& grads,
                      double lr) {
  const int dim = map.emb_dim();
  const size_t need = map.embedding_count() * static_cast<size_t>(dim);
  if (m_.size() < need) {
    m_.resize(need, 0.0);
    v_.resize(need, 0.0);
    t_.resize(map.embedding_count(), 0);
  }
  for (const auto& [idx, g] : grads) {
    const size_t base = static_cast<size_t>(idx) * dim;
    const uint32_t t = ++t_[idx];
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t));
    auto emb = map.embedding(idx);
    for (int k = 0; k < dim; ++k) {
      double& m = m_[base + k];
      double& v = v_[base + k];
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g[k];
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g[k] * g[k];
      emb[k] -= lr * (m / bc1) / (std::sqrt(v / bc2) + cfg_.eps);
    }
  }
}

void DecoderAdam::ensure(const Decoder& dec) {
  if (ready_) return;
  w1_ = AdamDense(dec.w1.size(), cfg_);
  b1_ = AdamDense(dec.b1.size(), cfg_);
  w2_ = AdamDense(dec.w2.size(), cfg_);
  b2_ = AdamDense(1, cfg_);
  ready_ = true;
}

void DecoderAdam::apply(Decoder& dec, const DecoderGrad& grad, double lr) {
  ensure(dec);
  using Eigen::ArrayXd;
  const ArrayXd dw1 = Eigen::Map<const ArrayXd>(grad.w1.data(), grad.w1.size());
  Eigen::Map<ArrayXd>(dec.w1.data(), dec.w1.size()) -= w1_.step(dw1, lr);
  Eigen::Map<ArrayXd>(dec.b1.data(), dec.b1.size()) -= b1_.step(grad.b1.array(), lr);
  Eigen::Map<ArrayXd>(dec.w2.data(), dec.w2.size()) -= w2_.step(grad.w2.array(), lr);
  ArrayXd gb2(1);
  gb2[0] = grad.b2;
  dec.b2 -= b2_.step(gb2, lr)[0];
}

}  // namespace lomap

#pragma once

#include "lomap/types.hpp"

#include <Eigen/Core>

#include <string>

namespace lomap {

/// Two fully connected layers, ReLU in between, scalar output in meters.
struct Decoder {
  Eigen::MatrixXd w1;  // hidden x in
  Eigen::VectorXd b1;  // hidden
  Eigen::VectorXd w2;  // hidden
  double b2 = 0.0;

  int in_dim() const { return static_cast<int>(w1.cols()); }
  int hidden_dim() const { return static_cast<int>(w1.rows()); }

  /// Uniform +-1/sqrt(fan_in) for weights and biases.
  static Decoder init(int in, int hidden, uint64_t seed);

  void save(const std::string& path) const;
  static Decoder load(const std::string& path);
};

struct DecoderTrace {
  Eigen::VectorXd pre;  // hidden pre-activations
};

double decode(const Decoder& dec, const Eigen::VectorXd& feature, DecoderTrace* trace = nullptr);

struct DecoderGrad {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::VectorXd w2;
  double b2 = 0.0;

  void init_like(const Decoder& dec);
  void add(const DecoderGrad& other);
  void set_zero();
  bool empty() const { return w1.size() == 0; }
};

/// Accumulates parameter gradients for upstream derivative dy and returns
/// dL/dfeature. `grad` may be null when only the feature gradient is needed.
Eigen::VectorXd decode_backward(const Decoder& dec, const Eigen::VectorXd& feature,
                                const DecoderTrace& trace, double dy, DecoderGrad* grad);

}  // namespace lomap

#include "lomap/decoder.hpp"

#include <cstring>
#include <fstream>
#include <random>

namespace lomap {

Decoder Decoder::init(int in, int hidden, uint64_t seed) {
  if (in <= 0 || hidden <= 0) throw Error("Decoder::init: dimensions must be positive");
  Decoder dec;
  std::mt19937_64 rng(seed);
  auto uniform = [&rng](double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    return dist(rng);
  };
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(in));
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  dec.w1.resize(hidden, in);
  dec.b1.resize(hidden);
  dec.w2.resize(hidden);
  for (int r = 0; r < hidden; ++r) {
    for (int c = 0; c < in; ++c) dec.w1(r, c) = uniform(bound1);
  }
  for (int r = 0; r < hidden; ++r) dec.b1(r) = uniform(bound1);
  for (int r = 0; r < hidden; ++r) dec.w2(r) = uniform(bound2);
  dec.b2 = uniform(bound2);
  return dec;
}

double decode(const Decoder& dec, const Eigen::VectorXd& feature, DecoderTrace* trace) {
  Eigen::VectorXd pre = dec.w1 * feature + dec.b1;
  const double y = dec.w2.dot(pre.cwiseMax(0.0)) + dec.b2;
  if (trace) trace->pre = std::move(pre);
  return y;
}

void DecoderGrad::init_like(const Decoder& dec) {
  w1.setZero(dec.w1.rows(), dec.w1.cols());
  b1.setZero(dec.b1.size());
  w2.setZero(dec.w2.size());
  b2 = 0.0;
}

void DecoderGrad::add(const DecoderGrad& other) {
  w1 += other.w1;
  b1 += other.b1;
  w2 += other.w2;
  b2 += other.b2;
}

void DecoderGrad::set_zero() {
  w1.setZero();
  b1.setZero();
  w2.setZero();
  b2 = 0.0;
}

Eigen::VectorXd decode_backward(const Decoder& dec, const Eigen::VectorXd& feature,
                                const DecoderTrace& trace, double dy, DecoderGrad* grad) {
  const Eigen::VectorXd post = trace.pre.cwiseMax(0.0);
  Eigen::VectorXd dh = (dy * dec.w2.array() * (trace.pre.array() > 0.0).cast<double>()).matrix();
  if (grad) {
    grad->w2.noalias() += dy * post;
    grad->b2 += dy;
    grad->w1.noalias() += dh * feature.transpose();
    grad->b1 += dh;
  }
  return dec.w1.transpose() * dh;
}

namespace {
constexpr char kDecMagic[8] = {'L', 'O', 'M', 'A', 'P', 'D', 'C', '1'};
}

void Decoder::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("Decoder::save: cannot open " + path);
  os.write(kDecMagic, sizeof(kDecMagic));
  const int32_t in = in_dim(), hidden = hidden_dim();
  os.write(reinterpret_cast<const char*>(&in), sizeof(in));
  os.write(reinterpret_cast<const char*>(&hidden), sizeof(hidden));
  os.write(reinterpret_cast<const char*>(w1.data()), sizeof(double) * w1.size());
  os.write(reinterpret_cast<const char*>(b1.data()), sizeof(double) * b1.size());
  os.write(reinterpret_cast<const char*>(w2.data()), sizeof(double) * w2.size());
  os.write(reinterpret_cast<const char*>(&b2), sizeof(double));
  if (!os) throw Error("Decoder::save: write failed for " + path);
}

Decoder Decoder::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("Decoder::load: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kDecMagic, sizeof(magic)) != 0) {
    throw Error("Decoder::load: bad magic in " + path);
  }
  int32_t in = 0, hidden = 0;
  is.read(reinterpret_cast<char*>(&in), sizeof(in));
  is.read(reinterpret_cast<char*>(&hidden), sizeof(hidden));
  if (in <= 0 || hidden <= 0) throw Error("Decoder::load: bad dimensions in " + path);
  Decoder dec;
  dec.w1.resize(hidden, in);
  dec.b1.resize(hidden);
  dec.w2.resize(hidden);
  is.read(reinterpret_cast<char*>(dec.w1.data()), sizeof(double) * dec.w1.size());
  is.read(reinterpret_cast<char*>(dec.b1.data()), sizeof(double) * dec.b1.size());
  is.read(reinterpret_cast<char*>(dec.w2.data()), sizeof(double) * dec.w2.size());
  is.read(reinterpret_cast<char*>(&dec.b2), sizeof(double));
  if (!is) throw Error("Decoder::load: truncated file " + path);
  return dec;
}

}  // namespace lomap

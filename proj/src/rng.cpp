#include "diet/rng.hpp"

#include <stdexcept>

namespace diet {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

RngStream substream(RngStream parent, std::uint64_t id) {
  return RngStream{parent.seed, splitmix64(parent.stream ^ splitmix64(id))};
}

namespace {

std::mt19937_64 make_engine(RngStream key) {
  std::seed_seq seq{static_cast<std::uint32_t>(key.seed & 0xFFFFFFFFull),
                    static_cast<std::uint32_t>(key.seed >> 32),
                    static_cast<std::uint32_t>(key.stream & 0xFFFFFFFFull),
                    static_cast<std::uint32_t>(key.stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

Rng::Rng(RngStream key) : key_(key), engine_(make_engine(key)) {}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform_open() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("Rng::uniform: requires lo < hi");
  return lo + (hi - lo) * uniform();
}

std::uint64_t Rng::uniform_int(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::uniform_int: n must be positive");
  if ((n & (n - 1)) == 0) return next_u64() & (n - 1);  // power of two
  std::uint64_t mask = n - 1;
  mask |= mask >> 1;
  mask |= mask >> 2;
  mask |= mask >> 4;
  mask |= mask >> 8;
  mask |= mask >> 16;
  mask |= mask >> 32;
  for (;;) {
    const std::uint64_t draw = next_u64() & mask;
    if (draw < n) return draw;
  }
}

double Rng::normal() { return normal_quantile(uniform_open()); }

double Rng::normal(double mean, double stdev) {
  if (stdev < 0.0) throw std::invalid_argument("Rng::normal: stdev must be non-negative");
  return mean + stdev * normal();
}

Vector Rng::normal_vector(Index n) {
  Vector out(n);
  for (Index i = 0; i < n; ++i) out[i] = normal();
  return out;
}

Matrix Rng::normal_matrix(Index rows, Index cols) {
  Matrix out(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) out(i, j) = normal();
  }
  return out;
}

double Rng::exponential() { return -std::log(1.0 - uniform()); }

Index Rng::categorical(const Eigen::Ref<const Vector>& weights) {
  if (weights.size() == 0) throw std::invalid_argument("Rng::categorical: empty weights");
  double total = 0.0;
  for (Index i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) throw std::invalid_argument("Rng::categorical: negative weight");
    total += weights[i];
  }
  if (!(total > 0.0)) throw std::invalid_argument("Rng::categorical: weights sum to zero");
  const double u = uniform() * total;
  double acc = 0.0;
  for (Index i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  return weights.size() - 1;  // guard against accumulated rounding
}

double Rng::rademacher() { return (next_u64() & 1ull) ? 1.0 : -1.0; }

std::vector<Index> Rng::permutation(Index n) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  shuffle(idx);
  return idx;
}

}  // namespace diet

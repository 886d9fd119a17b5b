#include "cplds/params.hpp"

#include <cmath>
#include <stdexcept>

namespace cplds {

namespace {

// ceil(log_{1+delta} n), computed as the smallest g with (1+delta)^g >= n.
// Avoids platform-dependent rounding of log()/log() near integer results.
uint32_t ceil_log_base(uint64_t n, double delta) {
  uint32_t g = 0;
  double p = 1.0;
  const double base = 1.0 + delta;
  while (p < static_cast<double>(n)) {
    p *= base;
    ++g;
  }
  return g;
}

}  // namespace

uint32_t LevelParams::group_of(uint32_t level) const {
  if (level >= num_levels) throw std::logic_error("group_of: level out of range");
  return level / levels_per_group;
}

double LevelParams::coreness_estimate(uint32_t level) const {
  if (level >= num_levels) throw std::logic_error("coreness_estimate: level out of range");
  const uint32_t q = (level + 1) / levels_per_group;
  const uint32_t e = q > 0 ? q - 1 : 0;
  return std::pow(1.0 + delta, static_cast<double>(e));
}

double LevelParams::upper_bound(uint32_t group) const {
  return (2.0 + 3.0 / lambda) * std::pow(1.0 + delta, static_cast<double>(group));
}

double LevelParams::lower_bound(uint32_t group) const {
  return std::pow(1.0 + delta, static_cast<double>(group));
}

LevelParams make_params(uint64_t n, double delta, double lambda) {
  if (n < 2) throw std::invalid_argument("make_params: n must be >= 2");
  if (delta <= 0.0) throw std::invalid_argument("make_params: delta must be > 0");
  if (lambda <= 0.0) throw std::invalid_argument("make_params: lambda must be > 0");
  LevelParams p;
  p.n = n;
  p.delta = delta;
  p.lambda = lambda;
  p.num_groups = ceil_log_base(n, delta);
  p.levels_per_group = 4 * p.num_groups;
  p.num_levels = p.levels_per_group * p.num_groups;
  p.theoretical_factor = (2.0 + 3.0 / lambda) * (1.0 + delta);
  return p;
}

}  // namespace cplds

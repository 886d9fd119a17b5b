#pragma once

#include <cstdint>
#include <vector>

namespace cplds {

using vertex_id = uint32_t;

// Level-structure parameterization derived from (n, delta, lambda).
// Levels 0..num_levels-1 are partitioned into num_groups groups of
// levels_per_group contiguous levels each.
struct LevelParams {
  uint64_t n = 0;
  double delta = 0.0;
  double lambda = 0.0;
  uint32_t levels_per_group = 0;  // 4 * ceil(log_{1+delta} n)
  uint32_t num_groups = 0;        // ceil(log_{1+delta} n)
  uint32_t num_levels = 0;        // K = levels_per_group * num_groups
  // (2 + 3/lambda)(1 + delta); the two-sided approximation factor.
  double theoretical_factor = 0.0;

  uint32_t group_of(uint32_t level) const;

  // (1+delta)^{max(floor((level+1)/levels_per_group) - 1, 0)}
  double coreness_estimate(uint32_t level) const;

  // Degree upper bound for a vertex whose level lies in `group`:
  // (2 + 3/lambda)(1+delta)^group.
  double upper_bound(uint32_t group) const;

  // Degree lower bound (1+delta)^group.
  double lower_bound(uint32_t group) const;
};

// Comparisons against the real-valued bounds use this guard: an integer
// degree d satisfies "d <= bound" when d <= bound + kBoundGuard, and
// "d >= bound" when d >= bound - kBoundGuard. The bounds are irrational
// for the default knobs, so the guard is inert there.
inline constexpr double kBoundGuard = 1e-9;

// Throws std::invalid_argument for n < 2 or non-positive knobs.
LevelParams make_params(uint64_t n, double delta, double lambda);

}  // namespace cplds

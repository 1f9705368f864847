#ifndef ASCLTSIM_CONDITIONS_HPP
#define ASCLTSIM_CONDITIONS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ascltsim/covariance.hpp"
#include "ascltsim/grid.hpp"
#include "ascltsim/levels.hpp"

namespace ascltsim {

// Block counts k_n and separation lengths m_n per axis:
//   m_{n_i} = ceil(ln n_i),  k_{n_i} = max(1, floor(sqrt(n_i / m_{n_i}))).
// Satisfies k -> inf and k m / n -> 0 along n -> inf.
struct BlockParameters {
  int k1 = 1, k2 = 1;  // block counts
  int m1 = 1, m2 = 1;  // separation lengths
};

BlockParameters block_parameters(GridSize n);

inline constexpr std::int64_t kPairCap = 10'000'000;

// Policy for pair sums that exceed the cap: error out (with a hint), or
// fall back to deterministic systematic subsampling of the canonical pair
// enumeration (every stride-th pair, rescaled).
enum class PairCapPolicy { error, subsample };

struct BermanSumResult {
  double value = 0.0;
  bool subsampled = false;
};

// Normal-comparison sum over i in R_k, j in R_n, i <= j (componentwise),
// i != j:
//   sum |r_ij| exp(-(u_{k,i}^2 + u_{n,j}^2) / (2 (1 + |r_ij|))).
// Stationary models with constant-mode schedules collapse the sum over lags
// and never subsample.
BermanSumResult berman_sum(const CorrelationModel& model, const LevelSchedule& schedule,
                           GridSize k, GridSize n,
                           PairCapPolicy policy = PairCapPolicy::error,
                           std::int64_t pair_cap = kPairCap);

struct BermanSupResult {
  double sup = 0.0;
  double scaled = 0.0;  // sup * (log n1 log n2)^{1+eps}
  bool subsampled = false;
  std::vector<GridSize> probe;  // the k values actually probed
};

// Sup of berman_sum over a probe set of k values; defaults to the dyadic
// grid k_a = (ceil(n1/2^a), ceil(n2/2^a)).
BermanSupResult berman_sup(const CorrelationModel& model, const LevelSchedule& schedule,
                           GridSize n, double epsilon,
                           const std::vector<GridSize>& probe = {},
                           PairCapPolicy policy = PairCapPolicy::subsample,
                           std::int64_t pair_cap = kPairCap);

// Anti-clustering sum over an index set I:
//   k1 k2 * sum over ordered pairs i != j in I of P(X_i > u_{n,i}, X_j > u_{n,j}).
// I must lie in the family E(u): sum_{i in I} P(X_i > u_{n,i}) at most
// (1/(k1 k2)) sum_{i <= n} P(X_i > u_{n,i}).
double dprime_sum(const CorrelationModel& model, const LevelSchedule& schedule, GridSize n,
                  const BlockParameters& params, const std::vector<Site>& block,
                  std::int64_t pair_cap = kPairCap);

// Rectangle [1..b1] x [1..b2] with b_i = ceil(n_i / k_i), shrunk one row or
// column at a time until the E(u) mass constraint holds (the ceilings can
// overshoot it slightly).
GridSize default_dprime_block(const LevelSchedule& schedule, GridSize n,
                              const BlockParameters& params);

// dprime_sum over the default block; stationary constant-mode inputs use a
// lag-collapsed evaluation.
double dprime_sum_default(const CorrelationModel& model, const LevelSchedule& schedule,
                          GridSize n, const BlockParameters& params, GridSize* block_out = nullptr);

struct GapEstimate {
  double gap = 0.0;       // |P(joint) - prod P(rect)|
  double stderr_ = 0.0;   // binomial (joint) + delta-method (product), in quadrature
  double joint = 0.0;     // P-hat of the intersection
  double product = 0.0;   // product of per-rectangle P-hats
  int reps = 0;
};

// Monte Carlo estimate of the asymptotic-independence gap for maxima over
// disjoint rectangles, at the schedule's levels u_{n,i}.
GapEstimate rectangle_independence_gap(const CorrelationModel& model,
                                       const LevelSchedule& schedule, GridSize n,
                                       const std::vector<Rect>& partition, int reps,
                                       std::uint64_t seed);

// Evenly split R_n into rows x cols disjoint rectangles.
std::vector<Rect> grid_partition(GridSize n, int rows, int cols);

struct ConditionReport {
  GridSize n;
  double epsilon = 0.0;
  BlockParameters params;
  std::optional<BermanSupResult> berman;
  std::optional<double> dprime_value;
  GridSize dprime_block{0, 0};
  std::optional<GapEstimate> gap;
};

// JSON with keys: berman_sup, berman_scaled, epsilon, dprime_value, block,
// k_n, m_n, gap, gap_stderr, subsampled.
std::string condition_report_json(const ConditionReport& report);

// The "<<" asymptotic reported as a trend: diverging when the values are
// strictly increasing across the final three (or more) ladder points.
bool scaled_trend_diverging(const std::vector<double>& scaled, int window = 3);

}  // namespace ascltsim

#endif

#include "ascltsim/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "ascltsim/field_sim.hpp"
#include "ascltsim/normal.hpp"
#include "ascltsim/rng.hpp"

namespace ascltsim {

BlockParameters block_parameters(GridSize n) {
  if (n.n1 < 3 || n.n2 < 3) {
    throw DomainError("block_parameters: needs n >= 3x3, got " + to_string(n));
  }
  BlockParameters p;
  p.m1 = static_cast<int>(std::ceil(std::log(static_cast<double>(n.n1))));
  p.m2 = static_cast<int>(std::ceil(std::log(static_cast<double>(n.n2))));
  p.k1 = std::max(1, static_cast<int>(std::floor(std::sqrt(n.n1 / static_cast<double>(p.m1)))));
  p.k2 = std::max(1, static_cast<int>(std::floor(std::sqrt(n.n2 / static_cast<double>(p.m2)))));
  return p;
}

// ---------------------------------------------------------------------------
// Berman / normal-comparison sums
// ---------------------------------------------------------------------------

namespace {

bool constant_stationary(const CorrelationModel& model, const LevelSchedule& schedule) {
  return model.stationary() && schedule.mode() == LevelSchedule::Mode::constant;
}

// Lag-collapsed sum: pairs (i, i+d) with i in R_k, i+d in R_n, d >= 0,
// d != 0 have count min(k1, n1-d1) * min(k2, n2-d2).
double berman_sum_lag(const CorrelationModel& model, double u_k, double u_n, GridSize k,
                      GridSize n) {
  double sum = 0.0;
  for (int d1 = 0; d1 < n.n1; ++d1) {
    const double c1 = std::min(k.n1, n.n1 - d1);
    for (int d2 = (d1 == 0) ? 1 : 0; d2 < n.n2; ++d2) {
      const double c2 = std::min(k.n2, n.n2 - d2);
      const double r = model.correlation_lag(d1, d2);
      if (r == 0.0) continue;
      sum += c1 * c2 * normal_comparison_term(u_k, u_n, r);
    }
  }
  return sum;
}

std::int64_t berman_pair_count(GridSize k, GridSize n) {
  // #{(i,j): i in R_k, j in R_n, i <= j} = A1 * A2, minus the diagonal.
  const std::int64_t a1 =
      static_cast<std::int64_t>(k.n1) * n.n1 - static_cast<std::int64_t>(k.n1) * (k.n1 - 1) / 2;
  const std::int64_t a2 =
      static_cast<std::int64_t>(k.n2) * n.n2 - static_cast<std::int64_t>(k.n2) * (k.n2 - 1) / 2;
  return a1 * a2 - k.sites();
}

}  // namespace

BermanSumResult berman_sum(const CorrelationModel& model, const LevelSchedule& schedule,
                           GridSize k, GridSize n, PairCapPolicy policy,
                           std::int64_t pair_cap) {
  if (!k.positive() || !leq(k, n)) {
    throw DomainError("berman_sum: requires 1 <= k <= n, got k=" + to_string(k) +
                      " n=" + to_string(n));
  }
  if (!leq(n, schedule.grid())) {
    throw DomainError("berman_sum: n exceeds schedule grid " + to_string(schedule.grid()));
  }
  if (const auto dom = model.domain(); dom && !leq(n, *dom)) {
    throw DomainError("berman_sum: n exceeds model domain " + to_string(*dom));
  }

  if (constant_stationary(model, schedule)) {
    return {berman_sum_lag(model, schedule.base_level(k), schedule.base_level(n), k, n), false};
  }

  const std::int64_t pairs = berman_pair_count(k, n);
  std::int64_t stride = 1;
  bool subsampled = false;
  if (pairs > pair_cap) {
    if (policy == PairCapPolicy::error) {
      throw SizeError("berman_sum: " + std::to_string(pairs) + " pairs exceed cap " +
                      std::to_string(pair_cap) +
                      "; rerun with subsampling enabled or probe a smaller k");
    }
    stride = (pairs + pair_cap - 1) / pair_cap;
    subsampled = true;
  }

  const double base_k = schedule.base_level(k);
  const double base_n = schedule.base_level(n);
  const bool offset = schedule.mode() == LevelSchedule::Mode::offset;

  double sum = 0.0;
  std::int64_t index = 0;
  for (int i1 = 1; i1 <= k.n1; ++i1) {
    for (int i2 = 1; i2 <= k.n2; ++i2) {
      const double u_i = offset ? base_k + schedule.offsets()(i1, i2) : base_k;
      for (int j1 = i1; j1 <= n.n1; ++j1) {
        for (int j2 = i2; j2 <= n.n2; ++j2) {
          if (j1 == i1 && j2 == i2) continue;
          if (index++ % stride != 0) continue;
          const double r = model.correlation({i1, i2}, {j1, j2});
          if (r == 0.0) continue;
          const double u_j = offset ? base_n + schedule.offsets()(j1, j2) : base_n;
          sum += normal_comparison_term(u_i, u_j, r);
        }
      }
    }
  }
  return {sum * static_cast<double>(stride), subsampled};
}

BermanSupResult berman_sup(const CorrelationModel& model, const LevelSchedule& schedule,
                           GridSize n, double epsilon, const std::vector<GridSize>& probe,
                           PairCapPolicy policy, std::int64_t pair_cap) {
  if (!(epsilon > 0.0)) throw ConfigError("berman_sup: epsilon must be > 0");
  BermanSupResult result;
  if (probe.empty()) {
    for (int a = 0;; ++a) {
      const GridSize k{(n.n1 + (1 << a) - 1) >> a, (n.n2 + (1 << a) - 1) >> a};
      result.probe.push_back(k);
      if (k.n1 == 1 && k.n2 == 1) break;
    }
  } else {
    result.probe = probe;
  }
  for (GridSize k : result.probe) {
    const BermanSumResult r = berman_sum(model, schedule, k, n, policy, pair_cap);
    result.sup = std::max(result.sup, r.value);
    result.subsampled = result.subsampled || r.subsampled;
  }
  const double logs = std::log(static_cast<double>(n.n1)) * std::log(static_cast<double>(n.n2));
  result.scaled = result.sup * std::pow(logs, 1.0 + epsilon);
  return result;
}

// ---------------------------------------------------------------------------
// D' anti-clustering sum
// ---------------------------------------------------------------------------

namespace {

double block_mass_limit(const LevelSchedule& schedule, GridSize n, const BlockParameters& params) {
  return schedule.exceedance_mass(n) /
         (static_cast<double>(params.k1) * static_cast<double>(params.k2));
}

void check_block_mass(const LevelSchedule& schedule, GridSize n, const BlockParameters& params,
                      double block_mass) {
  const double limit = block_mass_limit(schedule, n, params);
  if (block_mass > limit * (1.0 + 1e-12)) {
    throw DomainError(
        "dprime_sum: block mass " + std::to_string(block_mass) + " exceeds the E(u) bound " +
        std::to_string(limit) + " = total mass / (k1 k2); shrink the block");
  }
}

}  // namespace

GridSize default_dprime_block(const LevelSchedule& schedule, GridSize n,
                              const BlockParameters& params) {
  int b1 = (n.n1 + params.k1 - 1) / params.k1;
  int b2 = (n.n2 + params.k2 - 1) / params.k2;
  const double limit = block_mass_limit(schedule, n, params);
  const double base_n = schedule.base_level(n);
  const bool offset = schedule.mode() == LevelSchedule::Mode::offset;

  auto mass = [&](int c1, int c2) {
    if (!offset) return c1 * static_cast<double>(c2) * std_normal_sf(base_n);
    double s = 0.0;
    for (int i1 = 1; i1 <= c1; ++i1) {
      for (int i2 = 1; i2 <= c2; ++i2) {
        s += std_normal_sf(base_n + schedule.offsets()(i1, i2));
      }
    }
    return s;
  };

  // The ceilings can push the block mass slightly above tau/(k1 k2);
  // trim the longer side until the constraint holds.
  while ((b1 > 1 || b2 > 1) && mass(b1, b2) > limit * (1.0 + 1e-12)) {
    if (b1 >= b2) {
      --b1;
    } else {
      --b2;
    }
  }
  return GridSize{b1, b2};
}

double dprime_sum(const CorrelationModel& model, const LevelSchedule& schedule, GridSize n,
                  const BlockParameters& params, const std::vector<Site>& block,
                  std::int64_t pair_cap) {
  if (block.empty()) throw DomainError("dprime_sum: block must not be empty");
  if (!leq(n, schedule.grid())) {
    throw DomainError("dprime_sum: n exceeds schedule grid " + to_string(schedule.grid()));
  }
  const GridSize sched_n = n;
  std::set<std::pair<int, int>> dedup;
  double block_mass = 0.0;
  for (Site s : block) {
    if (!sched_n.contains(s)) {
      throw DomainError("dprime_sum: block site outside R_n");
    }
    if (!dedup.emplace(s.i1, s.i2).second) {
      throw DomainError("dprime_sum: duplicate block site");
    }
    block_mass += std_normal_sf(schedule.level(n, s));
  }
  check_block_mass(schedule, n, params, block_mass);

  const std::int64_t m = static_cast<std::int64_t>(block.size());
  if (m * (m - 1) > pair_cap) {
    throw SizeError("dprime_sum: " + std::to_string(m * (m - 1)) + " ordered pairs exceed cap " +
                    std::to_string(pair_cap));
  }

  double sum = 0.0;
  for (std::size_t a = 0; a < block.size(); ++a) {
    const double u_a = schedule.level(n, block[a]);
    for (std::size_t b = a + 1; b < block.size(); ++b) {
      const double u_b = schedule.level(n, block[b]);
      const double r = model.correlation(block[a], block[b]);
      // both ordered pairs (a,b) and (b,a); the joint tail is symmetric
      sum += 2.0 * static_cast<double>(bivariate_upper_orthant(u_a, u_b, r));
    }
  }
  return static_cast<double>(params.k1) * params.k2 * sum;
}

double dprime_sum_default(const CorrelationModel& model, const LevelSchedule& schedule,
                          GridSize n, const BlockParameters& params, GridSize* block_out) {
  const GridSize b = default_dprime_block(schedule, n, params);
  if (block_out != nullptr) *block_out = b;

  if (constant_stationary(model, schedule)) {
    const double u = schedule.base_level(n);
    // ordered pairs at lag d have count (b1-|d1|)(b2-|d2|); the orthant is
    // symmetric in the lag sign for stationary models.
    double sum = 0.0;
    for (int d1 = -(b.n1 - 1); d1 < b.n1; ++d1) {
      for (int d2 = -(b.n2 - 1); d2 < b.n2; ++d2) {
        if (d1 == 0 && d2 == 0) continue;
        const double count =
            static_cast<double>(b.n1 - std::abs(d1)) * (b.n2 - std::abs(d2));
        const double r = model.correlation_lag(std::abs(d1), std::abs(d2));
        sum += count * static_cast<double>(bivariate_upper_orthant(u, u, r));
      }
    }
    return static_cast<double>(params.k1) * params.k2 * sum;
  }

  std::vector<Site> sites;
  sites.reserve(static_cast<std::size_t>(b.sites()));
  for (int i1 = 1; i1 <= b.n1; ++i1) {
    for (int i2 = 1; i2 <= b.n2; ++i2) sites.push_back({i1, i2});
  }
  return dprime_sum(model, schedule, n, params, sites);
}

// ---------------------------------------------------------------------------
// Proposition-style independence gap
// ---------------------------------------------------------------------------

std::vector<Rect> grid_partition(GridSize n, int rows, int cols) {
  if (rows < 1 || cols < 1 || rows > n.n1 || cols > n.n2) {
    throw DomainError("grid_partition: invalid partition shape");
  }
  std::vector<Rect> rects;
  for (int r = 0; r < rows; ++r) {
    const int lo1 = r * n.n1 / rows + 1;
    const int hi1 = (r + 1) * n.n1 / rows;
    for (int c = 0; c < cols; ++c) {
      const int lo2 = c * n.n2 / cols + 1;
      const int hi2 = (c + 1) * n.n2 / cols;
      rects.push_back(Rect{lo1, hi1, lo2, hi2});
    }
  }
  return rects;
}

GapEstimate rectangle_independence_gap(const CorrelationModel& model,
                                       const LevelSchedule& schedule, GridSize n,
                                       const std::vector<Rect>& partition, int reps,
                                       std::uint64_t seed) {
  if (reps < 100) throw DomainError("rectangle_independence_gap: reps must be >= 100");
  if (partition.empty()) throw DomainError("rectangle_independence_gap: empty partition");
  if (!leq(n, schedule.grid())) {
    throw DomainError("rectangle_independence_gap: n exceeds schedule grid");
  }
  for (std::size_t a = 0; a < partition.size(); ++a) {
    const Rect& r = partition[a];
    if (!r.valid() || r.hi1 > n.n1 || r.hi2 > n.n2) {
      throw DomainError("rectangle_independence_gap: rectangle outside R_n");
    }
    for (std::size_t b = a + 1; b < partition.size(); ++b) {
      if (r.overlaps(partition[b])) {
        throw DomainError("rectangle_independence_gap: rectangles overlap");
      }
    }
  }

  const auto draw = make_default_sampler(model, n);
  const double base = schedule.base_level(n);
  const bool offset = schedule.mode() == LevelSchedule::Mode::offset;

  std::vector<std::int64_t> rect_hits(partition.size(), 0);
  std::int64_t joint_hits = 0;
  for (int rep = 0; rep < reps; ++rep) {
    const FieldRealization f = draw(derive_rep_seed(seed, static_cast<std::uint64_t>(rep)));
    bool joint = true;
    for (std::size_t p = 0; p < partition.size(); ++p) {
      const Rect& r = partition[p];
      bool ok = true;
      for (int i1 = r.lo1; ok && i1 <= r.hi1; ++i1) {
        for (int i2 = r.lo2; i2 <= r.hi2; ++i2) {
          const double u = offset ? base + schedule.offsets()(i1, i2) : base;
          if (f.values(i1, i2) > u) {
            ok = false;
            break;
          }
        }
      }
      rect_hits[p] += ok ? 1 : 0;
      joint = joint && ok;
    }
    joint_hits += joint ? 1 : 0;
  }

  GapEstimate est;
  est.reps = reps;
  est.joint = static_cast<double>(joint_hits) / reps;
  est.product = 1.0;
  double prod_var = 0.0;  // delta-method variance of the product
  for (std::size_t p = 0; p < partition.size(); ++p) {
    est.product *= static_cast<double>(rect_hits[p]) / reps;
  }
  for (std::size_t p = 0; p < partition.size(); ++p) {
    const double ph = static_cast<double>(rect_hits[p]) / reps;
    double others = 1.0;
    for (std::size_t q = 0; q < partition.size(); ++q) {
      if (q != p) others *= static_cast<double>(rect_hits[q]) / reps;
    }
    prod_var += others * others * ph * (1.0 - ph) / reps;
  }
  const double joint_var = est.joint * (1.0 - est.joint) / reps;
  est.gap = std::abs(est.joint - est.product);
  est.stderr_ = std::sqrt(joint_var + prod_var);
  return est;
}

// ---------------------------------------------------------------------------

std::string condition_report_json(const ConditionReport& report) {
  nlohmann::json j;
  j["n"] = {report.n.n1, report.n.n2};
  j["epsilon"] = report.epsilon;
  j["k_n"] = {report.params.k1, report.params.k2};
  j["m_n"] = {report.params.m1, report.params.m2};
  if (report.berman) {
    j["berman_sup"] = report.berman->sup;
    j["berman_scaled"] = report.berman->scaled;
    j["subsampled"] = report.berman->subsampled;
  } else {
    j["berman_sup"] = nullptr;
    j["berman_scaled"] = nullptr;
    j["subsampled"] = false;
  }
  if (report.dprime_value) {
    j["dprime_value"] = *report.dprime_value;
    j["block"] = {report.dprime_block.n1, report.dprime_block.n2};
  } else {
    j["dprime_value"] = nullptr;
    j["block"] = nullptr;
  }
  if (report.gap) {
    j["gap"] = report.gap->gap;
    j["gap_stderr"] = report.gap->stderr_;
  } else {
    j["gap"] = nullptr;
    j["gap_stderr"] = nullptr;
  }
  return j.dump(2);
}

bool scaled_trend_diverging(const std::vector<double>& scaled, int window) {
  if (window < 2) window = 2;
  if (static_cast<int>(scaled.size()) < window) return false;
  for (std::size_t i = scaled.size() - static_cast<std::size_t>(window);
       i + 1 < scaled.size(); ++i) {
    if (!(scaled[i + 1] > scaled[i])) return false;
  }
  return true;
}

}  // namespace ascltsim

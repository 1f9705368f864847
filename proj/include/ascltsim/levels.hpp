#ifndef ASCLTSIM_LEVELS_HPP
#define ASCLTSIM_LEVELS_HPP

#include <optional>
#include <string>

#include "ascltsim/grid.hpp"

namespace ascltsim {

// Quantile clamp floor: boundary_level saturates once 1 - tau/(n1 n2) leaves
// [p_floor, 1 - p_floor]. Levels in the clamped regime sit so low (or high)
// that the corresponding no-exceedance indicators are almost surely 0 (or 1).
inline constexpr double kLevelClampFloor = 1e-12;

// u with n1 n2 (1 - Phi(u)) = tau, clamped as above.
double boundary_level(int n1, int n2, double tau);

// First-order comparator u_n ~ sqrt(2 log(n1 n2)); requires n1 n2 >= 2.
double asymptotic_level(int n1, int n2);

// Triangular level array u_{k,i} = base(k) + delta_i for every k <= n,
// with base(k) calibrated so that sum_{i<=k} (1 - Phi(u_{k,i})) = tau.
// Constant mode (no offsets) has base(k) = boundary_level(k1,k2,tau) and the
// calibration is exact by construction whenever no clamping occurs.
class LevelSchedule {
 public:
  enum class Mode { constant, offset };

  static LevelSchedule constant(GridSize n, double tau);
  // offsets must be defined on R_n with max |delta| <= offset_bound.
  static LevelSchedule with_offsets(GridSize n, double tau, Grid<double> offsets,
                                    double offset_bound = 1.0);

  GridSize grid() const { return n_; }
  double tau() const { return tau_; }
  Mode mode() const { return mode_; }
  const Grid<double>& offsets() const { return offsets_; }
  double offset_inf_norm() const { return offset_inf_norm_; }

  // Calibrated base level at evaluation size k (k <= n). O(1)-ish in
  // constant mode; offset mode runs the root solve over R_k on each call.
  double base_level(GridSize k) const;
  double base_level(Site k) const { return base_level(GridSize{k.i1, k.i2}); }

  // u_{k,i}
  double level(GridSize k, Site i) const;

  // sum_{i<=k} (1 - Phi(u_{k,i}))
  double exceedance_mass(GridSize k) const;

  // Base levels for every k <= upto in one pass (the hot path for the
  // indicator stream).
  Grid<double> materialize_base(GridSize upto) const;

 private:
  LevelSchedule(GridSize n, double tau, Mode mode, Grid<double> offsets, double inf_norm)
      : n_(n), tau_(tau), mode_(mode), offsets_(std::move(offsets)), offset_inf_norm_(inf_norm) {}

  double calibrate(GridSize k) const;

  GridSize n_;
  double tau_;
  Mode mode_;
  Grid<double> offsets_;  // empty in constant mode
  double offset_inf_norm_ = 0.0;
};

// lambda_n = min_{i <= n} u_{n,i}
double lambda_min(const LevelSchedule& schedule, GridSize n);

// CSV `i1,i2,delta` covering every site of n exactly once.
Grid<double> load_offsets_csv(const std::string& path, GridSize n);

// CSV `k1,k2,base_level,mass` for every k <= upto.
void write_schedule_summary_csv(const LevelSchedule& schedule, GridSize upto,
                                const std::string& path);

}  // namespace ascltsim

#endif

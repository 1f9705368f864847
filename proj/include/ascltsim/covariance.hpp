#ifndef ASCLTSIM_COVARIANCE_HPP
#define ASCLTSIM_COVARIANCE_HPP

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ascltsim/grid.hpp"

namespace ascltsim {

// ---------------------------------------------------------------------------
// Dominating sequences: rho_lag with |r_{i,j}| <= rho_{|i-j|}, declared per
// model so the decay-condition checker can probe them.
// ---------------------------------------------------------------------------

class DominatingSequence {
 public:
  virtual ~DominatingSequence() = default;
  // lag (l1,l2) >= (0,0), not both zero.
  virtual double value(int l1, int l2) const = 0;
  virtual std::string id() const = 0;
};

class ZeroSequence final : public DominatingSequence {
 public:
  double value(int, int) const override { return 0.0; }
  std::string id() const override { return "zero"; }
};

class FunctionSequence final : public DominatingSequence {
 public:
  FunctionSequence(std::function<double(int, int)> fn, std::string id)
      : fn_(std::move(fn)), id_(std::move(id)) {}
  double value(int l1, int l2) const override { return fn_(l1, l2); }
  std::string id() const override { return id_; }

 private:
  std::function<double(int, int)> fn_;
  std::string id_;
};

// ---------------------------------------------------------------------------
// Correlation models on Z_+^2
// ---------------------------------------------------------------------------

class CorrelationModel {
 public:
  virtual ~CorrelationModel() = default;

  // r_{a,b}; validates the sites against the model's domain when it has one.
  virtual double correlation(Site a, Site b) const = 0;

  virtual bool stationary() const = 0;

  // Stationary models only: r at absolute lag (l1,l2) >= (0,0).
  virtual double correlation_lag(int l1, int l2) const;

  // ExplicitGrid models are only defined on their declared grid.
  virtual std::optional<GridSize> domain() const { return std::nullopt; }

  // Declared |r| bound, when the model carries one.
  virtual const DominatingSequence* dominating_sequence() const { return nullptr; }

  virtual std::string id() const = 0;
};

class IidModel final : public CorrelationModel {
 public:
  double correlation(Site a, Site b) const override { return a == b ? 1.0 : 0.0; }
  bool stationary() const override { return true; }
  double correlation_lag(int l1, int l2) const override {
    return (l1 == 0 && l2 == 0) ? 1.0 : 0.0;
  }
  const DominatingSequence* dominating_sequence() const override { return &zero_; }
  std::string id() const override { return "iid"; }

 private:
  ZeroSequence zero_;
};

// r(lag) = rho1(|l1|) * rho2(|l2|) with rho_i(0) = 1, |rho_i| <= 1.
// Dominating sequence defaults to |rho1(l1) rho2(l2)|.
class SeparableStationaryModel final : public CorrelationModel {
 public:
  using AxisSequence = std::function<double(int)>;

  SeparableStationaryModel(AxisSequence rho1, AxisSequence rho2, std::string id);

  double correlation(Site a, Site b) const override;
  bool stationary() const override { return true; }
  double correlation_lag(int l1, int l2) const override;
  const DominatingSequence* dominating_sequence() const override { return dom_.get(); }
  std::string id() const override { return id_; }

 private:
  AxisSequence rho1_, rho2_;
  std::string id_;
  std::unique_ptr<DominatingSequence> dom_;
};

// Geometric separable model r(lag) = q^{|l1| + |l2|}, 0 <= q < 1.
std::unique_ptr<CorrelationModel> make_expdecay_model(double q);

// ---------------------------------------------------------------------------
// The Choi product covariance
//   omega(n)  = prod_{j>=1} cos(n / 3^j)
//   gamma_n   = sqrt(1 - |n|/(2 e^2)) omega(n)        for |n| <= e^2
//             = sqrt(1 / log |n|)     omega(n)        for |n| >  e^2
//   gamma_(n1,n2) = gamma_{n1} gamma_{n2}
// The integer branch boundary is n <= 7 (e^2 ~ 7.389).
// ---------------------------------------------------------------------------

// Truncated infinite product with tail error <= tol.
double choi_omega(int n, double tol);

double choi_gamma_1d(int n, double tol = 1e-12);
double choi_gamma_2d(int n1, int n2, double tol = 1e-12);

class ChoiProductModel final : public CorrelationModel {
 public:
  explicit ChoiProductModel(double tol = 1e-12, int table_lags = 8192);

  double correlation(Site a, Site b) const override;
  bool stationary() const override { return true; }
  double correlation_lag(int l1, int l2) const override;
  const DominatingSequence* dominating_sequence() const override { return dom_.get(); }
  std::string id() const override { return "choi"; }

  double tol() const { return tol_; }
  // 1-D factor, table-backed for lags below table_lags.
  double gamma_1d(int lag) const;

 private:
  double tol_;
  std::vector<double> table_;  // gamma_1d at lags 0..table_lags
  std::unique_ptr<DominatingSequence> dom_;
};

// ---------------------------------------------------------------------------
// Explicit per-pair correlation grid (CSV-backed)
// ---------------------------------------------------------------------------

class ExplicitGridModel final : public CorrelationModel {
 public:
  // Dense symmetric matrix in row-major site order ((i1-1)*n2 + i2-1).
  // Validates unit diagonal, symmetry (within 1e-12) and |r| <= 1.
  ExplicitGridModel(GridSize n, std::vector<double> matrix, std::string id = "explicit");

  double correlation(Site a, Site b) const override;
  bool stationary() const override { return false; }
  std::optional<GridSize> domain() const override { return n_; }
  std::string id() const override { return id_; }

  const std::vector<double>& matrix() const { return matrix_; }

 private:
  GridSize n_;
  std::vector<double> matrix_;
  std::string id_;
};

// Loads the `i1,i2,j1,j2,r` pair format. Unlisted off-diagonal pairs are 0;
// duplicate rows and asymmetric mirrored entries (beyond 1e-12) are rejected.
std::unique_ptr<ExplicitGridModel> load_explicit_grid_csv(const std::string& path, GridSize n);

// Catalog names: "iid", "choi", "expdecay:<q>", "csv:<path>:<N1xN2>".
std::unique_ptr<CorrelationModel> parse_model(const std::string& name);

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

struct PsdReport {
  GridSize n;
  std::int64_t sites = 0;
  double min_eigenvalue = 0.0;
  bool pass = false;
};

// Dense symmetric eigensolve of the full grid correlation matrix.
// Pass threshold: min eigenvalue >= -1e-8.
PsdReport check_psd(const CorrelationModel& model, GridSize n, std::int64_t site_cap = 1024);

// One of the three bounds of the covariance decay condition:
// scaled(l) = rho(l) * (log ...)^{1+eps} probed over a lag range. A bound
// "fails" when the running maximum at dyadic checkpoints is still growing
// in the second half of the probe -- a divergence diagnostic, not a proof.
struct DecayBound {
  double margin = 0.0;               // max scaled value over the probed range
  bool pass = true;                  // false when the trend diagnostic fires
  std::vector<double> running_max;   // running max at dyadic checkpoints
};

struct DecayReport {
  double epsilon = 0.0;
  double sup_abs = 0.0;  // sup |rho| over all probed lags
  DecayBound axis1;      // rho_(l,0) (log l)^{1+eps}
  DecayBound axis2;      // rho_(0,l) (log l)^{1+eps}
  DecayBound joint;      // rho_(l1,l2) (log l1 l2)^{1+eps},  l1,l2 >= 1
  bool pass() const { return axis1.pass && axis2.pass && joint.pass; }
};

// Probes axis lags up to probe_max.n_i and joint lags up to
// (min(probe_max.n1, joint_cap), min(probe_max.n2, joint_cap)).
DecayReport check_decay_condition(const DominatingSequence& rho, double epsilon,
                                  GridSize probe_max, int joint_cap = 512);

// Model variant; requires a declared dominating sequence.
DecayReport check_decay_condition(const CorrelationModel& model, double epsilon,
                                  GridSize probe_max, int joint_cap = 512);

// Partial sums of |gamma|^2: 1-D prefix sums from lag 0 and 2-D sums over
// R_(m,m) at dyadic m (separable product of the per-axis sums from lag 1).
struct SquaredSumProfile {
  std::vector<double> one_d;                          // index n: sum_{m=0}^{n}
  std::vector<std::pair<int, double>> two_d_dyadic;   // (m, sum over R_(m,m))
};

SquaredSumProfile squared_sum_profile(const ChoiProductModel& model, int n_max);

}  // namespace ascltsim

#endif

#include "ascltsim/covariance.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace ascltsim {

namespace {

int lag1(Site a, Site b) { return std::abs(a.i1 - b.i1); }
int lag2(Site a, Site b) { return std::abs(a.i2 - b.i2); }

void validate_axis_value(double v, int lag, const std::string& id) {
  if (!std::isfinite(v) || std::abs(v) > 1.0 + 1e-12) {
    throw ModelError("model '" + id + "': axis correlation at lag " + std::to_string(lag) +
                     " outside [-1,1]: " + std::to_string(v));
  }
}

}  // namespace

GridSize parse_grid_size(const std::string& text) {
  const auto x = text.find('x');
  if (x == std::string::npos || x == 0 || x + 1 >= text.size()) {
    throw ConfigError("grid size must look like N1xN2, got '" + text + "'");
  }
  int n1 = 0, n2 = 0;
  try {
    std::size_t used1 = 0, used2 = 0;
    n1 = std::stoi(text.substr(0, x), &used1);
    n2 = std::stoi(text.substr(x + 1), &used2);
    if (used1 != x || used2 != text.size() - x - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw ConfigError("grid size must look like N1xN2, got '" + text + "'");
  }
  if (n1 < 1 || n2 < 1) {
    throw ConfigError("grid size components must be >= 1, got '" + text + "'");
  }
  return {n1, n2};
}

double CorrelationModel::correlation_lag(int, int) const {
  throw ModelError("model '" + id() + "' is not stationary; correlation_lag undefined");
}

// ---------------------------------------------------------------------------
// Separable stationary model
// ---------------------------------------------------------------------------

SeparableStationaryModel::SeparableStationaryModel(AxisSequence rho1, AxisSequence rho2,
                                                   std::string id)
    : rho1_(std::move(rho1)), rho2_(std::move(rho2)), id_(std::move(id)) {
  if (std::abs(rho1_(0) - 1.0) > 1e-12 || std::abs(rho2_(0) - 1.0) > 1e-12) {
    throw ModelError("model '" + id_ + "': axis sequences must have rho(0) = 1");
  }
  dom_ = std::make_unique<FunctionSequence>(
      [r1 = rho1_, r2 = rho2_](int l1, int l2) { return std::abs(r1(l1) * r2(l2)); },
      id_ + ":dominating");
}

double SeparableStationaryModel::correlation(Site a, Site b) const {
  return correlation_lag(lag1(a, b), lag2(a, b));
}

double SeparableStationaryModel::correlation_lag(int l1, int l2) const {
  const double v1 = rho1_(l1);
  const double v2 = rho2_(l2);
  validate_axis_value(v1, l1, id_);
  validate_axis_value(v2, l2, id_);
  return v1 * v2;
}

std::unique_ptr<CorrelationModel> make_expdecay_model(double q) {
  if (!(q >= 0.0 && q < 1.0)) {
    throw ModelError("expdecay: q must be in [0,1), got " + std::to_string(q));
  }
  auto axis = [q](int lag) { return std::pow(q, lag); };
  std::ostringstream id;
  id << "expdecay:" << q;
  return std::make_unique<SeparableStationaryModel>(axis, axis, id.str());
}

// ---------------------------------------------------------------------------
// Choi covariance
// ---------------------------------------------------------------------------

double choi_omega(int n, double tol) {
  if (n < 0) throw DomainError("choi_omega: n must be >= 0");
  if (!(tol > 0.0)) throw DomainError("choi_omega: tol must be > 0");
  if (n == 0) return 1.0;
  // Tail bound: sum_{j>J} (n/3^j)^2 / 2 <= (n/3^J)^2 / 4, so J with
  // n/3^J <= 2 sqrt(tol) suffices; padded for slack.
  const int j_needed = static_cast<int>(std::ceil(std::log(n / std::sqrt(tol)) / std::log(3.0)));
  const int J = std::max(20, j_needed + 5);
  double prod = 1.0;
  double arg = static_cast<double>(n);
  for (int j = 1; j <= J; ++j) {
    arg /= 3.0;
    if (arg < 1e-8) break;  // cos(arg) = 1 to machine precision from here on
    prod *= std::cos(arg);
  }
  return prod;
}

double choi_gamma_1d(int n, double tol) {
  if (n < 0) throw DomainError("choi_gamma_1d: n must be >= 0");
  if (n == 0) return 1.0;
  static const double kTwoESq = 2.0 * std::exp(2.0);
  if (n <= 7) {  // integer lags with |n| <= e^2
    return std::sqrt(1.0 - n / kTwoESq) * choi_omega(n, tol);
  }
  return std::sqrt(1.0 / std::log(static_cast<double>(n))) * choi_omega(n, tol);
}

double choi_gamma_2d(int n1, int n2, double tol) {
  return choi_gamma_1d(n1, tol) * choi_gamma_1d(n2, tol);
}

ChoiProductModel::ChoiProductModel(double tol, int table_lags) : tol_(tol) {
  if (!(tol > 0.0)) throw DomainError("ChoiProductModel: tol must be > 0");
  if (table_lags < 0) table_lags = 0;
  table_.resize(static_cast<std::size_t>(table_lags) + 1);
  for (int l = 0; l <= table_lags; ++l) {
    table_[static_cast<std::size_t>(l)] = choi_gamma_1d(l, tol_);
  }
  dom_ = std::make_unique<FunctionSequence>(
      [this](int l1, int l2) { return std::abs(gamma_1d(l1) * gamma_1d(l2)); },
      "choi:dominating");
}

double ChoiProductModel::gamma_1d(int lag) const {
  if (lag < 0) lag = -lag;
  if (static_cast<std::size_t>(lag) < table_.size()) {
    return table_[static_cast<std::size_t>(lag)];
  }
  return choi_gamma_1d(lag, tol_);
}

double ChoiProductModel::correlation(Site a, Site b) const {
  return correlation_lag(lag1(a, b), lag2(a, b));
}

double ChoiProductModel::correlation_lag(int l1, int l2) const {
  return gamma_1d(l1) * gamma_1d(l2);
}

// ---------------------------------------------------------------------------
// Explicit grid model
// ---------------------------------------------------------------------------

ExplicitGridModel::ExplicitGridModel(GridSize n, std::vector<double> matrix, std::string id)
    : n_(n), matrix_(std::move(matrix)), id_(std::move(id)) {
  if (!n.positive()) throw ModelError("ExplicitGridModel: grid must be >= 1x1");
  const std::size_t m = static_cast<std::size_t>(n.sites());
  if (matrix_.size() != m * m) {
    throw ModelError("ExplicitGridModel: matrix size " + std::to_string(matrix_.size()) +
                     " does not match " + std::to_string(m) + " sites");
  }
  for (std::size_t a = 0; a < m; ++a) {
    if (std::abs(matrix_[a * m + a] - 1.0) > 1e-12) {
      throw ModelError("ExplicitGridModel: diagonal entry at site " + std::to_string(a) +
                       " is not 1");
    }
    for (std::size_t b = 0; b < m; ++b) {
      const double r = matrix_[a * m + b];
      if (!std::isfinite(r) || std::abs(r) > 1.0) {
        throw ModelError("ExplicitGridModel: |r| <= 1 violated at pair (" + std::to_string(a) +
                         "," + std::to_string(b) + "): " + std::to_string(r));
      }
      if (std::abs(r - matrix_[b * m + a]) > 1e-12) {
        throw ModelError("ExplicitGridModel: asymmetry beyond 1e-12 at pair (" +
                         std::to_string(a) + "," + std::to_string(b) + ")");
      }
    }
  }
}

double ExplicitGridModel::correlation(Site a, Site b) const {
  if (!n_.contains(a) || !n_.contains(b)) {
    throw DomainError("ExplicitGridModel: site outside declared grid " + to_string(n_));
  }
  const std::size_t m = static_cast<std::size_t>(n_.sites());
  const std::size_t ia = static_cast<std::size_t>(a.i1 - 1) * n_.n2 + (a.i2 - 1);
  const std::size_t ib = static_cast<std::size_t>(b.i1 - 1) * n_.n2 + (b.i2 - 1);
  return matrix_[ia * m + ib];
}

std::unique_ptr<ExplicitGridModel> load_explicit_grid_csv(const std::string& path, GridSize n) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open correlation CSV: " + path);

  std::string line;
  if (!std::getline(in, line)) throw IoError("empty correlation CSV: " + path);
  // strip optional BOM / whitespace
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
  if (line != "i1,i2,j1,j2,r") {
    throw IoError("correlation CSV must start with header 'i1,i2,j1,j2,r', got '" + line + "'");
  }

  const std::size_t m = static_cast<std::size_t>(n.sites());
  std::vector<double> matrix(m * m, 0.0);
  for (std::size_t a = 0; a < m; ++a) matrix[a * m + a] = 1.0;

  // Tracks which ordered orientations of each unordered pair have appeared.
  std::map<std::pair<std::size_t, std::size_t>, int> seen;

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    int i1, i2, j1, j2;
    double r;
    char c1, c2, c3, c4;
    if (!(ss >> i1 >> c1 >> i2 >> c2 >> j1 >> c3 >> j2 >> c4 >> r) || c1 != ',' || c2 != ',' ||
        c3 != ',' || c4 != ',') {
      throw IoError(path + ":" + std::to_string(line_no) + ": malformed row '" + line + "'");
    }
    const Site si{i1, i2}, sj{j1, j2};
    if (!n.contains(si) || !n.contains(sj)) {
      throw IoError(path + ":" + std::to_string(line_no) + ": site outside grid " + to_string(n));
    }
    const std::size_t ia = static_cast<std::size_t>(i1 - 1) * n.n2 + (i2 - 1);
    const std::size_t ib = static_cast<std::size_t>(j1 - 1) * n.n2 + (j2 - 1);
    if (ia == ib) {
      if (std::abs(r - 1.0) > 1e-12) {
        throw IoError(path + ":" + std::to_string(line_no) + ": diagonal entry must be 1");
      }
      continue;
    }
    const auto key = std::minmax(ia, ib);
    const int orientation = (ia < ib) ? 1 : 2;
    auto [it, inserted] = seen.emplace(key, orientation);
    if (!inserted) {
      if (it->second & orientation) {
        throw IoError(path + ":" + std::to_string(line_no) + ": duplicate pair");
      }
      it->second |= orientation;
      if (std::abs(matrix[ia * m + ib] - r) > 1e-12) {
        throw IoError(path + ":" + std::to_string(line_no) +
                      ": asymmetric mirrored entries beyond 1e-12");
      }
    }
    matrix[ia * m + ib] = r;
    matrix[ib * m + ia] = r;
  }
  return std::make_unique<ExplicitGridModel>(n, std::move(matrix), "csv:" + path);
}

std::unique_ptr<CorrelationModel> parse_model(const std::string& name) {
  if (name == "iid") return std::make_unique<IidModel>();
  if (name == "choi") return std::make_unique<ChoiProductModel>();
  if (name.rfind("expdecay:", 0) == 0) {
    const std::string qs = name.substr(9);
    try {
      return make_expdecay_model(std::stod(qs));
    } catch (const ModelError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("expdecay: cannot parse decay rate '" + qs + "'");
    }
  }
  if (name.rfind("csv:", 0) == 0) {
    const std::string rest = name.substr(4);
    const auto sep = rest.rfind(':');
    if (sep == std::string::npos) {
      throw ConfigError("csv model needs 'csv:<path>:<N1xN2>', got '" + name + "'");
    }
    return load_explicit_grid_csv(rest.substr(0, sep), parse_grid_size(rest.substr(sep + 1)));
  }
  throw ConfigError("unknown model '" + name + "' (catalog: iid, choi, expdecay:<q>, csv:<path>:<N1xN2>)");
}

// ---------------------------------------------------------------------------
// PSD check
// ---------------------------------------------------------------------------

PsdReport check_psd(const CorrelationModel& model, GridSize n, std::int64_t site_cap) {
  if (!n.positive()) throw DomainError("check_psd: grid must be >= 1x1");
  const std::int64_t m = n.sites();
  if (m > site_cap) {
    throw SizeError("check_psd: " + std::to_string(m) + " sites exceeds cap " +
                    std::to_string(site_cap));
  }
  Eigen::MatrixXd c(m, m);
  std::int64_t a = 0;
  for (int a1 = 1; a1 <= n.n1; ++a1) {
    for (int a2 = 1; a2 <= n.n2; ++a2, ++a) {
      std::int64_t b = 0;
      for (int b1 = 1; b1 <= n.n1; ++b1) {
        for (int b2 = 1; b2 <= n.n2; ++b2, ++b) {
          c(a, b) = model.correlation({a1, a2}, {b1, b2});
        }
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(c, Eigen::EigenvaluesOnly);
  const double min_eig = solver.eigenvalues().minCoeff();
  return PsdReport{n, m, min_eig, min_eig >= -1e-8};
}

// ---------------------------------------------------------------------------
// Decay-condition checker
// ---------------------------------------------------------------------------

namespace {

// The running max at dyadic checkpoints still growing in the second half of
// the probe means new maxima keep appearing at large lags: flagged as
// divergence. Bounded sequences reach their max early and plateau.
bool trend_diverges(const std::vector<double>& running_max) {
  if (running_max.size() < 3) return false;
  const std::size_t mid = running_max.size() / 2;
  return running_max.back() > running_max[mid] * (1.0 + 1e-9) + 1e-300;
}

DecayBound probe_axis(const std::function<double(int)>& rho, double epsilon, int max_lag,
                      double& sup_abs) {
  DecayBound bound;
  double running = 0.0;
  int next_checkpoint = 4;
  for (int l = 2; l <= max_lag; ++l) {
    const double v = std::abs(rho(l));
    sup_abs = std::max(sup_abs, v);
    const double scaled = v * std::pow(std::log(static_cast<double>(l)), 1.0 + epsilon);
    running = std::max(running, scaled);
    if (l == next_checkpoint || l == max_lag) {
      bound.running_max.push_back(running);
      next_checkpoint *= 2;
    }
  }
  bound.margin = running;
  bound.pass = !trend_diverges(bound.running_max);
  return bound;
}

}  // namespace

DecayReport check_decay_condition(const DominatingSequence& rho, double epsilon,
                                  GridSize probe_max, int joint_cap) {
  if (!(epsilon > 0.0)) throw ConfigError("check_decay_condition: epsilon must be > 0");
  if (probe_max.n1 < 4 || probe_max.n2 < 4) {
    throw ConfigError("check_decay_condition: probe range must be at least 4 per axis");
  }

  DecayReport report;
  report.epsilon = epsilon;

  report.axis1 = probe_axis([&rho](int l) { return rho.value(l, 0); }, epsilon, probe_max.n1,
                            report.sup_abs);
  report.axis2 = probe_axis([&rho](int l) { return rho.value(0, l); }, epsilon, probe_max.n2,
                            report.sup_abs);
  report.sup_abs = std::max({report.sup_abs, std::abs(rho.value(1, 0)), std::abs(rho.value(0, 1)),
                             std::abs(rho.value(1, 1))});

  // Joint bound over lags (l1,l2) >= (1,1); checkpoints by max(l1,l2).
  const int j1 = std::min(probe_max.n1, joint_cap);
  const int j2 = std::min(probe_max.n2, joint_cap);
  DecayBound joint;
  double running = 0.0;
  const int rings = static_cast<int>(std::ceil(std::log2(static_cast<double>(std::max(j1, j2)))));
  for (int a = 1; a <= rings; ++a) {
    const int hi = 1 << a;
    // lags with max(l1,l2) in (2^{a-1}, 2^a]; ring 1 also covers (1,1).
    for (int l1 = 1; l1 <= std::min(hi, j1); ++l1) {
      for (int l2 = 1; l2 <= std::min(hi, j2); ++l2) {
        if (a > 1 && l1 <= (1 << (a - 1)) && l2 <= (1 << (a - 1))) continue;
        const double v = std::abs(rho.value(l1, l2));
        report.sup_abs = std::max(report.sup_abs, v);
        const double scaled =
            v * std::pow(std::log(static_cast<double>(l1) * l2), 1.0 + epsilon);
        running = std::max(running, scaled);
      }
    }
    joint.running_max.push_back(running);
  }
  joint.margin = running;
  joint.pass = !trend_diverges(joint.running_max);
  report.joint = joint;
  return report;
}

DecayReport check_decay_condition(const CorrelationModel& model, double epsilon,
                                  GridSize probe_max, int joint_cap) {
  const DominatingSequence* rho = model.dominating_sequence();
  if (rho == nullptr) {
    throw ConfigError("model '" + model.id() + "' declares no dominating sequence");
  }
  return check_decay_condition(*rho, epsilon, probe_max, joint_cap);
}

SquaredSumProfile squared_sum_profile(const ChoiProductModel& model, int n_max) {
  if (n_max < 1) throw DomainError("squared_sum_profile: n_max must be >= 1");
  SquaredSumProfile profile;
  profile.one_d.resize(static_cast<std::size_t>(n_max) + 1);
  double run = 0.0;
  for (int m = 0; m <= n_max; ++m) {
    const double g = model.gamma_1d(m);
    run += g * g;
    profile.one_d[static_cast<std::size_t>(m)] = run;
  }
  // 2-D sums over R_(m,m) factor through the axes: (sum_{l=1}^{m} g_l^2)^2.
  for (int m = 2; m <= n_max; m *= 2) {
    const double axis = profile.one_d[static_cast<std::size_t>(m)] - 1.0;  // drop lag 0
    profile.two_d_dyadic.emplace_back(m, axis * axis);
  }
  return profile;
}

}  // namespace ascltsim

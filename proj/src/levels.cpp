#include "ascltsim/levels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "ascltsim/normal.hpp"

namespace ascltsim {

namespace {

// True when 1 - tau/(k1 k2) falls outside [p_floor, 1 - p_floor]; the level
// is then pinned at a clamped quantile and mass calibration is skipped.
bool clamp_active(std::int64_t sites, double tau) {
  const double p = 1.0 - tau / static_cast<double>(sites);
  return p < kLevelClampFloor || p > 1.0 - kLevelClampFloor;
}

}  // namespace

double boundary_level(int n1, int n2, double tau) {
  if (n1 < 1 || n2 < 1) throw DomainError("boundary_level: grid must be >= 1x1");
  if (!(tau >= 0.0)) throw DomainError("boundary_level: tau must be >= 0");
  const double sites = static_cast<double>(n1) * n2;
  double p = 1.0 - tau / sites;
  p = std::clamp(p, kLevelClampFloor, 1.0 - kLevelClampFloor);
  return std_normal_quantile(p);
}

double asymptotic_level(int n1, int n2) {
  if (n1 < 1 || n2 < 1) throw DomainError("asymptotic_level: grid must be >= 1x1");
  const double sites = static_cast<double>(n1) * n2;
  if (sites < 2.0) throw DomainError("asymptotic_level: needs n1*n2 >= 2");
  return std::sqrt(2.0 * std::log(sites));
}

LevelSchedule LevelSchedule::constant(GridSize n, double tau) {
  if (!n.positive()) throw DomainError("LevelSchedule: grid must be >= 1x1");
  if (!(tau >= 0.0)) throw DomainError("LevelSchedule: tau must be >= 0");
  return LevelSchedule(n, tau, Mode::constant, Grid<double>{}, 0.0);
}

LevelSchedule LevelSchedule::with_offsets(GridSize n, double tau, Grid<double> offsets,
                                          double offset_bound) {
  if (!n.positive()) throw DomainError("LevelSchedule: grid must be >= 1x1");
  if (!(tau >= 0.0)) throw DomainError("LevelSchedule: tau must be >= 0");
  if (offsets.size() != n) {
    throw DomainError("LevelSchedule: offsets grid " + to_string(offsets.size()) +
                      " does not match " + to_string(n));
  }
  double inf_norm = 0.0;
  for (double d : offsets.data()) {
    if (!std::isfinite(d)) throw DomainError("LevelSchedule: offsets must be finite");
    inf_norm = std::max(inf_norm, std::abs(d));
  }
  if (inf_norm > offset_bound) {
    throw DomainError("LevelSchedule: offset sup-norm " + std::to_string(inf_norm) +
                      " exceeds declared bound " + std::to_string(offset_bound));
  }
  return LevelSchedule(n, tau, Mode::offset, std::move(offsets), inf_norm);
}

double LevelSchedule::base_level(GridSize k) const {
  if (!k.positive() || !leq(k, n_)) {
    throw DomainError("LevelSchedule: k = " + to_string(k) + " outside schedule grid " +
                      to_string(n_));
  }
  if (mode_ == Mode::constant) return boundary_level(k.n1, k.n2, tau_);
  return calibrate(k);
}

// Newton on g(b) = sum_{i<=k}(1 - Phi(b + delta_i)) - tau with a bisection
// safeguard inside [b0 - |delta|inf, b0 + |delta|inf].
double LevelSchedule::calibrate(GridSize k) const {
  const double b0 = boundary_level(k.n1, k.n2, tau_);
  if (clamp_active(k.sites(), tau_) || offset_inf_norm_ == 0.0) return b0;

  auto mass = [&](double b) {
    double s = 0.0;
    for (int i1 = 1; i1 <= k.n1; ++i1) {
      for (int i2 = 1; i2 <= k.n2; ++i2) {
        s += std_normal_sf(b + offsets_(i1, i2));
      }
    }
    return s;
  };
  auto mass_slope = [&](double b) {
    double s = 0.0;
    for (int i1 = 1; i1 <= k.n1; ++i1) {
      for (int i2 = 1; i2 <= k.n2; ++i2) {
        s += std_normal_pdf(b + offsets_(i1, i2));
      }
    }
    return s;
  };

  double lo = b0 - offset_inf_norm_;
  double hi = b0 + offset_inf_norm_;
  double glo = mass(lo) - tau_;
  double ghi = mass(hi) - tau_;
  // mass is decreasing in b, so g(lo) >= 0 >= g(hi) by the offset bound.
  if (glo < 0.0 || ghi > 0.0) {
    throw CalibrationError("LevelSchedule: calibration failed to bracket at k = " + to_string(k));
  }

  double b = b0;
  for (int iter = 0; iter < 100; ++iter) {
    const double g = mass(b) - tau_;
    if (std::abs(g) <= 1e-9) return b;
    if (g > 0.0) {
      lo = b;
    } else {
      hi = b;
    }
    const double slope = mass_slope(b);
    double next = (slope > 1e-300) ? b + g / slope : b;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == b) return b;
    b = next;
  }
  if (std::abs(mass(b) - tau_) <= 1e-6) return b;
  throw CalibrationError("LevelSchedule: calibration did not converge at k = " + to_string(k));
}

double LevelSchedule::level(GridSize k, Site i) const {
  const double base = base_level(k);
  if (mode_ == Mode::constant) return base;
  if (!offsets_.size().contains(i)) {
    throw DomainError("LevelSchedule: site outside offsets grid");
  }
  return base + offsets_(i);
}

double LevelSchedule::exceedance_mass(GridSize k) const {
  const double base = base_level(k);
  double s = 0.0;
  for (int i1 = 1; i1 <= k.n1; ++i1) {
    for (int i2 = 1; i2 <= k.n2; ++i2) {
      const double delta = (mode_ == Mode::offset) ? offsets_(i1, i2) : 0.0;
      s += std_normal_sf(base + delta);
    }
  }
  return s;
}

Grid<double> LevelSchedule::materialize_base(GridSize upto) const {
  if (!leq(upto, n_)) {
    throw DomainError("LevelSchedule: materialize range exceeds schedule grid");
  }
  Grid<double> base(upto);
  for (int k1 = 1; k1 <= upto.n1; ++k1) {
    for (int k2 = 1; k2 <= upto.n2; ++k2) {
      base(k1, k2) = base_level(GridSize{k1, k2});
    }
  }
  return base;
}

double lambda_min(const LevelSchedule& schedule, GridSize n) {
  const double base = schedule.base_level(n);
  if (schedule.mode() == LevelSchedule::Mode::constant) return base;
  double min_delta = std::numeric_limits<double>::infinity();
  for (int i1 = 1; i1 <= n.n1; ++i1) {
    for (int i2 = 1; i2 <= n.n2; ++i2) {
      min_delta = std::min(min_delta, schedule.offsets()(i1, i2));
    }
  }
  return base + min_delta;
}

Grid<double> load_offsets_csv(const std::string& path, GridSize n) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open offsets CSV: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty offsets CSV: " + path);
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
  if (line != "i1,i2,delta") {
    throw IoError("offsets CSV must start with header 'i1,i2,delta', got '" + line + "'");
  }
  Grid<double> offsets(n, 0.0);
  Grid<std::uint8_t> seen(n, 0);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    int i1, i2;
    double d;
    char c1, c2;
    if (!(ss >> i1 >> c1 >> i2 >> c2 >> d) || c1 != ',' || c2 != ',') {
      throw IoError(path + ":" + std::to_string(line_no) + ": malformed row '" + line + "'");
    }
    if (!n.contains({i1, i2})) {
      throw IoError(path + ":" + std::to_string(line_no) + ": site outside grid " + to_string(n));
    }
    if (seen(i1, i2)) {
      throw IoError(path + ":" + std::to_string(line_no) + ": duplicate site");
    }
    seen(i1, i2) = 1;
    offsets(i1, i2) = d;
  }
  for (int i1 = 1; i1 <= n.n1; ++i1) {
    for (int i2 = 1; i2 <= n.n2; ++i2) {
      if (!seen(i1, i2)) {
        throw IoError(path + ": missing offset for site (" + std::to_string(i1) + "," +
                      std::to_string(i2) + ")");
      }
    }
  }
  return offsets;
}

void write_schedule_summary_csv(const LevelSchedule& schedule, GridSize upto,
                                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write schedule summary CSV: " + path);
  out << "k1,k2,base_level,mass\n";
  char buf[96];
  for (int k1 = 1; k1 <= upto.n1; ++k1) {
    for (int k2 = 1; k2 <= upto.n2; ++k2) {
      const GridSize k{k1, k2};
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g\n", k1, k2, schedule.base_level(k),
                    schedule.exceedance_mass(k));
      out << buf;
    }
  }
}

}  // namespace ascltsim

#include "ascltsim/asclt.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "ascltsim/normal.hpp"

namespace ascltsim {

double harmonic_number(int n) {
  if (n < 0) throw DomainError("harmonic_number: n must be >= 0");
  double h = 0.0;
  for (int k = n; k >= 1; --k) h += 1.0 / k;  // small terms first
  return h;
}

std::string to_string(Normalization n) {
  return n == Normalization::paper_log ? "paper_log" : "harmonic";
}

Normalization parse_normalization(const std::string& s) {
  if (s == "paper_log") return Normalization::paper_log;
  if (s == "harmonic") return Normalization::harmonic;
  throw ConfigError("unknown normalization '" + s + "' (paper_log, harmonic)");
}

Grid<double> prefix_max(const FieldRealization& field, const Grid<double>* offsets) {
  const GridSize n = field.n;
  if (offsets != nullptr && offsets->size() != n) {
    throw DomainError("prefix_max: offsets grid " + to_string(offsets->size()) +
                      " does not match field " + to_string(n));
  }
  Grid<double> m(n);
  for (int k1 = 1; k1 <= n.n1; ++k1) {
    for (int k2 = 1; k2 <= n.n2; ++k2) {
      double v = field.values(k1, k2);
      if (offsets != nullptr) v -= (*offsets)(k1, k2);
      if (k1 > 1) v = std::max(v, m(k1 - 1, k2));
      if (k2 > 1) v = std::max(v, m(k1, k2 - 1));
      m(k1, k2) = v;
    }
  }
  return m;
}

Grid<std::uint8_t> indicator_stream(const FieldRealization& field,
                                    const LevelSchedule& schedule) {
  const GridSize n = field.n;
  if (schedule.grid() != n) {
    throw DomainError("indicator_stream: schedule grid " + to_string(schedule.grid()) +
                      " does not match field " + to_string(n));
  }
  const Grid<double>* offsets =
      schedule.mode() == LevelSchedule::Mode::offset ? &schedule.offsets() : nullptr;
  const Grid<double> m = prefix_max(field, offsets);
  const Grid<double> base = schedule.materialize_base(n);
  Grid<std::uint8_t> bits(n);
  for (int k1 = 1; k1 <= n.n1; ++k1) {
    for (int k2 = 1; k2 <= n.n2; ++k2) {
      bits(k1, k2) = (m(k1, k2) <= base(k1, k2)) ? 1 : 0;
    }
  }
  return bits;
}

namespace {

double normalizer(GridSize n, Normalization mode) {
  if (mode == Normalization::paper_log) {
    if (n.n1 < 3 || n.n2 < 3) {
      throw DomainError("asclt_average: paper_log normalization needs n >= 3x3, got " +
                        to_string(n));
    }
    return std::log(static_cast<double>(n.n1)) * std::log(static_cast<double>(n.n2));
  }
  return harmonic_number(n.n1) * harmonic_number(n.n2);
}

}  // namespace

double asclt_average(const Grid<std::uint8_t>& bits, GridSize n, Normalization normalization) {
  if (!leq(n, bits.size())) {
    throw DomainError("asclt_average: n " + to_string(n) + " exceeds indicator grid " +
                      to_string(bits.size()));
  }
  double sum = 0.0;
  for (int k1 = 1; k1 <= n.n1; ++k1) {
    for (int k2 = 1; k2 <= n.n2; ++k2) {
      if (bits(k1, k2)) sum += 1.0 / (static_cast<double>(k1) * k2);
    }
  }
  return sum / normalizer(n, normalization);
}

std::vector<double> asclt_averages_at(const Grid<std::uint8_t>& bits,
                                      const std::vector<GridSize>& checkpoints,
                                      Normalization normalization) {
  const GridSize n = bits.size();
  // 2-D prefix sums of bit(k)/(k1 k2); one pass serves every checkpoint.
  Grid<double> s(n);
  for (int k1 = 1; k1 <= n.n1; ++k1) {
    for (int k2 = 1; k2 <= n.n2; ++k2) {
      double v = bits(k1, k2) ? 1.0 / (static_cast<double>(k1) * k2) : 0.0;
      if (k1 > 1) v += s(k1 - 1, k2);
      if (k2 > 1) v += s(k1, k2 - 1);
      if (k1 > 1 && k2 > 1) v -= s(k1 - 1, k2 - 1);
      s(k1, k2) = v;
    }
  }
  std::vector<double> out;
  out.reserve(checkpoints.size());
  for (GridSize c : checkpoints) {
    if (!c.positive() || !leq(c, n)) {
      throw DomainError("asclt_averages_at: checkpoint " + to_string(c) +
                        " outside indicator grid " + to_string(n));
    }
    out.push_back(s(c.n1, c.n2) / normalizer(c, normalization));
  }
  return out;
}

double expected_average_iid(GridSize n, double tau, Normalization normalization) {
  if (!n.positive()) throw DomainError("expected_average_iid: grid must be >= 1x1");
  if (!(tau >= 0.0)) throw DomainError("expected_average_iid: tau must be >= 0");
  double sum = 0.0;
  for (int k1 = 1; k1 <= n.n1; ++k1) {
    for (int k2 = 1; k2 <= n.n2; ++k2) {
      const double m = static_cast<double>(k1) * k2;
      const double p = 1.0 - tau / m;
      double term;
      if (p > 1.0 - kLevelClampFloor) {
        term = 1.0;  // tau = 0 regime: clamped high level, bit a.s. 1
      } else if (p < kLevelClampFloor) {
        term = 0.0;  // clamped low level, bit a.s. 0
      } else {
        term = std::exp(m * std::log1p(-tau / m));
      }
      sum += term / m;
    }
  }
  return sum / normalizer(n, normalization);
}

double no_exceedance_prob_iid(GridSize n, double tau) {
  if (!n.positive()) throw DomainError("no_exceedance_prob_iid: grid must be >= 1x1");
  if (!(tau >= 0.0)) throw DomainError("no_exceedance_prob_iid: tau must be >= 0");
  const double m = static_cast<double>(n.sites());
  if (tau > m) return 0.0;  // clamped: the per-site factor would be negative
  if (tau == m) return 0.0;
  return std::exp(m * std::log1p(-tau / m));
}

AscltTrajectory make_trajectory(const FieldRealization& field, const LevelSchedule& schedule,
                                const std::vector<GridSize>& checkpoints,
                                Normalization normalization) {
  AscltTrajectory t;
  t.n = field.n;
  t.indicator = indicator_stream(field, schedule);
  t.normalization = normalization;
  const std::vector<double> values = asclt_averages_at(t.indicator, checkpoints, normalization);
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    t.averages.emplace_back(checkpoints[i], values[i]);
  }
  return t;
}

void write_trajectory_csv(const AscltTrajectory& trajectory, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write trajectory CSV: " + path);
  out << "k1,k2,bit,weight,partial_sum\n";
  char buf[96];
  double run = 0.0;
  const GridSize n = trajectory.n;
  for (int k1 = 1; k1 <= n.n1; ++k1) {
    for (int k2 = 1; k2 <= n.n2; ++k2) {
      const double w = 1.0 / (static_cast<double>(k1) * k2);
      const int bit = trajectory.indicator(k1, k2) ? 1 : 0;
      run += bit * w;
      std::snprintf(buf, sizeof buf, "%d,%d,%d,%.17g,%.17g\n", k1, k2, bit, w, run);
      out << buf;
    }
  }
}

}  // namespace ascltsim

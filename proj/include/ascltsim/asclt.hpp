#ifndef ASCLTSIM_ASCLT_HPP
#define ASCLTSIM_ASCLT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ascltsim/field_sim.hpp"
#include "ascltsim/grid.hpp"
#include "ascltsim/levels.hpp"

namespace ascltsim {

// H(n) = sum_{k=1}^{n} 1/k
double harmonic_number(int n);

// The log-average statistic divides by log n1 log n2 (the paper form) or by
// the exact weight total H(n1) H(n2), which makes it a weighted frequency
// in [0,1]. Both are reported side by side downstream.
enum class Normalization { paper_log, harmonic };

std::string to_string(Normalization n);
Normalization parse_normalization(const std::string& s);

// Prefix-rectangle maxima: M(k) = max_{i <= k} (X_i - delta_i), computed by
// the O(n1 n2) recurrence
//   M(k) = max(M(k1-1,k2), M(k1,k2-1), X(k) - delta(k)).
Grid<double> prefix_max(const FieldRealization& field, const Grid<double>* offsets = nullptr);

// bit(k) = 1 iff X_i <= u_{k,i} for all i <= k, for every k in R_n.
Grid<std::uint8_t> indicator_stream(const FieldRealization& field, const LevelSchedule& schedule);

// A_n = norm^{-1} sum_{k <= n} bit(k) / (k1 k2). paper_log requires n >= 3x3.
double asclt_average(const Grid<std::uint8_t>& bits, GridSize n, Normalization normalization);

// Averages at several checkpoint sizes in one pass over shared prefix sums.
std::vector<double> asclt_averages_at(const Grid<std::uint8_t>& bits,
                                      const std::vector<GridSize>& checkpoints,
                                      Normalization normalization);

// Exact E[A_n] for i.i.d. fields under constant boundary levels:
//   norm^{-1} sum_{k} (1/(k1 k2)) Phi(u_k)^{k1 k2}, evaluated in log space.
double expected_average_iid(GridSize n, double tau, Normalization normalization);

// P(M_n <= u_n) = (1 - tau/(n1 n2))^{n1 n2} for the i.i.d. field (via log1p);
// returns 0 when tau > n1 n2 (the factor would be negative).
double no_exceedance_prob_iid(GridSize n, double tau);

// Per-k trajectory bundle for export.
struct AscltTrajectory {
  GridSize n;
  Grid<std::uint8_t> indicator;
  Normalization normalization = Normalization::paper_log;
  std::vector<std::pair<GridSize, double>> averages;  // checkpoint -> A
};

AscltTrajectory make_trajectory(const FieldRealization& field, const LevelSchedule& schedule,
                                const std::vector<GridSize>& checkpoints,
                                Normalization normalization);

// CSV `k1,k2,bit,weight,partial_sum` in row-major k order; partial_sum is
// the running unnormalized sum of bit * weight.
void write_trajectory_csv(const AscltTrajectory& trajectory, const std::string& path);

}  // namespace ascltsim

#endif

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "ascltsim/asclt.hpp"
#include "ascltsim/rng.hpp"
#include "oracles.hpp"

using namespace ascltsim;

TEST_SUITE_BEGIN("asclt");

namespace {

// Brute-force rectangle maximum over the full prefix, O((n1 n2)^2) total.
Grid<double> brute_prefix_max(const FieldRealization& f, const Grid<double>* offsets) {
  const GridSize n = f.n;
  Grid<double> m(n);
  for (int k1 = 1; k1 <= n.n1; ++k1) {
    for (int k2 = 1; k2 <= n.n2; ++k2) {
      double best = -std::numeric_limits<double>::infinity();
      for (int i1 = 1; i1 <= k1; ++i1) {
        for (int i2 = 1; i2 <= k2; ++i2) {
          double v = f.values(i1, i2);
          if (offsets != nullptr) v -= (*offsets)(i1, i2);
          best = std::max(best, v);
        }
      }
      m(k1, k2) = best;
    }
  }
  return m;
}

// Direct evaluation of the event {X_i <= u_{k,i} for all i <= k}.
Grid<std::uint8_t> brute_indicator(const FieldRealization& f, const LevelSchedule& s) {
  const GridSize n = f.n;
  Grid<std::uint8_t> bits(n);
  for (int k1 = 1; k1 <= n.n1; ++k1) {
    for (int k2 = 1; k2 <= n.n2; ++k2) {
      bool all = true;
      for (int i1 = 1; all && i1 <= k1; ++i1) {
        for (int i2 = 1; i2 <= k2; ++i2) {
          if (f.values(i1, i2) > s.level(GridSize{k1, k2}, Site{i1, i2})) {
            all = false;
            break;
          }
        }
      }
      bits(k1, k2) = all ? 1 : 0;
    }
  }
  return bits;
}

FieldRealization field_from(GridSize n, std::initializer_list<double> vals) {
  FieldRealization f{n, Grid<double>(n), 0, "manual", SampleMethod::iid};
  auto it = vals.begin();
  for (int i1 = 1; i1 <= n.n1; ++i1) {
    for (int i2 = 1; i2 <= n.n2; ++i2) f.values(i1, i2) = *it++;
  }
  return f;
}

}  // namespace

TEST_CASE("harmonic numbers") {
  CHECK(harmonic_number(1) == 1.0);
  CHECK(std::abs(harmonic_number(10) - 2.9289682539682538) <= 1e-15);
}

TEST_CASE("prefix max on hand cases") {
  const FieldRealization f = field_from(GridSize{2, 2}, {1, 3, 2, 0});
  const Grid<double> m = prefix_max(f);
  CHECK(m(1, 1) == 1.0);
  CHECK(m(1, 2) == 3.0);
  CHECK(m(2, 1) == 2.0);
  CHECK(m(2, 2) == 3.0);

  // single row: running cumulative max
  const FieldRealization row = field_from(GridSize{1, 5}, {0.5, -1, 2, 1, 3});
  const Grid<double> mr = prefix_max(row);
  CHECK(mr(1, 1) == 0.5);
  CHECK(mr(1, 2) == 0.5);
  CHECK(mr(1, 3) == 2.0);
  CHECK(mr(1, 4) == 2.0);
  CHECK(mr(1, 5) == 3.0);
}

TEST_CASE("prefix max equals brute force on random fields") {
  for (int trial = 0; trial < 50; ++trial) {
    const FieldRealization f = sample_iid(GridSize{8, 8}, derive_rep_seed(606, trial));
    CHECK(prefix_max(f).data() == brute_prefix_max(f, nullptr).data());
  }
  // with offsets
  oracles::XorShift rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const GridSize n{rng.integer(1, 10), rng.integer(1, 10)};
    const FieldRealization f = sample_iid(n, derive_rep_seed(707, trial));
    Grid<double> delta(n);
    for (double& d : delta.data()) d = rng.uniform(-0.5, 0.5);
    CHECK(prefix_max(f, &delta).data() == brute_prefix_max(f, &delta).data());
  }
}

TEST_CASE("indicator stream trivial cases") {
  const GridSize n{3, 3};
  const LevelSchedule s = LevelSchedule::constant(n, 1.0);

  FieldRealization low{n, Grid<double>(n, -10.0), 0, "manual", SampleMethod::iid};
  const Grid<std::uint8_t> all_one = indicator_stream(low, s);
  for (auto b : all_one.data()) CHECK(b == 1);

  FieldRealization spike{n, Grid<double>(n, -10.0), 0, "manual", SampleMethod::iid};
  spike.values(1, 1) = 10.0;
  const Grid<std::uint8_t> all_zero = indicator_stream(spike, s);
  for (auto b : all_zero.data()) CHECK(b == 0);
}

TEST_CASE("indicator stream equals brute-force event evaluation") {
  for (int trial = 0; trial < 30; ++trial) {
    const GridSize n{6, 6};
    const FieldRealization f = sample_iid(n, derive_rep_seed(808, trial));
    const LevelSchedule s = LevelSchedule::constant(n, 1.0);
    CHECK(indicator_stream(f, s).data() == brute_indicator(f, s).data());
  }
  // offset schedules, 8x8 cap
  oracles::XorShift rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const GridSize n{8, 8};
    const FieldRealization f = sample_iid(n, derive_rep_seed(909, trial));
    Grid<double> delta(n);
    for (double& d : delta.data()) d = rng.uniform(-0.2, 0.2);
    const LevelSchedule s = LevelSchedule::with_offsets(n, 1.0, delta);
    CHECK(indicator_stream(f, s).data() == brute_indicator(f, s).data());
  }
}

TEST_CASE("indicator stream size mismatch is rejected") {
  const FieldRealization f = sample_iid(GridSize{4, 4}, 1);
  const LevelSchedule s = LevelSchedule::constant(GridSize{5, 5}, 1.0);
  CHECK_THROWS_AS(indicator_stream(f, s), DomainError);
}

TEST_CASE("asclt average closed forms") {
  const GridSize n{10, 10};
  Grid<std::uint8_t> ones(n, 1);
  CHECK(std::abs(asclt_average(ones, n, Normalization::harmonic) - 1.0) <= 1e-14);

  const double expect = std::pow(harmonic_number(10) / std::log(10.0), 2.0);
  CHECK(std::abs(expect - 1.6181) < 1e-4);
  CHECK(std::abs(asclt_average(ones, n, Normalization::paper_log) - expect) <= 1e-12);

  Grid<std::uint8_t> zeros(n, 0);
  CHECK(asclt_average(zeros, n, Normalization::paper_log) == 0.0);
  CHECK(asclt_average(zeros, n, Normalization::harmonic) == 0.0);

  CHECK_THROWS_AS(asclt_average(ones, GridSize{2, 10}, Normalization::paper_log), DomainError);
  CHECK_NOTHROW(asclt_average(ones, GridSize{2, 10}, Normalization::harmonic));
}

TEST_CASE("checkpoint averages match single evaluations") {
  const GridSize n{12, 9};
  const FieldRealization f = sample_iid(n, 321);
  const LevelSchedule s = LevelSchedule::constant(n, 1.0);
  const Grid<std::uint8_t> bits = indicator_stream(f, s);
  const std::vector<GridSize> cps{{3, 3}, {5, 8}, {12, 9}, {4, 4}};
  const std::vector<double> got = asclt_averages_at(bits, cps, Normalization::harmonic);
  for (std::size_t i = 0; i < cps.size(); ++i) {
    CHECK(std::abs(got[i] - asclt_average(bits, cps[i], Normalization::harmonic)) <= 1e-14);
  }
}

TEST_CASE("harmonic average stays in [0,1]; paper_log within its bound") {
  for (int trial = 0; trial < 20; ++trial) {
    const GridSize n{10, 10};
    const FieldRealization f = sample_iid(n, derive_rep_seed(55, trial));
    const LevelSchedule s = LevelSchedule::constant(n, 0.5 + 0.25 * (trial % 5));
    const Grid<std::uint8_t> bits = indicator_stream(f, s);
    const double ah = asclt_average(bits, n, Normalization::harmonic);
    CHECK(ah >= 0.0);
    CHECK(ah <= 1.0);
    const double ap = asclt_average(bits, n, Normalization::paper_log);
    const double cap = std::pow(harmonic_number(10) / std::log(10.0), 2.0);
    CHECK(ap >= 0.0);
    CHECK(ap <= cap + 1e-12);
  }
}

TEST_CASE("monotone response: raising levels never lowers bits") {
  // smaller tau -> pointwise higher levels
  for (int trial = 0; trial < 15; ++trial) {
    const GridSize n{8, 8};
    const FieldRealization f = sample_iid(n, derive_rep_seed(66, trial));
    const Grid<std::uint8_t> lo = indicator_stream(f, LevelSchedule::constant(n, 2.0));
    const Grid<std::uint8_t> hi = indicator_stream(f, LevelSchedule::constant(n, 0.5));
    double a_lo = 0.0, a_hi = 0.0;
    for (int k1 = 1; k1 <= 8; ++k1) {
      for (int k2 = 1; k2 <= 8; ++k2) {
        CHECK(hi(k1, k2) >= lo(k1, k2));
      }
    }
    a_lo = asclt_average(lo, n, Normalization::harmonic);
    a_hi = asclt_average(hi, n, Normalization::harmonic);
    CHECK(a_hi >= a_lo);
  }
}

TEST_CASE("expected average iid reference values") {
  // tau = 0: clamped high levels make every term 1
  const GridSize n{10, 10};
  Grid<std::uint8_t> ones(n, 1);
  CHECK(std::abs(expected_average_iid(n, 0.0, Normalization::harmonic) -
                 asclt_average(ones, n, Normalization::harmonic)) <= 1e-14);
  CHECK(std::abs(expected_average_iid(n, 0.0, Normalization::paper_log) -
                 asclt_average(ones, n, Normalization::paper_log)) <= 1e-14);

  // the k = (100,100) term: (1 - 1e-4)^{1e4}
  const double term = std::exp(1e4 * std::log1p(-1e-4));
  CHECK(std::abs(term - 0.367861) < 1e-6);
  CHECK(std::abs(term - std::exp(-1.0)) < 2e-5);

  // value in (0,1) and increasing toward e^{-1} along a ladder
  double prev = 0.0;
  for (int m : {25, 50, 100, 200}) {
    const double e = expected_average_iid(GridSize{m, m}, 1.0, Normalization::harmonic);
    CHECK(e > 0.0);
    CHECK(e < 1.0);
    CHECK(e > prev);
    prev = e;
  }
  CHECK(std::exp(-1.0) - prev > 0.0);
}

TEST_CASE("expected average matches a direct log-space summation oracle") {
  const GridSize n{40, 40};
  const double tau = 1.0;
  double oracle = 0.0;
  for (int k1 = 1; k1 <= 40; ++k1) {
    for (int k2 = 1; k2 <= 40; ++k2) {
      const double m = static_cast<double>(k1) * k2;
      const double p = 1.0 - tau / m;
      oracle += (p <= 0.0 ? 0.0 : std::pow(p, m)) / m;
    }
  }
  oracle /= harmonic_number(40) * harmonic_number(40);
  CHECK(std::abs(expected_average_iid(n, tau, Normalization::harmonic) - oracle) <= 1e-10);
}

TEST_CASE("no exceedance probability (Poisson approximation)") {
  CHECK(no_exceedance_prob_iid(GridSize{7, 9}, 0.0) == 1.0);

  const double p100 = no_exceedance_prob_iid(GridSize{100, 100}, 1.0);
  CHECK(std::abs(p100 - 0.367861) <= 1e-6);
  CHECK(std::abs(p100 - std::exp(-1.0)) <= 2e-5);

  const double p1000 = no_exceedance_prob_iid(GridSize{1000, 1000}, 1.0);
  CHECK(std::abs(p1000 - std::exp(-1.0)) <= 2e-7);

  // clamp note: tau beyond the site count
  CHECK(no_exceedance_prob_iid(GridSize{2, 2}, 5.0) == 0.0);
}

TEST_CASE("trajectory export") {
  const GridSize n{3, 3};
  const FieldRealization f = sample_iid(n, 12);
  const LevelSchedule s = LevelSchedule::constant(n, 1.0);
  const AscltTrajectory t =
      make_trajectory(f, s, {GridSize{3, 3}}, Normalization::harmonic);
  REQUIRE(t.averages.size() == 1);
  CHECK(std::abs(t.averages[0].second -
                 asclt_average(t.indicator, n, Normalization::harmonic)) <= 1e-15);

  const char* path = "test_traj.csv";
  write_trajectory_csv(t, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "k1,k2,bit,weight,partial_sum");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 9);
  in.close();
  std::remove(path);
}

TEST_SUITE_END();

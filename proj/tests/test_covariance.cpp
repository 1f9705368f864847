#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "ascltsim/covariance.hpp"
#include "oracles.hpp"

using namespace ascltsim;

TEST_SUITE_BEGIN("covariance");

TEST_CASE("choi omega basics and truncation stability") {
  CHECK(choi_omega(0, 1e-12) == 1.0);

  const double w1 = choi_omega(1, 1e-12);
  CHECK(std::abs(w1 - oracles::choi_omega_product(1, 40)) <= 1e-12);
  CHECK(std::abs(w1 - 0.93841) < 1e-5);

  const double w8 = choi_omega(8, 1e-12);
  CHECK(std::abs(w8 - oracles::choi_omega_product(8, 40)) <= 1e-12);
  CHECK(w8 > -1.0);
  CHECK(w8 < 1.0);

  // extending the truncation must not move the value beyond tol
  for (int n : {1, 5, 17, 100, 2048}) {
    const double v = choi_omega(n, 1e-12);
    CHECK(std::abs(v - oracles::choi_omega_product(n, 80)) <= 1e-12);
    CHECK(std::abs(v) <= 1.0);
  }
}

TEST_CASE("choi gamma 1d branch structure") {
  CHECK(choi_gamma_1d(0) == 1.0);

  const double e2 = std::exp(2.0);
  const double g1 = std::sqrt(1.0 - 1.0 / (2.0 * e2)) * oracles::choi_omega_product(1, 40);
  CHECK(std::abs(choi_gamma_1d(1) - g1) <= 1e-12);
  CHECK(std::abs(g1 - 0.9061) < 1e-4);

  // branch switch: n = 7 uses the linear factor, n = 8 the 1/log factor
  const double g7 = std::sqrt(1.0 - 7.0 / (2.0 * e2)) * oracles::choi_omega_product(7, 40);
  CHECK(std::abs(choi_gamma_1d(7) - g7) <= 1e-12);
  const double g8 = std::sqrt(1.0 / std::log(8.0)) * oracles::choi_omega_product(8, 40);
  CHECK(std::abs(choi_gamma_1d(8) - g8) <= 1e-12);

  for (int n = 0; n <= 200; ++n) CHECK(std::abs(choi_gamma_1d(n)) <= 1.0);
}

TEST_CASE("choi gamma 2d separability") {
  CHECK(choi_gamma_2d(0, 0) == 1.0);
  CHECK(std::abs(choi_gamma_2d(1, 0) - choi_gamma_1d(1)) <= 1e-15);
  CHECK(std::abs(choi_gamma_2d(1, 1) - choi_gamma_1d(1) * choi_gamma_1d(1)) <= 1e-15);
  CHECK(std::abs(choi_gamma_2d(1, 1) - 0.8210) < 1e-4);
  oracles::XorShift rng(5);
  for (int i = 0; i < 200; ++i) {
    const int a = rng.integer(0, 60);
    const int b = rng.integer(0, 60);
    CHECK(std::abs(choi_gamma_2d(a, b) - choi_gamma_1d(a) * choi_gamma_1d(b)) <= 1e-12);
  }
}

TEST_CASE("model correlation contracts") {
  IidModel iid;
  CHECK(iid.correlation({1, 1}, {2, 3}) == 0.0);
  CHECK(iid.correlation({2, 3}, {2, 3}) == 1.0);

  ChoiProductModel choi;
  CHECK(choi.correlation({1, 1}, {1, 1}) == 1.0);
  CHECK(std::abs(choi.correlation({1, 1}, {2, 1}) - 0.9061) < 1e-4);

  const auto exp_model = make_expdecay_model(0.5);
  CHECK(exp_model->correlation({1, 1}, {1, 1}) == 1.0);
  CHECK(exp_model->correlation_lag(1, 1) == 0.25);
  CHECK(exp_model->correlation_lag(2, 0) == 0.25);

  // symmetry / diagonal / range properties across models
  oracles::XorShift rng(77);
  const CorrelationModel* models[] = {&iid, &choi, exp_model.get()};
  for (const CorrelationModel* m : models) {
    for (int i = 0; i < 100; ++i) {
      const Site a{rng.integer(1, 30), rng.integer(1, 30)};
      const Site b{rng.integer(1, 30), rng.integer(1, 30)};
      const double r = m->correlation(a, b);
      CHECK(r == m->correlation(b, a));
      CHECK(std::abs(r) <= 1.0);
      CHECK(m->correlation(a, a) == 1.0);
    }
  }
}

TEST_CASE("dominating sequence consistency") {
  ChoiProductModel choi;
  const DominatingSequence* dom = choi.dominating_sequence();
  REQUIRE(dom != nullptr);
  oracles::XorShift rng(11);
  for (int i = 0; i < 300; ++i) {
    const Site a{rng.integer(1, 40), rng.integer(1, 40)};
    const Site b{rng.integer(1, 40), rng.integer(1, 40)};
    if (a == b) continue;
    const double r = std::abs(choi.correlation(a, b));
    const double bound = dom->value(std::abs(a.i1 - b.i1), std::abs(a.i2 - b.i2));
    CHECK(r <= bound + 1e-12);
  }
}

TEST_CASE("explicit grid model validation") {
  // off-diagonal 1.5 must be rejected at construction
  std::vector<double> bad{1.0, 1.5, 1.5, 1.0};
  CHECK_THROWS_AS(ExplicitGridModel(GridSize{2, 1}, bad), ModelError);

  std::vector<double> asym{1.0, 0.5, 0.4, 1.0};
  CHECK_THROWS_AS(ExplicitGridModel(GridSize{2, 1}, asym), ModelError);

  std::vector<double> good{1.0, 0.9, 0.9, 1.0};
  ExplicitGridModel m(GridSize{2, 1}, good);
  CHECK(m.correlation({1, 1}, {2, 1}) == 0.9);
  CHECK_THROWS_AS(m.correlation({1, 1}, {3, 1}), DomainError);
}

TEST_CASE("explicit grid CSV loader") {
  const char* path = "test_corr.csv";
  {
    std::ofstream out(path);
    out << "i1,i2,j1,j2,r\n";
    out << "1,1,1,2,0.5\n";
    out << "1,2,2,1,-0.25\n";
  }
  const auto model = load_explicit_grid_csv(path, GridSize{2, 2});
  CHECK(model->correlation({1, 1}, {1, 2}) == 0.5);
  CHECK(model->correlation({1, 2}, {1, 1}) == 0.5);
  CHECK(model->correlation({2, 1}, {1, 2}) == -0.25);
  CHECK(model->correlation({1, 1}, {2, 2}) == 0.0);
  CHECK(model->correlation({2, 2}, {2, 2}) == 1.0);

  {
    std::ofstream out(path);
    out << "i1,i2,j1,j2,r\n1,1,1,2,0.5\n1,1,1,2,0.5\n";
  }
  CHECK_THROWS_AS(load_explicit_grid_csv(path, GridSize{2, 2}), IoError);

  {
    std::ofstream out(path);
    out << "i1,i2,j1,j2,r\n1,1,1,2,0.5\n1,2,1,1,0.6\n";  // mirrored mismatch
  }
  CHECK_THROWS_AS(load_explicit_grid_csv(path, GridSize{2, 2}), IoError);

  {
    std::ofstream out(path);
    out << "i1,i2,j1,j2,r\n1,1,1,2,1.5\n";
  }
  CHECK_THROWS_AS(load_explicit_grid_csv(path, GridSize{2, 2}), ModelError);
  std::remove(path);
}

TEST_CASE("model catalog") {
  CHECK(parse_model("iid")->id() == "iid");
  CHECK(parse_model("choi")->id() == "choi");
  CHECK(parse_model("expdecay:0.5")->correlation_lag(1, 0) == 0.5);
  CHECK_THROWS_AS(parse_model("expdecay:1.5"), ModelError);
  CHECK_THROWS_AS(parse_model("nosuch"), ConfigError);
  CHECK_THROWS_AS(parse_model("csv:/nonexistent/x.csv:2x2"), IoError);
}

TEST_CASE("psd check") {
  IidModel iid;
  const PsdReport r = check_psd(iid, GridSize{5, 5});
  CHECK(r.pass);
  CHECK(std::abs(r.min_eigenvalue - 1.0) <= 1e-12);

  ChoiProductModel choi;
  for (int s = 2; s <= 6; ++s) {
    const PsdReport rc = check_psd(choi, GridSize{s, s});
    CHECK(rc.pass);
    CHECK(rc.min_eigenvalue >= -1e-8);
  }

  CHECK_THROWS_AS(check_psd(iid, GridSize{40, 40}, 1024), SizeError);
}

TEST_CASE("decay condition: iid passes with zero margins") {
  IidModel iid;
  const DecayReport r = check_decay_condition(iid, 0.5, GridSize{256, 256});
  CHECK(r.pass());
  CHECK(r.axis1.margin == 0.0);
  CHECK(r.axis2.margin == 0.0);
  CHECK(r.joint.margin == 0.0);
  CHECK(r.sup_abs == 0.0);
}

TEST_CASE("decay condition: log^-2 dominating sequence passes at eps=0.5") {
  FunctionSequence rho(
      [](int l1, int l2) { return std::pow(std::log(2.0 + l1 + l2), -2.0); }, "logdecay");
  const DecayReport r = check_decay_condition(rho, 0.5, GridSize{4096, 4096});
  CHECK(r.axis1.pass);
  CHECK(r.axis2.pass);
  CHECK(r.joint.pass);
  // scaled sequence is (log)^{-0.5}-ish: margin stays small and early
  CHECK(r.axis1.margin < 1.0);
}

TEST_CASE("decay condition: choi axis sequences flagged as diverging") {
  ChoiProductModel choi;
  const DecayReport r = check_decay_condition(choi, 0.5, GridSize{4096, 4096});
  CHECK_FALSE(r.axis1.pass);
  CHECK_FALSE(r.axis2.pass);
  // running maxima keep growing across the probe
  const auto& rm = r.axis1.running_max;
  REQUIRE(rm.size() >= 4);
  CHECK(rm.back() > rm[rm.size() / 2] * 1.2);
  CHECK(r.sup_abs < 1.0);  // sup_{n != 0} |gamma_n| < 1
}

TEST_CASE("decay condition requires a declared dominating sequence") {
  ExplicitGridModel m(GridSize{1, 2}, {1.0, 0.3, 0.3, 1.0});
  CHECK_THROWS_AS(check_decay_condition(m, 0.5, GridSize{64, 64}), ConfigError);
}

TEST_CASE("squared sum profile") {
  ChoiProductModel choi;
  const SquaredSumProfile p = squared_sum_profile(choi, 128);
  CHECK(p.one_d[0] == 1.0);
  const double g1 = choi_gamma_1d(1);
  CHECK(std::abs(p.one_d[1] - (1.0 + g1 * g1)) <= 1e-12);
  for (std::size_t i = 1; i < p.one_d.size(); ++i) {
    CHECK(p.one_d[i] >= p.one_d[i - 1]);
    // strict whenever the increment is representable next to the sum
    const double g = choi_gamma_1d(static_cast<int>(i));
    if (g * g > 1e-12) CHECK(p.one_d[i] > p.one_d[i - 1]);
  }
  REQUIRE(!p.two_d_dyadic.empty());
  // 2-D values are the squared per-axis sums (separability)
  for (const auto& [m, v] : p.two_d_dyadic) {
    const double axis = p.one_d[static_cast<std::size_t>(m)] - 1.0;
    CHECK(std::abs(v - axis * axis) <= 1e-12);
  }
}

TEST_SUITE_END();

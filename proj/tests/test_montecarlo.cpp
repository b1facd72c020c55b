#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "sdelaw/montecarlo.hpp"
#include "sdelaw/oscillator.hpp"
#include "sdelaw/rng.hpp"
#include "sdelaw/variance.hpp"

using namespace sdelaw;

namespace {
const OscillatorModel kModel{1.0, 1.0, 0.0, 5.0};
}

TEST_CASE("counter rng: deterministic, seed-sensitive, sane moments") {
  const CounterRng a{123}, b{123}, c{124};
  for (std::uint64_t i = 0; i < 64; ++i) {
    CHECK(a.uniform(7, i) == b.uniform(7, i));
    CHECK(a.normal(7, i) == b.normal(7, i));
    CHECK(a.uniform(7, i) != c.uniform(7, i));
    CHECK(a.uniform(7, i) > 0.0);
    CHECK(a.uniform(7, i) < 1.0);
  }
  // Stream separation: different streams decorrelate.
  CHECK(a.uniform(1, 0) != a.uniform(2, 0));

  double sum = 0, sum2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = a.normal(0, static_cast<std::uint64_t>(i));
    sum += z;
    sum2 += z * z;
  }
  CHECK(std::abs(sum / n) <= 3.0 / std::sqrt(static_cast<double>(n)));
  CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("error sampler: law matches the exact Gaussian") {
  const StepScheme s = build_scheme_tn(SchemeFamily::optimal, 0.0, 5.0, 32);
  const ErrorSampler sampler = build_error_sampler(kModel, s);
  const ErrorLaw law = variance_brute(kModel, s);
  CHECK(sampler.total_sigma * sampler.total_sigma == doctest::Approx(law.variance).epsilon(1e-12));
  CHECK(sampler.sigmas.size() == 32);

  // Bit-identical across instances with the same seed, different otherwise.
  const CounterRng r1{7}, r2{7}, r3{8};
  CHECK(sampler.draw(r1, 11) == sampler.draw(r2, 11));
  CHECK(sampler.draw(r1, 11) != sampler.draw(r3, 11));

  // Sample variance within 4 standard errors of the exact value.
  const std::size_t M = 200000;
  double sum = 0, sum2 = 0;
  for (std::size_t i = 0; i < M; ++i) {
    const double e = sampler.draw(r1, i);
    sum += e;
    sum2 += e * e;
  }
  const double mean = sum / static_cast<double>(M);
  const double var = sum2 / static_cast<double>(M) - mean * mean;
  const double se = law.variance * std::sqrt(2.0 / static_cast<double>(M));
  CHECK(std::abs(var - law.variance) <= 4.0 * se);
  CHECK(std::abs(mean - sampler.mean) <=
        4.0 * std::sqrt(law.variance / static_cast<double>(M)));
}

TEST_CASE("variance scan: reference column and empirical agreement") {
  const MCConfig mc{2000, 99, 512};
  const std::vector<double> Ts = {5.0, 10.0};
  const auto rows = mc_variance_scan(kModel, SchemeFamily::optimal, 0.0, Ts, 64, mc);
  REQUIRE(rows.size() == 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double T = Ts[i];
    CHECK(rows[i].T == T);
    CHECK(rows[i].h == doctest::Approx(T / 64.0).epsilon(1e-15));
    const OscillatorModel m{kModel.alpha, kModel.x0, kModel.y0, T};
    const StepScheme s = build_scheme_tn(SchemeFamily::optimal, 0.0, T, 64);
    const double closed = variance_closed(m, s).first.variance / (rows[i].h * rows[i].h);
    CHECK(rows[i].var_closed_over_h2 == doctest::Approx(closed).epsilon(1e-12));
    CHECK(rows[i].bootstrap_se_over_h2 > 0.0);
    CHECK(std::abs(rows[i].var_emp_over_h2 - closed) <= 4.0 * rows[i].bootstrap_se_over_h2);
    CHECK(rows[i].K_T ==
          doctest::Approx(error_constant(SchemeFamily::optimal, 0, 1.0, T).K_T).epsilon(1e-12));
  }
  // Same config twice: identical output (counter rng, no shared state).
  const auto again = mc_variance_scan(kModel, SchemeFamily::optimal, 0.0, Ts, 64, mc);
  for (std::size_t i = 0; i < rows.size(); ++i)
    CHECK(rows[i].var_emp_over_h2 == again[i].var_emp_over_h2);
}

TEST_CASE("clt check: standardized samples pass KS against the limit law") {
  const OscillatorModel m{1.0, 1.0, 0.0, 20.0};
  const StepScheme s = build_scheme_tn(SchemeFamily::optimal, 0.0, 20.0, 128);
  const double K = error_constant(SchemeFamily::optimal, 0, 1.0, 20.0).K_T;
  const CltReport rep = clt_check(m, s, K, 10000, 1);
  CHECK(rep.M == 10000);
  CHECK(rep.ks_critical_1pct == doctest::Approx(ks_critical_value(10000, 0.01)).epsilon(1e-12));
  CHECK(rep.ks_statistic < rep.ks_critical_1pct);
  CHECK(rep.m2_gap < 0.1);
  CHECK(rep.m4_gap < 0.2);
  CHECK_THROWS(clt_check(m, s, K, 50, 1));
  CHECK_THROWS(clt_check(m, s, 0.0, 10000, 1));
}

TEST_CASE("ks critical value follows the asymptotic formula") {
  CHECK(ks_critical_value(10000, 0.01) ==
        doctest::Approx(std::sqrt(-0.5 * std::log(0.005)) / 100.0).epsilon(1e-12));
  CHECK(ks_critical_value(400, 0.05) ==
        doctest::Approx(std::sqrt(-0.5 * std::log(0.025)) / 20.0).epsilon(1e-12));
}

TEST_CASE("rate estimate: recovers the Gaussian Legendre transform") {
  // For a Gaussian error the scaled cumulant limit is analytic:
  // I(y) = (y - m)^2 / (2 N^2 v), so the fitted curvature must be 1/(N^2 v).
  const OscillatorModel m{1.0, 1.0, 0.0, 2.0};
  const StepScheme s = build_scheme_tn(SchemeFamily::beta, 0.25, 2.0, 16);
  const ErrorLaw law = variance_brute(m, s);
  const LambdaGrid grid;  // [-2, 2] step 1e-4
  const RateEstimate est = estimate_rate_function(m, s, grid, 2000, 5);
  REQUIRE(est.lambdas.size() == grid.count);

  std::size_t usable = 0;
  for (std::size_t j = 0; j < est.usable.size(); ++j) {
    if (!est.usable[j]) continue;
    ++usable;
    CHECK(std::isfinite(est.Lambda_vals[j]));
    CHECK(std::isfinite(est.I_vals[j]));
    CHECK(est.I_vals[j] >= -1e-9);
  }
  CHECK(usable >= 10);
  // Weak convexity of the empirical log-MGF.
  CHECK(est.nonconvex_count == 0);

  const RateCurvatureFit fit = fit_rate_curvature(est);
  const double truth = 1.0 / (256.0 * law.variance);
  CHECK(fit.points_used >= 5);
  CHECK(fit.curvature == doctest::Approx(truth).epsilon(0.25));

  // Determinism: the estimate is a pure function of the seed.
  const RateEstimate est2 = estimate_rate_function(m, s, grid, 2000, 5);
  CHECK(est.Lambda_vals[grid.count / 2 + 7] == est2.Lambda_vals[grid.count / 2 + 7]);
  // And invariant under the worker count (chunked lambda ranges).
  const RateEstimate est4 = estimate_rate_function(m, s, grid, 2000, 5,
                                                   MgfNormalization::inv_n0_squared, 3);
  CHECK(est.Lambda_vals[grid.count / 2 + 7] == est4.Lambda_vals[grid.count / 2 + 7]);
}

TEST_CASE("rate estimate: alternative normalization rescales the cumulant") {
  const OscillatorModel m{1.0, 1.0, 0.0, 2.0};
  const StepScheme s = build_scheme_tn(SchemeFamily::beta, 0.25, 2.0, 16);
  const LambdaGrid grid{-0.01, 1e-4, 201};
  const RateEstimate sq = estimate_rate_function(m, s, grid, 500, 5,
                                                 MgfNormalization::inv_n0_squared);
  const RateEstimate lin = estimate_rate_function(m, s, grid, 500, 5, MgfNormalization::inv_n0);
  // Same samples, prefactor differs by a factor of N0.
  CHECK(lin.Lambda_vals[100] == doctest::Approx(16.0 * sq.Lambda_vals[100]).epsilon(1e-12));
}

TEST_CASE("joint path check: quadrature bias shrinks with refinement") {
  const OscillatorModel m{1.0, 1.0, 0.0, 2.0};
  const StepScheme s = build_scheme_tn(SchemeFamily::optimal, 0.0, 2.0, 16);
  const JointPathReport coarse = joint_path_check(m, s, 4, 4000, 3);
  const JointPathReport fine = joint_path_check(m, s, 32, 4000, 3);
  const double exact = variance_brute(m, s).variance;
  CHECK(coarse.var_exact == doctest::Approx(exact).epsilon(1e-12));
  CHECK(std::abs(fine.bias) < std::abs(coarse.bias) + 0.05 * exact);
  CHECK(fine.var_emp == doctest::Approx(exact).epsilon(0.15));
}

TEST_CASE("almost-sure convergence illustration: quantiles shrink") {
  const auto rows = slln_demo(kModel, SchemeFamily::optimal, 0.0, {8, 32, 128}, 2000, 11);
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    CHECK(rows[i + 1].q99_abs_error < rows[i].q99_abs_error);
    CHECK(rows[i + 1].mean_abs_error < rows[i].mean_abs_error);
  }
  for (const auto& r : rows) CHECK(r.mean_abs_error <= r.rms_bound);
}

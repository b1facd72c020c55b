#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sdelaw/oscillator.hpp"
#include "sdelaw/variance.hpp"

using namespace sdelaw;

namespace {

const OscillatorModel kModel{1.0, 1.0, 0.5, 2.0};  // alpha, x0, y0, T (T overridden below)

OscillatorModel model_at(double T) { return OscillatorModel{1.0, 1.0, 0.5, T}; }

}  // namespace

TEST_CASE("brute-force variance matches high-precision quadrature references") {
  // Frozen from a 50-digit per-interval quadrature of the Ito isometry with
  // scheme weights taken from exact matrix powers (alpha = 1, x0 = 1, y0 = 1/2).
  struct Ref {
    SchemeFamily family;
    double param, T;
    std::size_t N;
    double var, mean;
  };
  const std::vector<Ref> refs = {
      {SchemeFamily::beta, 0.25, 2.0, 16, 0.0018040832284727472957, -0.026412969529448227105},
      {SchemeFamily::theta, 0.25, 2.0, 16, 0.0036343726302156589969, 0.0078617467817994740244},
      {SchemeFamily::optimal, 0.0, 5.0, 32, 0.0048047449489916836738, 0.0},
      {SchemeFamily::integral, 0.0, 1.0, 8, 0.0037296357533509951834, 0.0},
      {SchemeFamily::pc_em_bem, 0.0, 2.0, 16, 0.0097622040061469590067, -0.025155176464393800035},
      {SchemeFamily::half_h, 0.0, 1.0, 8, 0.00094885799631184579284, 0.0},
  };
  for (const auto& r : refs) {
    const OscillatorModel m = model_at(r.T);
    const StepScheme s = build_scheme_tn(r.family, r.param, r.T, r.N);
    const ErrorLaw law = variance_brute(m, s);
    INFO(family_name(r.family), " T=", r.T, " N=", r.N);
    CHECK(law.variance == doctest::Approx(r.var).epsilon(1e-12));
    if (r.mean == 0.0) {
      // Exact-rotation schemes track the deterministic flow exactly.
      CHECK(std::abs(error_mean(m, s)) <= 1e-13);
    } else {
      CHECK(error_mean(m, s) == doctest::Approx(r.mean).epsilon(1e-12));
    }
  }
}

TEST_CASE("per-interval contributions sum to the brute variance") {
  const StepScheme s = build_scheme_tn(SchemeFamily::beta, 0.3, 5.0, 64);
  const ErrorLaw law = variance_brute(model_at(5.0), s);
  REQUIRE(law.per_interval_var.size() == 64);
  double sum = 0;
  for (double v : law.per_interval_var) {
    CHECK(v >= 0.0);
    sum += v;
  }
  CHECK(sum == doctest::Approx(law.variance).epsilon(1e-12));
}

TEST_CASE("single-step variance of the scheme without position noise") {
  // b = (0, 1): at N = 1 only the exact solution contributes on [0, h], so
  // Var = alpha^2 (h/2 - sin(2h)/4).
  const double h = 0.7;
  const OscillatorModel m{2.0, 1.0, 0.0, h};
  const StepScheme s = build_scheme(SchemeFamily::exponential, 0.0, h, 1);
  const ErrorLaw law = variance_brute(m, s);
  CHECK(law.variance == doctest::Approx(4.0 * (0.5 * h - 0.25 * std::sin(2 * h))).epsilon(1e-13));
}

TEST_CASE("closed-form variance agrees with brute force across the catalog") {
  const std::vector<std::pair<SchemeFamily, double>> catalog = {
      {SchemeFamily::beta, 0.0},     {SchemeFamily::beta, 0.25},
      {SchemeFamily::beta, 0.5},     {SchemeFamily::beta, 1.0},
      {SchemeFamily::theta, 0.0},    {SchemeFamily::theta, 0.25},
      {SchemeFamily::theta, 1.0},    {SchemeFamily::exponential, 0.0},
      {SchemeFamily::integral, 0.0}, {SchemeFamily::optimal, 0.0},
      {SchemeFamily::half_h, 0.0},   {SchemeFamily::pc_em_bem, 0.0},
  };
  for (const auto& [family, param] : catalog) {
    for (double T : {1.0, 2.0, 5.0}) {
      for (std::size_t N : {8, 16, 64}) {
        const OscillatorModel m = model_at(T);
        const StepScheme s = build_scheme_tn(family, param, T, N);
        const double brute = variance_brute(m, s).variance;
        const auto [law, breakdown] = variance_closed(m, s);
        INFO(family_name(family), " param=", param, " T=", T, " N=", N);
        CHECK(law.variance == doctest::Approx(brute).epsilon(1e-9));
        CHECK(law.per_interval_var.empty());
      }
    }
  }
}

TEST_CASE("branch selection and dispatch") {
  const double T = 2.0;
  const OscillatorModel m = model_at(T);

  const StepScheme rot = build_scheme_tn(SchemeFamily::optimal, 0.0, T, 16);
  CHECK(variance_symplectic(m, rot).second.branch == VarianceBranch::symplectic_xi_eq_h);

  const StepScheme mid = build_scheme_tn(SchemeFamily::beta, 0.5, T, 16);
  CHECK(variance_symplectic(m, mid).second.branch == VarianceBranch::symplectic_xi_neq_h);

  const StepScheme pc = build_scheme_tn(SchemeFamily::pc_em_bem, 0.0, T, 16);
  CHECK(variance_nonsymplectic(m, pc).second.branch == VarianceBranch::nonsymplectic);

  CHECK_THROWS_AS(variance_symplectic(m, pc), std::domain_error);
  CHECK_THROWS_AS(variance_nonsymplectic(m, mid), std::domain_error);
}

TEST_CASE("closed-form error constants match the dyadic extrapolation") {
  struct Case {
    SchemeFamily family;
    double param;
  };
  const std::vector<Case> cases = {
      {SchemeFamily::beta, 0.25},   {SchemeFamily::beta, 0.5},
      {SchemeFamily::theta, 0.25},  {SchemeFamily::theta, 0.0},
      {SchemeFamily::theta, 0.75},  {SchemeFamily::theta, 1.0},
      {SchemeFamily::optimal, 0.0}, {SchemeFamily::integral, 0.0},
      {SchemeFamily::half_h, 0.0},  {SchemeFamily::pc_em_bem, 0.0},
  };
  const double T = 5.0;
  const std::vector<std::size_t> Ns = {4096, 8192, 16384};
  for (const auto& c : cases) {
    const ErrorConstant closed = error_constant(c.family, c.param, 1.0, T);
    const ErrorConstant numeric = error_constant_numeric(model_at(T), c.family, c.param, Ns);
    INFO(family_name(c.family), " param=", c.param);
    CHECK(numeric.K_T == doctest::Approx(closed.K_T).epsilon(0.01));
  }
}

TEST_CASE("beta-family constant: formula selection and the two cases") {
  const double T = 20.0, alpha = 1.5;
  const double base = alpha * alpha * (T / 6.0 + std::sin(2 * T) / 12.0);

  for (double beta : {0.0, 0.2, 0.5, 0.8, 1.0}) {
    const ErrorConstant k = error_constant(SchemeFamily::beta, beta, alpha, T);
    CHECK(k.formula_id == ConstantFormula::beta_case1);
    CHECK(k.K_T == doctest::Approx((3 * beta * beta - 3 * beta + 1) * base).epsilon(1e-13));
  }
  // The two roots of 1 - 6 beta (1 - beta) = 0 improve the phase accuracy
  // (xi - h drops to O(h^5)); the constant stays continuous in beta, so it is
  // the generic expression at 3 beta^2 - 3 beta + 1 = 3/4.
  const double root = std::sqrt(6.0) / 6.0;
  for (double beta : {0.5 - root, 0.5 + root}) {
    const ErrorConstant k = error_constant(SchemeFamily::beta, beta, alpha, T);
    CHECK(k.formula_id == ConstantFormula::beta_case2);
    CHECK(k.K_T ==
          doctest::Approx(alpha * alpha * (T / 8.0 + std::sin(2 * T) / 16.0)).epsilon(1e-13));
  }
}

TEST_CASE("beta = 1/2 minimizes the family constant") {
  const double T = 20.0;
  const double kmid = error_constant(SchemeFamily::beta, 0.5, 1.0, T).K_T;
  for (double beta = 0.0; beta <= 1.0001; beta += 0.1) {
    if (std::abs(beta - 0.5) < 1e-9) continue;
    CHECK(error_constant(SchemeFamily::beta, beta, 1.0, T).K_T > kmid);
  }
  // Quadratic factor is bounded below by its value at the midpoint.
  for (double beta = 0.0; beta <= 1.0001; beta += 0.05) {
    CHECK(3 * beta * beta - 3 * beta + 1 >= 0.25 - 1e-14);
  }
}

TEST_CASE("rotation-family expansions and their shared constants") {
  const XiEqHExpansion opt = xi_eq_h_expansion(SchemeFamily::optimal);
  CHECK(opt.b1_1 == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(opt.b1_3 == doctest::Approx(-1.0 / 24.0).epsilon(1e-12));
  CHECK(opt.b2_2 == doctest::Approx(-1.0 / 6.0).epsilon(1e-12));

  const double T = 20.0;
  const double k_exp = error_constant(SchemeFamily::exponential, 0, 1.0, T).K_T;
  const double k_int = error_constant(SchemeFamily::integral, 0, 1.0, T).K_T;
  const double k_opt = error_constant(SchemeFamily::optimal, 0, 1.0, T).K_T;
  const double k_half = error_constant(SchemeFamily::half_h, 0, 1.0, T).K_T;
  CHECK(k_exp == doctest::Approx(T / 6.0 + std::sin(2 * T) / 12.0).epsilon(1e-12));
  CHECK(k_int == doctest::Approx(k_exp).epsilon(1e-12));
  CHECK(k_opt == doctest::Approx(T / 24.0 + std::sin(2 * T) / 48.0).epsilon(1e-12));
  CHECK(k_half == doctest::Approx(k_opt).epsilon(1e-12));
  // The b = (h/2, 1) and averaged-increment schemes attain a quarter of the
  // plain rotation constant.
  CHECK(k_opt < k_exp);
}

TEST_CASE("theta-family constant grows like the cube of the horizon") {
  const double theta = 0.0;
  const double k1 = error_constant(SchemeFamily::theta, theta, 1.0, 40.0).K_T;
  const double k2 = error_constant(SchemeFamily::theta, theta, 1.0, 80.0).K_T;
  CHECK(k2 / k1 == doctest::Approx(8.0).epsilon(0.05));
  const double lead = (2 * theta - 1) * (2 * theta - 1) / 24.0;
  CHECK(k2 == doctest::Approx(lead * 80.0 * 80.0 * 80.0).epsilon(0.05));
}

TEST_CASE("rate function: quadratic scaling and degeneracy") {
  const RateFunction rate = rate_function_closed(0.8, 20.0);
  CHECK(rate(0.0) == 0.0);
  for (double x : {0.3, 1.0, 2.7}) {
    for (double c : {2.0, 5.0, 0.1}) {
      CHECK(rate(c * x) == doctest::Approx(c * c * rate(x)).epsilon(1e-12));
    }
  }
  CHECK(rate.curvature() == doctest::Approx(1.0 / (0.8 * 400.0)).epsilon(1e-12));

  const RateFunction degenerate = rate_function_closed(0.0, 20.0);
  CHECK(degenerate(0.0) == 0.0);
  CHECK(degenerate(1e-9) == std::numeric_limits<double>::infinity());
}

TEST_CASE("normal tail: reference values and stability far out") {
  // Frozen from 40-digit erfc evaluations.
  CHECK(normal_log_tail(1.0) == doctest::Approx(-1.8410216450092635058).epsilon(1e-12));
  CHECK(normal_log_tail(5.0) == doctest::Approx(-15.064998393988725736).epsilon(1e-12));
  CHECK(normal_log_tail(40.0) == doctest::Approx(-804.60844201375378817).epsilon(1e-12));
  CHECK(normal_log_tail(0.0) == doctest::Approx(std::log(0.5)).epsilon(1e-14));
  CHECK(normal_log_tail(-5.0) == doctest::Approx(std::log1p(-std::exp(-15.064998393988725736)))
                                     .epsilon(1e-12));
  // Monotone decreasing through the erfc/asymptotic switch.
  double prev = normal_log_tail(30.0);
  for (double z = 30.5; z <= 45.0; z += 0.5) {
    const double cur = normal_log_tail(z);
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK(normal_log_two_sided(2.0, 4.0) ==
        doctest::Approx(std::log(2.0) + normal_log_tail(1.0)).epsilon(1e-13));
}

TEST_CASE("method comparison favors the smaller constant") {
  const double T = 20.0, eps = 0.1;
  const std::size_t N = 100;
  const double K_s = error_constant(SchemeFamily::optimal, 0, 1.0, T).K_T;
  const double K_ns = error_constant(SchemeFamily::pc_em_bem, 0, 1.0, T).K_T;
  const OscillatorModel m{1.0, 1.0, 0.0, T};
  const StepScheme ss = build_scheme_tn(SchemeFamily::optimal, 0.0, T, N);
  const StepScheme sn = build_scheme_tn(SchemeFamily::pc_em_bem, 0.0, T, N);
  const ErrorLaw law_s = variance_brute(m, ss);
  ErrorLaw law_s_mean = law_s;
  law_s_mean.mean = error_mean(m, ss);
  const ErrorLaw law_ns_raw = variance_brute(m, sn);
  ErrorLaw law_ns = law_ns_raw;
  law_ns.mean = error_mean(m, sn);

  const ComparisonReport rep = compare_methods(K_s, K_ns, T, eps, N, law_s_mean, law_ns);
  CHECK(rep.R_eps > 0.0);
  CHECK(rep.log_ratio_bound == doctest::Approx(-0.5 * 1e4 * rep.R_eps).epsilon(1e-12));
  CHECK(rep.log_tail_centered_s < rep.log_tail_centered_ns);
  CHECK(rep.centered_inequality_holds);
  CHECK(rep.ratio_bound_holds);

  // Equal constants give a vanishing separation rate.
  const ComparisonReport same = compare_methods(K_s, K_s, T, eps, N, law_s_mean, law_s_mean);
  CHECK(std::abs(same.R_eps) <= 1e-18);
}

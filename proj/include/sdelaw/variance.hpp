#pragma once

#include <array>
#include <cstddef>
#include <utility>
#include <vector>

#include "sdelaw/oscillator.hpp"

namespace sdelaw {

/// Exact Gaussian law of the terminal position error e_N = x_N - X_T.
struct ErrorLaw {
  double mean = 0.0;
  double variance = 0.0;
  /// Ito-isometry contribution of each step interval; populated by the
  /// brute-force evaluation, empty when the variance came from a closed form.
  std::vector<double> per_interval_var;
};

enum class VarianceBranch {
  symplectic_xi_neq_h,
  symplectic_xi_eq_h,
  nonsymplectic,
};

/// S1..S4 split of Var(e_N) plus the boundary terms of the closed forms.
struct VarianceBreakdown {
  double S1 = 0, S2 = 0, S3 = 0, S4 = 0;
  /// Z1+, Z1-, Z2+, Z2-, Z3+, Z3- (symplectic xi != h branch).
  std::array<double, 6> Z_terms{};
  /// H1+, H1-, H2+, H2-, H3+, H3-, H4, H5, H6 (non-symplectic branch).
  std::array<double, 9> H_terms{};
  VarianceBranch branch = VarianceBranch::symplectic_xi_neq_h;
  /// Set when a degenerate denominator forced the direct-sum fallback, or
  /// when the branch-ambiguity band was resolved against the brute oracle.
  bool fallback_used = false;
};

enum class ConstantFormula {
  beta_case1,
  beta_case2,
  xi_eq_h,
  theta,
  pc_em_bem,
  numeric_extrapolation,
};

/// Leading coefficient K_T in Var(e_N) = K_T h^2 + O(h^3).
struct ErrorConstant {
  double K_T = 0.0;
  SchemeFamily family = SchemeFamily::custom;
  ConstantFormula formula_id = ConstantFormula::numeric_extrapolation;
};

/// Taylor coefficients of a symplectic scheme with xi = h:
/// a11 = 1 + a11_1 h^2 + a11_2 h^3 + a11_3 h^4 + ...,
/// b1 = b1_1 h + b1_2 h^2 + ..., b2 = 1 + b2_1 h + ... (a22 is determined
/// by tr(A) = 2 cos h).
struct XiEqHExpansion {
  double a11_1 = 0, a11_2 = 0, a11_3 = 0;
  double a12_1 = 0, a12_2 = 0, a12_3 = 0;
  double a21_1 = 0, a21_2 = 0, a21_3 = 0;
  double b1_1 = 0, b1_2 = 0, b1_3 = 0, b1_4 = 0;
  double b2_1 = 0, b2_2 = 0, b2_3 = 0, b2_4 = 0;
};

/// Quadratic LDP rate function I(x) = x^2 / (2 K_T T^2); degenerates to the
/// indicator at zero when K_T = 0.
struct RateFunction {
  double K_T;
  double T;
  double operator()(double x) const;
  /// 1 / (K_T T^2), the second derivative at the minimum (K_T > 0).
  double curvature() const;
};

/// Tail comparison of a symplectic vs a non-symplectic law at horizon T.
struct ComparisonReport {
  double K_s = 0, K_ns = 0;
  double T = 0;
  double epsilon = 0;
  std::size_t N = 0;
  double R_eps = 0;                 ///< eps^2/(2T^2) (1/K_s - 1/K_ns)
  double log_ratio_bound = 0;       ///< -N^2 R_eps / 2
  double log_tail_centered_s = 0;   ///< log P(|e - E e| > eps/N), symplectic
  double log_tail_centered_ns = 0;
  double log_tail_eps_s = 0;        ///< log P(|e| > eps), symplectic
  double log_tail_eps_ns = 0;
  bool centered_inequality_holds = false;
  bool ratio_bound_holds = false;
};

/// E[e_N] from the hat-sequence closed form.
double error_mean(const OscillatorModel& model, const StepScheme& scheme);

/// Per-interval Ito-isometry evaluation of Var(e_N); the module's
/// ground-truth oracle. Each interval integral is done in closed form.
ErrorLaw variance_brute(const OscillatorModel& model, const StepScheme& scheme);

/// Closed-form variance for symplectic schemes (det A = 1); selects the
/// xi != h or xi = h branch. Throws std::domain_error when det A != 1.
std::pair<ErrorLaw, VarianceBreakdown> variance_symplectic(const OscillatorModel& model,
                                                           const StepScheme& scheme);

/// Closed-form variance for non-symplectic schemes (det A != 1).
/// Throws std::domain_error when det A = 1 within tolerance.
std::pair<ErrorLaw, VarianceBreakdown> variance_nonsymplectic(const OscillatorModel& model,
                                                              const StepScheme& scheme);

/// Dispatch on det(A).
std::pair<ErrorLaw, VarianceBreakdown> variance_closed(const OscillatorModel& model,
                                                       const StepScheme& scheme);

/// Closed-form error constant of a catalog family. Throws std::domain_error
/// for families without a closed form (use error_constant_numeric).
ErrorConstant error_constant(SchemeFamily family, double param, double alpha, double T);

/// The xi = h error constant from the expansion coefficients.
ErrorConstant error_constant_xi_eq_h(const XiEqHExpansion& expansion, double alpha, double T);

/// Expansion coefficients of the catalog rotation-matrix families.
XiEqHExpansion xi_eq_h_expansion(SchemeFamily family);

/// Richardson extrapolation of Var(e_N)/h^2 over dyadic N toward h -> 0,
/// assuming the form K h^2 + C h^3. `remainder` receives the fitted C.
ErrorConstant error_constant_numeric(const OscillatorModel& model, SchemeFamily family,
                                     double param, const std::vector<std::size_t>& N_list,
                                     double* remainder = nullptr);

RateFunction rate_function_closed(double K_T, double T);

/// Exact Gaussian tail comparison plus the large-deviation ratio bound.
ComparisonReport compare_methods(double K_s, double K_ns, double T, double epsilon,
                                 std::size_t N, const ErrorLaw& law_s, const ErrorLaw& law_ns);

/// log P(Z > z) for standard normal Z, stable far into the tail.
double normal_log_tail(double z);

/// log P(|X - m| > a) for X ~ N(m, var).
double normal_log_two_sided(double a, double var);

}  // namespace sdelaw

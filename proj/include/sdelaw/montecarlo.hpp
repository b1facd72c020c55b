#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sdelaw/oscillator.hpp"
#include "sdelaw/rng.hpp"
#include "sdelaw/variance.hpp"

namespace sdelaw {

/// Exact-law sampler for e_N: a draw is m_N + sum_j sigma_j Z_j with
/// independent standard normals, one per step interval. Exact in law since
/// the interval integrands are deterministic and the intervals independent.
struct ErrorSampler {
  double mean = 0.0;
  std::vector<double> sigmas;  ///< per-interval standard deviations
  double total_sigma = 0.0;

  double draw(const CounterRng& rng, std::uint64_t sample_index) const;
};

struct MCConfig {
  std::size_t M = 2000;
  std::uint64_t seed = 0;
  std::size_t chunk = 1024;  ///< samples per deterministic stream chunk
};

/// Which prefactor multiplies the empirical log-MGF. The deviation scale of
/// the theory is N^2; the per-N normalization reproduces a differently
/// scaled axis for figure comparison.
enum class MgfNormalization {
  inv_n0_squared,  ///< (1/N0^2) log E[exp(lambda N0^2 e)]
  inv_n0,          ///< (1/N0)  log E[exp(lambda N0^2 e)]
};

struct LambdaGrid {
  double lo = -2.0;
  double step = 1e-4;
  std::size_t count = 40001;

  double at(std::size_t j) const { return lo + step * static_cast<double>(j); }
};

/// Empirical log-MGF samples and Legendre-transform pairs.
struct RateEstimate {
  std::vector<double> lambdas;
  std::vector<double> Lambda_vals;
  std::vector<double> y_vals;  ///< central differences of Lambda on the grid
  std::vector<double> I_vals;  ///< lambda*y - Lambda
  std::vector<bool> usable;    ///< effective-sample-size gate per grid point
  std::size_t nonconvex_count = 0;  ///< negative second differences below -tol
  bool truncated = false;           ///< grid truncated due to overflow
};

/// Quadratic fit of the (y, I) pairs over the usable sub-range.
struct RateCurvatureFit {
  double curvature = 0.0;  ///< fitted I''(y) near the minimum
  double y_min = 0.0;
  std::size_t points_used = 0;
};

struct CltReport {
  std::size_t M = 0;
  double ks_statistic = 0.0;
  double ks_critical_1pct = 0.0;
  double m2_gap = 0.0;  ///< |m2_hat - T^2 K_T| / (T^2 K_T)
  double m4_gap = 0.0;  ///< |m4_hat - 3 (T^2 K_T)^2| relative
};

struct VarianceScanRow {
  double T = 0.0;
  std::size_t N = 0;
  double h = 0.0;
  double var_emp_over_h2 = 0.0;
  double var_closed_over_h2 = 0.0;
  double bootstrap_se_over_h2 = 0.0;
  double K_T = 0.0;  ///< closed-form error constant reference, when available
};

struct JointPathReport {
  std::size_t refine = 0;
  double var_emp = 0.0;
  double var_exact = 0.0;
  double bias = 0.0;  ///< var_emp - var_exact
};

struct SllnRow {
  std::size_t N = 0;
  double h = 0.0;
  double q99_abs_error = 0.0;
  double mean_abs_error = 0.0;
  double rms_bound = 0.0;  ///< sqrt(2 Var + 2 (E e)^2)
};

ErrorSampler build_error_sampler(const OscillatorModel& model, const StepScheme& scheme);

/// Empirical Var(e_N)/h^2 against T, with bootstrap standard errors and the
/// closed-form reference. `base` supplies alpha and the initial data; its T
/// is overridden per row.
std::vector<VarianceScanRow> mc_variance_scan(const OscillatorModel& base, SchemeFamily family,
                                              double param, const std::vector<double>& T_list,
                                              std::size_t N, const MCConfig& mc);

/// KS distance of the standardized samples of N e_N - E[N e_N] against
/// N(0, T^2 K_T), plus second/fourth moment gaps. Rejects M < 100 and
/// K_T = 0 (degenerate Dirac limit).
CltReport clt_check(const OscillatorModel& model, const StepScheme& scheme, double K_T,
                    std::size_t M, std::uint64_t seed);

/// Empirical scaled log-MGF over the lambda grid (common random numbers:
/// the M0 samples are drawn once and reused for every lambda) and the
/// Legendre pairs (y(lambda), I(y)). Exponentials are max-shifted.
RateEstimate estimate_rate_function(const OscillatorModel& model, const StepScheme& scheme,
                                    const LambdaGrid& grid, std::size_t M0, std::uint64_t seed,
                                    MgfNormalization norm = MgfNormalization::inv_n0_squared,
                                    unsigned workers = 0);

RateCurvatureFit fit_rate_curvature(const RateEstimate& estimate);

/// Trajectory-level validation of the sampler: Brownian paths on a fine
/// sub-grid drive both the scheme recursion (coarse increments) and a
/// first-order quadrature of the exact Wiener integral.
JointPathReport joint_path_check(const OscillatorModel& model, const StepScheme& scheme,
                                 std::size_t refine, std::size_t M, std::uint64_t seed);

/// Quantiles of |e_N| shrinking along an increasing N list; an illustration
/// of the almost-sure convergence, not a proof.
std::vector<SllnRow> slln_demo(const OscillatorModel& model, SchemeFamily family, double param,
                               const std::vector<std::size_t>& N_list, std::size_t M,
                               std::uint64_t seed);

/// Asymptotic two-sided KS critical value at significance level `alpha`.
double ks_critical_value(std::size_t M, double alpha);

}  // namespace sdelaw

#include "sdelaw/montecarlo.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "sdelaw/compensated.hpp"

namespace sdelaw {

namespace {

/// Sample variance (two-pass, compensated).
double sample_variance(const std::vector<double>& xs, double* mean_out = nullptr) {
  KahanSum<double> sum;
  for (double x : xs) sum += x;
  const double mean = sum.value() / static_cast<double>(xs.size());
  KahanSum<double> sq;
  for (double x : xs) sq += (x - mean) * (x - mean);
  if (mean_out) *mean_out = mean;
  return sq.value() / static_cast<double>(xs.size() - 1);
}

double standard_normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

void parallel_for(std::size_t count, unsigned workers, const auto& body) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  if (workers == 1 || count < 2 * workers) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t block = (count + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = w * block;
    const std::size_t hi = std::min(count, lo + block);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

constexpr double kEssFraction = 1.0 / 3.0;  // usable-lambda gate

}  // namespace

double ErrorSampler::draw(const CounterRng& rng, std::uint64_t sample_index) const {
  KahanSum<double> acc;
  for (std::size_t j = 0; j < sigmas.size(); ++j)
    acc += sigmas[j] * rng.normal(sample_index, j);
  return mean + acc.value();
}

ErrorSampler build_error_sampler(const OscillatorModel& model, const StepScheme& scheme) {
  const ErrorLaw law = variance_brute(model, scheme);
  ErrorSampler sampler;
  sampler.mean = law.mean;
  sampler.sigmas.reserve(law.per_interval_var.size());
  for (double v : law.per_interval_var) sampler.sigmas.push_back(std::sqrt(v));
  sampler.total_sigma = std::sqrt(law.variance);
  return sampler;
}

std::vector<VarianceScanRow> mc_variance_scan(const OscillatorModel& base, SchemeFamily family,
                                              double param, const std::vector<double>& T_list,
                                              std::size_t N, const MCConfig& mc) {
  std::vector<VarianceScanRow> rows;
  rows.reserve(T_list.size());
  for (double T : T_list) {
    OscillatorModel model(base.alpha, base.x0, base.y0, T);
    const StepScheme scheme = build_scheme_tn(family, param, T, N);
    const ErrorSampler sampler = build_error_sampler(model, scheme);
    const CounterRng rng{CounterRng::mix64(mc.seed ^ std::bit_cast<std::uint64_t>(T))};

    std::vector<double> samples(mc.M);
    parallel_for(mc.M, 0, [&](std::size_t i) { samples[i] = sampler.draw(rng, i); });

    VarianceScanRow row;
    row.T = T;
    row.N = N;
    row.h = scheme.h;
    const double h2 = scheme.h * scheme.h;
    row.var_emp_over_h2 = sample_variance(samples) / h2;
    row.var_closed_over_h2 = variance_closed(model, scheme).first.variance / h2;
    if (scheme.family != SchemeFamily::custom)
      row.K_T = error_constant(family, param, base.alpha, T).K_T;

    // Bootstrap SE of the sample variance.
    constexpr std::size_t B = 200;
    const CounterRng boot{CounterRng::mix64(rng.seed ^ 0x626f6f74ULL)};
    std::vector<double> boot_vars(B);
    parallel_for(B, 0, [&](std::size_t b) {
      std::vector<double> resample(mc.M);
      for (std::size_t i = 0; i < mc.M; ++i)
        resample[i] = samples[boot.bits(b, i) % mc.M];
      boot_vars[b] = sample_variance(resample);
    });
    row.bootstrap_se_over_h2 = std::sqrt(sample_variance(boot_vars)) / h2;
    rows.push_back(row);
  }
  return rows;
}

double ks_critical_value(std::size_t M, double alpha) {
  return std::sqrt(-0.5 * std::log(0.5 * alpha)) / std::sqrt(static_cast<double>(M));
}

CltReport clt_check(const OscillatorModel& model, const StepScheme& scheme, double K_T,
                    std::size_t M, std::uint64_t seed) {
  if (M < 100) throw std::invalid_argument("clt_check: M must be >= 100");
  if (!(K_T > 0.0))
    throw std::domain_error("clt_check: K_T = 0 gives a degenerate Dirac limit");

  const ErrorSampler sampler = build_error_sampler(model, scheme);
  const CounterRng rng{seed};
  const double Nd = static_cast<double>(scheme.N);
  const double T = Nd * scheme.h;
  const double limit_var = T * T * K_T;
  const double limit_sd = std::sqrt(limit_var);

  std::vector<double> centered(M);
  parallel_for(M, 0, [&](std::size_t i) {
    centered[i] = Nd * (sampler.draw(rng, i) - sampler.mean);
  });

  KahanSum<double> m2, m4;
  std::vector<double> standardized(M);
  for (std::size_t i = 0; i < M; ++i) {
    const double c = centered[i];
    m2 += c * c;
    m4 += c * c * c * c;
    standardized[i] = c / limit_sd;
  }
  std::sort(standardized.begin(), standardized.end());

  double ks = 0.0;
  const double Md = static_cast<double>(M);
  for (std::size_t i = 0; i < M; ++i) {
    const double F = standard_normal_cdf(standardized[i]);
    ks = std::max(ks, std::max(static_cast<double>(i + 1) / Md - F,
                               F - static_cast<double>(i) / Md));
  }

  CltReport rep;
  rep.M = M;
  rep.ks_statistic = ks;
  rep.ks_critical_1pct = ks_critical_value(M, 0.01);
  rep.m2_gap = std::abs(m2.value() / Md - limit_var) / limit_var;
  rep.m4_gap = std::abs(m4.value() / Md - 3.0 * limit_var * limit_var) /
               (3.0 * limit_var * limit_var);
  return rep;
}

RateEstimate estimate_rate_function(const OscillatorModel& model, const StepScheme& scheme,
                                    const LambdaGrid& grid, std::size_t M0, std::uint64_t seed,
                                    MgfNormalization norm, unsigned workers) {
  if (M0 < 2) throw std::invalid_argument("estimate_rate_function: M0 must be >= 2");
  if (grid.count < 3 || !(grid.step > 0))
    throw std::invalid_argument("estimate_rate_function: grid must be uniform with >= 3 points");

  const ErrorSampler sampler = build_error_sampler(model, scheme);
  const CounterRng rng{seed};
  const double N0 = static_cast<double>(scheme.N);
  const double prefactor =
      norm == MgfNormalization::inv_n0_squared ? 1.0 / (N0 * N0) : 1.0 / N0;

  // Common random numbers: one sample set reused across the whole grid.
  std::vector<double> scaled(M0);  // N0^2 * e^(i)
  parallel_for(M0, workers, [&](std::size_t i) {
    scaled[i] = N0 * N0 * sampler.draw(rng, i);
  });

  RateEstimate est;
  est.lambdas.resize(grid.count);
  est.Lambda_vals.resize(grid.count);
  est.y_vals.assign(grid.count, 0.0);
  est.I_vals.assign(grid.count, 0.0);
  est.usable.assign(grid.count, false);
  std::vector<char> ess_ok(grid.count, 0);

  parallel_for(grid.count, workers, [&](std::size_t j) {
    const double lambda = grid.at(j);
    double mx = -std::numeric_limits<double>::infinity();
    for (double s : scaled) mx = std::max(mx, lambda * s);
    double sum = 0.0, sum_sq = 0.0;
    for (double s : scaled) {
      const double w = std::exp(lambda * s - mx);
      sum += w;
      sum_sq += w * w;
    }
    est.lambdas[j] = lambda;
    est.Lambda_vals[j] =
        prefactor * (mx + std::log(sum / static_cast<double>(M0)));
    const double ess = sum * sum / sum_sq;
    ess_ok[j] = ess >= kEssFraction * static_cast<double>(M0) ? 1 : 0;
  });

  // y by central differences; endpoints one-sided and excluded from fits.
  const double inv2h = 1.0 / (2.0 * grid.step);
  for (std::size_t j = 0; j < grid.count; ++j) {
    if (j == 0)
      est.y_vals[j] = (est.Lambda_vals[1] - est.Lambda_vals[0]) / grid.step;
    else if (j + 1 == grid.count)
      est.y_vals[j] = (est.Lambda_vals[j] - est.Lambda_vals[j - 1]) / grid.step;
    else
      est.y_vals[j] = (est.Lambda_vals[j + 1] - est.Lambda_vals[j - 1]) * inv2h;
    est.I_vals[j] = est.lambdas[j] * est.y_vals[j] - est.Lambda_vals[j];
    est.usable[j] = j > 0 && j + 1 < grid.count && ess_ok[j] && ess_ok[j - 1] && ess_ok[j + 1];
  }

  constexpr double kConvexityTol = 1e-10;
  for (std::size_t j = 1; j + 1 < grid.count; ++j) {
    const double d2 =
        est.Lambda_vals[j + 1] - 2.0 * est.Lambda_vals[j] + est.Lambda_vals[j - 1];
    if (d2 < -kConvexityTol) ++est.nonconvex_count;
  }
  return est;
}

RateCurvatureFit fit_rate_curvature(const RateEstimate& estimate) {
  // Least-squares quadratic I = c0 + c1 y + c2 y^2 over the usable pairs.
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0;
  double t0 = 0, t1 = 0, t2 = 0;
  std::size_t used = 0;
  for (std::size_t j = 0; j < estimate.y_vals.size(); ++j) {
    if (!estimate.usable[j]) continue;
    const double y = estimate.y_vals[j];
    const double I = estimate.I_vals[j];
    const double y2 = y * y;
    s0 += 1;
    s1 += y;
    s2 += y2;
    s3 += y2 * y;
    s4 += y2 * y2;
    t0 += I;
    t1 += I * y;
    t2 += I * y2;
    ++used;
  }
  if (used < 5)
    throw std::runtime_error("fit_rate_curvature: too few usable (y, I) pairs");

  // Solve the 3x3 normal equations by Cramer's rule.
  const double det = s0 * (s2 * s4 - s3 * s3) - s1 * (s1 * s4 - s2 * s3) +
                     s2 * (s1 * s3 - s2 * s2);
  const double c1 = (s0 * (t1 * s4 - s3 * t2) - t0 * (s1 * s4 - s2 * s3) +
                     s2 * (s1 * t2 - t1 * s2)) /
                    det;
  const double c2 = (s0 * (s2 * t2 - t1 * s3) - s1 * (s1 * t2 - t1 * s2) +
                     t0 * (s1 * s3 - s2 * s2)) /
                    det;
  RateCurvatureFit fit;
  fit.curvature = 2.0 * c2;
  fit.y_min = c2 != 0.0 ? -c1 / (2.0 * c2) : 0.0;
  fit.points_used = used;
  return fit;
}

JointPathReport joint_path_check(const OscillatorModel& model, const StepScheme& scheme,
                                 std::size_t refine, std::size_t M, std::uint64_t seed) {
  if (refine < 1) throw std::invalid_argument("joint_path_check: refine must be >= 1");
  const CounterRng rng{seed};
  const double h = scheme.h;
  const std::size_t N = scheme.N;
  const double T = static_cast<double>(N) * h;
  const double delta = h / static_cast<double>(refine);
  const double sqrt_delta = std::sqrt(delta);

  std::vector<double> errors(M);
  parallel_for(M, 0, [&](std::size_t i) {
    double x = model.x0, y = model.y0;
    KahanSum<double> wiener;  // left-point quadrature of int sin(T-s) dW
    for (std::size_t n = 0; n < N; ++n) {
      double coarse_dw = 0.0;
      for (std::size_t r = 0; r < refine; ++r) {
        const double dw = sqrt_delta * rng.normal(i, n * refine + r);
        coarse_dw += dw;
        const double s = (static_cast<double>(n) + static_cast<double>(r) / refine) * h;
        wiener += std::sin(T - s) * dw;
      }
      const double xn = scheme.a11 * x + scheme.a12 * y + model.alpha * scheme.b1 * coarse_dw;
      const double yn = scheme.a21 * x + scheme.a22 * y + model.alpha * scheme.b2 * coarse_dw;
      x = xn;
      y = yn;
    }
    const double exact = model.x0 * std::cos(T) + model.y0 * std::sin(T) +
                         model.alpha * wiener.value();
    errors[i] = x - exact;
  });

  JointPathReport rep;
  rep.refine = refine;
  rep.var_emp = sample_variance(errors);
  rep.var_exact = variance_brute(model, scheme).variance;
  rep.bias = rep.var_emp - rep.var_exact;
  return rep;
}

std::vector<SllnRow> slln_demo(const OscillatorModel& model, SchemeFamily family, double param,
                               const std::vector<std::size_t>& N_list, std::size_t M,
                               std::uint64_t seed) {
  std::vector<SllnRow> rows;
  rows.reserve(N_list.size());
  for (std::size_t N : N_list) {
    const StepScheme scheme = build_scheme_tn(family, param, model.T, N);
    const ErrorSampler sampler = build_error_sampler(model, scheme);
    const CounterRng rng{CounterRng::mix64(seed ^ N)};
    std::vector<double> abs_err(M);
    parallel_for(M, 0, [&](std::size_t i) {
      abs_err[i] = std::abs(sampler.draw(rng, i));
    });
    std::sort(abs_err.begin(), abs_err.end());
    SllnRow row;
    row.N = N;
    row.h = scheme.h;
    row.q99_abs_error = abs_err[static_cast<std::size_t>(0.99 * (M - 1))];
    KahanSum<double> mean;
    for (double e : abs_err) mean += e;
    row.mean_abs_error = mean.value() / static_cast<double>(M);
    const ErrorLaw law = variance_brute(model, scheme);
    row.rms_bound = std::sqrt(2.0 * law.variance + 2.0 * law.mean * law.mean);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace sdelaw

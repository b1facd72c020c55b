#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace sdelaw {

/// Linear stochastic oscillator  x'' + x = alpha * dW,  written as a
/// 2-dimensional system in (position, velocity).
struct OscillatorModel {
  double alpha = 1.0;  ///< noise amplitude, > 0
  double x0 = 1.0;     ///< initial position
  double y0 = 0.0;     ///< initial velocity
  double T = 20.0;     ///< time horizon, > 0

  OscillatorModel() = default;
  OscillatorModel(double alpha_, double x0_, double y0_, double T_);
};

/// One-step scheme family tags.
enum class SchemeFamily {
  beta,         ///< symplectic beta-methods, beta in [0,1]
  theta,        ///< stochastic theta-methods, theta in [0,1/2) u (1/2,1]
  exponential,  ///< exact rotation, b = (0, 1)
  integral,     ///< exact rotation, b = (sin h, cos h)
  optimal,      ///< exact rotation, b = (2 sin^2(h/2)/h, sin(h)/h)
  half_h,       ///< exact rotation, b = (h/2, 1)
  pc_em_bem,    ///< predictor-corrector EM/BEM
  custom,
};

std::string family_name(SchemeFamily family);
SchemeFamily family_from_name(const std::string& name);

/// One-step map  u_{n+1} = A u_n + alpha b dW_n  with step size h and
/// step count N, N*h = T.
struct StepScheme {
  double a11, a12, a21, a22;
  double b1, b2;
  double h;       ///< step size, > 0
  std::size_t N;  ///< step count
  SchemeFamily family = SchemeFamily::custom;
  double param = 0.0;  ///< beta or theta where applicable

  double trace() const { return a11 + a22; }
  double det() const { return a11 * a22 - a12 * a21; }
  /// a12*b2 - a22*b1, the coefficient of alpha_hat_{N-2-j} in the noise sum.
  double cross() const { return a12 * b2 - a22 * b1; }
  bool symplectic(double tol = 1e-12) const;
};

/// Spectral angle xi in (0, pi) of the scheme matrix together with the
/// invariants it is derived from.
struct SpectralParams {
  double xi;
  double detA;
  double trA;
  double sqrt_det;

  double sin_xi() const;
  double cos_xi() const;
};

/// Closed-form solutions alpha_hat_k, beta_hat_k of the three-term
/// recurrence x_{k+1} = tr(A) x_k - det(A) x_{k-1}, indexed from -1.
struct RecurrenceCache {
  std::vector<double> hat_alpha;  ///< hat_alpha[i] = alpha_hat_{i-1}
  std::vector<double> hat_beta;

  double alpha_at(long k) const { return hat_alpha[static_cast<std::size_t>(k + 1)]; }
  double beta_at(long k) const { return hat_beta[static_cast<std::size_t>(k + 1)]; }
  long k_max() const { return static_cast<long>(hat_alpha.size()) - 2; }
};

/// Build a catalog scheme. `param` is beta for the beta family and theta for
/// the theta family; ignored otherwise. Throws std::invalid_argument on an
/// out-of-range parameter and for theta == 1/2 (that is the midpoint, a
/// symplectic beta-method).
StepScheme build_scheme(SchemeFamily family, double param, double h, std::size_t N);

/// Convenience: derive h = T/N exactly and build.
StepScheme build_scheme_tn(SchemeFamily family, double param, double T, std::size_t N);

/// Spectral angle of the scheme. Throws std::domain_error when
/// tr(A)^2 >= 4 det(A) (real eigenvalues, no spectral angle).
SpectralParams spectral_params(const StepScheme& scheme);

/// alpha_hat_k, beta_hat_k for k = -1 .. k_max via the closed form.
RecurrenceCache hat_sequences(const SpectralParams& spectral, long k_max);

/// Sum_{k=1}^n sin(k xi) a^k and the cosine analogue, via the rational
/// closed form; a = 1 uses the half-angle forms and near-singular
/// denominators fall back to direct summation.
double trig_sin_sum(std::size_t n, double xi, double a);
double trig_cos_sum(std::size_t n, double xi, double a);

/// Log-log slope fits of the two residuals of the first-order consistency
/// condition |a11-1|+|a22-1|+|a12-h|+|a21+h| = O(h^2), |b1|+|b2-1| = O(h)
/// over a geometric h-grid.
struct ConvergenceReport {
  double matrix_slope;  ///< expect >= 2 - 0.1
  double noise_slope;   ///< expect >= 1 - 0.1 (or noise residual identically 0)
  bool matrix_ok;
  bool noise_ok;
  bool passed() const { return matrix_ok && noise_ok; }
};

ConvergenceReport convergence_condition_check(SchemeFamily family, double param);

}  // namespace sdelaw

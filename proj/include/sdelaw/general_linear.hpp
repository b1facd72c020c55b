#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "sdelaw/oscillator.hpp"

namespace sdelaw {

/// d-dimensional linear SDE  du = A(t) u dt + b(t) dW  with d~-dimensional
/// Brownian motion. Coefficients are evaluable functions on [0, T].
struct LinearModel {
  std::size_t d = 0;
  std::size_t d_noise = 0;
  std::function<Eigen::MatrixXd(double)> A_of_t;  ///< d x d
  std::function<Eigen::MatrixXd(double)> b_of_t;  ///< d x d_noise
  Eigen::VectorXd u0;
  double T = 0.0;
};

/// Fundamental matrix Phi' = A(t) Phi, Phi(0) = I, on a uniform grid, with
/// the inverse co-propagated as Psi' = -Psi A(t) (no explicit inversion).
struct FundamentalMatrix {
  std::vector<double> grid;
  std::vector<Eigen::MatrixXd> Phi;
  std::vector<Eigen::MatrixXd> Phi_inv;
};

/// Per-step scheme u_{n+1} = A~_n u_n + b~_n dW_n.
struct GeneralScheme {
  std::vector<Eigen::MatrixXd> A_tilde;  ///< N matrices, d x d
  std::vector<Eigen::MatrixXd> b_tilde;  ///< N matrices, d x d_noise
  double h = 0.0;
  std::size_t N = 0;
};

/// Gaussian law of the vector error e_N, with the extrapolated error matrix
/// H_T (Cov = H_T h^2 + O(h^3)) when requested.
struct VectorErrorLaw {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  bool has_H = false;
  Eigen::MatrixXd H_T;
  double remainder_order = 0.0;  ///< fitted order of the Cov/h^2 remainder
  double quad_delta = 0.0;       ///< max entry change when quad nodes increase
};

/// Slope-fit report for the Euler-Maruyama proximity condition
/// ||A~ - A~^EM||_F = O(h^2), ||b~ - b~^EM||_F = O(h).
struct EmConditionReport {
  double matrix_slope = 0.0;
  double noise_slope = 0.0;
  bool passed = false;
};

/// Componentwise and matrix large-deviation quantities at horizon T.
struct LdpQuantities {
  std::vector<double> K_diag;  ///< diagonal of H_T (componentwise constants)
  double T = 0.0;
  bool matrix_rate_available = false;
  Eigen::MatrixXd H_inv;

  /// I^(i)(x) = x^2 / (2 K^(i) T^2); +inf for x != 0 when K^(i) = 0.
  double component_rate(std::size_t i, double x) const;
  /// I(x) = x^T H^{-1} x / (2 T^2); requires positive definite H_T.
  double matrix_rate(const Eigen::VectorXd& x) const;
};

/// Integrate the fundamental matrix with classical RK4, `substeps` internal
/// stages per grid cell; grid has N+1 points over [0, T].
FundamentalMatrix fundamental_matrix(const LinearModel& model, std::size_t grid_cells,
                                     std::size_t substeps);

/// Euler-Maruyama coefficients A~ = I + A(t_n) h, b~ = b(t_n).
GeneralScheme euler_maruyama_scheme(const LinearModel& model, double h, std::size_t N);

/// Slope fit of the proximity of `factory(N)` to Euler-Maruyama
/// over a dyadic N grid.
EmConditionReport em_condition_check(const LinearModel& model,
                                     const std::function<GeneralScheme(std::size_t)>& factory,
                                     const std::vector<std::size_t>& N_list);

/// Exact error law: mean from the propagated matrices, covariance from
/// per-interval Gauss-Legendre quadrature of D_k(s) D_k(s)^T.
VectorErrorLaw error_law_general(const LinearModel& model, const GeneralScheme& scheme,
                                 const FundamentalMatrix& fund, std::size_t quad_nodes = 4);

/// Richardson extrapolation of Cov/h^2 to h -> 0 over a dyadic N list.
VectorErrorLaw extrapolate_error_constants(const LinearModel& model,
                                           const std::function<GeneralScheme(std::size_t)>& factory,
                                           const std::vector<std::size_t>& N_list,
                                           std::size_t quad_nodes = 4);

LdpQuantities ldp_quantities(const VectorErrorLaw& law, double T);

/// The oscillator embedded as a LinearModel (noise column already carries
/// alpha).
LinearModel oscillator_as_linear(const OscillatorModel& model);

/// A scalar catalog scheme lifted to a GeneralScheme (constant matrices).
GeneralScheme scheme_as_general(const StepScheme& scheme, double alpha);

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace sdelaw

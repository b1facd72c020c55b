#include "sdelaw/general_linear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace sdelaw {

namespace {

/// One RK4 step of the pair (Phi' = A Phi, Psi' = -Psi A).
void rk4_step(const std::function<Eigen::MatrixXd(double)>& A_of_t, double t, double dt,
              Eigen::MatrixXd& phi, Eigen::MatrixXd& psi) {
  const Eigen::MatrixXd A1 = A_of_t(t);
  const Eigen::MatrixXd A2 = A_of_t(t + 0.5 * dt);
  const Eigen::MatrixXd A4 = A_of_t(t + dt);

  const Eigen::MatrixXd k1 = A1 * phi;
  const Eigen::MatrixXd k2 = A2 * (phi + 0.5 * dt * k1);
  const Eigen::MatrixXd k3 = A2 * (phi + 0.5 * dt * k2);
  const Eigen::MatrixXd k4 = A4 * (phi + dt * k3);

  const Eigen::MatrixXd l1 = -psi * A1;
  const Eigen::MatrixXd l2 = -(psi + 0.5 * dt * l1) * A2;
  const Eigen::MatrixXd l3 = -(psi + 0.5 * dt * l2) * A2;
  const Eigen::MatrixXd l4 = -(psi + dt * l3) * A4;

  phi += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  psi += dt / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] <= 0) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::infinity();
  const double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

Eigen::MatrixXd covariance_at(const LinearModel& model, const GeneralScheme& scheme,
                              const FundamentalMatrix& fund, std::size_t quad_nodes) {
  const std::size_t N = scheme.N;
  const double h = scheme.h;
  const auto d = static_cast<Eigen::Index>(model.d);

  // Suffix products P_k = A~_{N-1} ... A~_{k+1}.
  std::vector<Eigen::MatrixXd> suffix(N);
  suffix[N - 1] = Eigen::MatrixXd::Identity(d, d);
  for (std::size_t k = N - 1; k > 0; --k)
    suffix[k - 1] = suffix[k] * scheme.A_tilde[k];

  const Eigen::MatrixXd& phi_T = fund.Phi.back();

  std::vector<double> nodes, weights;
  gauss_legendre(quad_nodes, nodes, weights);

  constexpr std::size_t kPsiSubsteps = 64;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t k = 0; k < N; ++k) {
    const double t_k = static_cast<double>(k) * h;
    const Eigen::MatrixXd propagated = suffix[k] * scheme.b_tilde[k];
    for (std::size_t q = 0; q < quad_nodes; ++q) {
      const double s = t_k + 0.5 * h * (nodes[q] + 1.0);
      // Co-propagate Psi from the stored grid value to the quadrature node.
      Eigen::MatrixXd psi = fund.Phi_inv[k];
      Eigen::MatrixXd phi = fund.Phi[k];
      const double dt = (s - t_k) / static_cast<double>(kPsiSubsteps);
      if (dt > 0) {
        double t = t_k;
        for (std::size_t r = 0; r < kPsiSubsteps; ++r, t += dt)
          rk4_step(model.A_of_t, t, dt, phi, psi);
      }
      const Eigen::MatrixXd D = propagated - phi_T * psi * model.b_of_t(s);
      cov += (0.5 * h * weights[q]) * (D * D.transpose());
    }
  }
  return cov;
}

}  // namespace

void gauss_legendre(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  nodes.resize(n);
  weights.resize(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    // Newton iteration from the Chebyshev-like initial guess.
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double kk = static_cast<double>(k);
        const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
        p0 = p1;
        p1 = p2;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

FundamentalMatrix fundamental_matrix(const LinearModel& model, std::size_t grid_cells,
                                     std::size_t substeps) {
  if (grid_cells < 1 || substeps < 1)
    throw std::invalid_argument("fundamental_matrix: grid_cells and substeps must be >= 1");
  const auto d = static_cast<Eigen::Index>(model.d);
  FundamentalMatrix fund;
  fund.grid.reserve(grid_cells + 1);
  fund.Phi.reserve(grid_cells + 1);
  fund.Phi_inv.reserve(grid_cells + 1);

  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd psi = Eigen::MatrixXd::Identity(d, d);
  const double cell = model.T / static_cast<double>(grid_cells);
  const double dt = cell / static_cast<double>(substeps);

  fund.grid.push_back(0.0);
  fund.Phi.push_back(phi);
  fund.Phi_inv.push_back(psi);
  for (std::size_t i = 0; i < grid_cells; ++i) {
    double t = static_cast<double>(i) * cell;
    for (std::size_t r = 0; r < substeps; ++r, t += dt)
      rk4_step(model.A_of_t, t, dt, phi, psi);
    if (!phi.allFinite() || !psi.allFinite())
      throw std::runtime_error("fundamental_matrix: non-finite entries (stiff blowup)");
    fund.grid.push_back(static_cast<double>(i + 1) * cell);
    fund.Phi.push_back(phi);
    fund.Phi_inv.push_back(psi);
  }
  return fund;
}

GeneralScheme euler_maruyama_scheme(const LinearModel& model, double h, std::size_t N) {
  const auto d = static_cast<Eigen::Index>(model.d);
  GeneralScheme s;
  s.h = h;
  s.N = N;
  s.A_tilde.reserve(N);
  s.b_tilde.reserve(N);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
  for (std::size_t n = 0; n < N; ++n) {
    const double t = static_cast<double>(n) * h;
    s.A_tilde.push_back(I + h * model.A_of_t(t));
    s.b_tilde.push_back(model.b_of_t(t));
  }
  return s;
}

EmConditionReport em_condition_check(const LinearModel& model,
                                     const std::function<GeneralScheme(std::size_t)>& factory,
                                     const std::vector<std::size_t>& N_list) {
  std::vector<double> hs, dA, db;
  for (std::size_t N : N_list) {
    const double h = model.T / static_cast<double>(N);
    const GeneralScheme s = factory(N);
    const GeneralScheme em = euler_maruyama_scheme(model, h, N);
    double worst_a = 0.0, worst_b = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      worst_a = std::max(worst_a, (s.A_tilde[n] - em.A_tilde[n]).norm());
      worst_b = std::max(worst_b, (s.b_tilde[n] - em.b_tilde[n]).norm());
    }
    hs.push_back(h);
    dA.push_back(worst_a);
    db.push_back(worst_b);
  }
  EmConditionReport rep;
  rep.matrix_slope = loglog_slope(hs, dA);
  rep.noise_slope = loglog_slope(hs, db);
  const bool noise_zero =
      *std::max_element(db.begin(), db.end()) < 1e-14;
  rep.passed = rep.matrix_slope >= 2.0 - 0.1 && (noise_zero || rep.noise_slope >= 1.0 - 0.1);
  return rep;
}

VectorErrorLaw error_law_general(const LinearModel& model, const GeneralScheme& scheme,
                                 const FundamentalMatrix& fund, std::size_t quad_nodes) {
  if (fund.grid.size() != scheme.N + 1)
    throw std::invalid_argument("error_law_general: fundamental-matrix grid must match steps");
  if (quad_nodes < 2)
    throw std::invalid_argument("error_law_general: quad_nodes must be >= 2");
  const auto d = static_cast<Eigen::Index>(model.d);

  Eigen::MatrixXd product = Eigen::MatrixXd::Identity(d, d);
  for (std::size_t n = 0; n < scheme.N; ++n) product = scheme.A_tilde[n] * product;

  VectorErrorLaw law;
  law.mean = (product - fund.Phi.back()) * model.u0;
  law.cov = covariance_at(model, scheme, fund, quad_nodes);
  const Eigen::MatrixXd refined = covariance_at(model, scheme, fund, quad_nodes + 2);
  law.quad_delta = (refined - law.cov).cwiseAbs().maxCoeff();
  law.cov = refined;
  return law;
}

VectorErrorLaw extrapolate_error_constants(const LinearModel& model,
                                           const std::function<GeneralScheme(std::size_t)>& factory,
                                           const std::vector<std::size_t>& N_list,
                                           std::size_t quad_nodes) {
  if (N_list.size() < 3)
    throw std::invalid_argument("extrapolate_error_constants: need at least 3 N values");
  std::vector<double> hs;
  std::vector<Eigen::MatrixXd> scaled;
  VectorErrorLaw finest;
  for (std::size_t N : N_list) {
    const GeneralScheme s = factory(N);
    const FundamentalMatrix fund = fundamental_matrix(model, N, 4);
    finest = error_law_general(model, s, fund, quad_nodes);
    hs.push_back(s.h);
    scaled.push_back(finest.cov / (s.h * s.h));
  }
  const std::size_t n = N_list.size();
  // Cov/h^2 = H + C h: eliminate C from the two finest levels.
  const Eigen::MatrixXd C = (scaled[n - 2] - scaled[n - 1]) / (hs[n - 2] - hs[n - 1]);
  finest.H_T = scaled[n - 1] - C * hs[n - 1];
  finest.has_H = true;
  const double r0 = (scaled[0] - finest.H_T).norm();
  const double r1 = (scaled[1] - finest.H_T).norm();
  finest.remainder_order =
      r0 > 0 && r1 > 0 ? std::log(r0 / r1) / std::log(hs[0] / hs[1]) : 0.0;
  return finest;
}

double LdpQuantities::component_rate(std::size_t i, double x) const {
  const double K = K_diag.at(i);
  if (K > 0.0) return x * x / (2.0 * K * T * T);
  return x == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

double LdpQuantities::matrix_rate(const Eigen::VectorXd& x) const {
  if (!matrix_rate_available)
    throw std::domain_error("matrix_rate: H_T not positive definite");
  return x.dot(H_inv * x) / (2.0 * T * T);
}

LdpQuantities ldp_quantities(const VectorErrorLaw& law, double T) {
  if (!law.has_H) throw std::invalid_argument("ldp_quantities: law carries no H_T");
  LdpQuantities q;
  q.T = T;
  for (Eigen::Index i = 0; i < law.H_T.rows(); ++i) q.K_diag.push_back(law.H_T(i, i));
  const Eigen::LLT<Eigen::MatrixXd> llt(law.H_T);
  if (llt.info() == Eigen::Success) {
    q.matrix_rate_available = true;
    q.H_inv = llt.solve(Eigen::MatrixXd::Identity(law.H_T.rows(), law.H_T.cols()));
  }
  return q;
}

LinearModel oscillator_as_linear(const OscillatorModel& model) {
  LinearModel lin;
  lin.d = 2;
  lin.d_noise = 1;
  Eigen::MatrixXd A(2, 2);
  A << 0, 1, -1, 0;
  Eigen::MatrixXd b(2, 1);
  b << 0, model.alpha;
  lin.A_of_t = [A](double) { return A; };
  lin.b_of_t = [b](double) { return b; };
  lin.u0 = Eigen::Vector2d(model.x0, model.y0);
  lin.T = model.T;
  return lin;
}

GeneralScheme scheme_as_general(const StepScheme& scheme, double alpha) {
  GeneralScheme g;
  g.h = scheme.h;
  g.N = scheme.N;
  Eigen::MatrixXd A(2, 2);
  A << scheme.a11, scheme.a12, scheme.a21, scheme.a22;
  Eigen::MatrixXd b(2, 1);
  b << alpha * scheme.b1, alpha * scheme.b2;
  g.A_tilde.assign(scheme.N, A);
  g.b_tilde.assign(scheme.N, b);
  return g;
}

}  // namespace sdelaw

#include "sdelaw/oscillator.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "sdelaw/compensated.hpp"

namespace sdelaw {

namespace {

/// Least-squares slope of log(y) vs log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] <= 0) continue;
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
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

}  // namespace

OscillatorModel::OscillatorModel(double alpha_, double x0_, double y0_, double T_)
    : alpha(alpha_), x0(x0_), y0(y0_), T(T_) {
  if (!(alpha > 0)) throw std::invalid_argument("OscillatorModel: alpha must be > 0");
  if (!(T > 0)) throw std::invalid_argument("OscillatorModel: T must be > 0");
}

bool StepScheme::symplectic(double tol) const { return std::abs(det() - 1.0) <= tol; }

std::string family_name(SchemeFamily family) {
  switch (family) {
    case SchemeFamily::beta: return "beta";
    case SchemeFamily::theta: return "theta";
    case SchemeFamily::exponential: return "exponential";
    case SchemeFamily::integral: return "integral";
    case SchemeFamily::optimal: return "optimal";
    case SchemeFamily::half_h: return "half_h";
    case SchemeFamily::pc_em_bem: return "pc_em_bem";
    case SchemeFamily::custom: return "custom";
  }
  return "unknown";
}

SchemeFamily family_from_name(const std::string& name) {
  if (name == "beta") return SchemeFamily::beta;
  if (name == "theta") return SchemeFamily::theta;
  if (name == "exponential") return SchemeFamily::exponential;
  if (name == "integral") return SchemeFamily::integral;
  if (name == "optimal") return SchemeFamily::optimal;
  if (name == "half_h") return SchemeFamily::half_h;
  if (name == "pc_em_bem") return SchemeFamily::pc_em_bem;
  if (name == "custom") return SchemeFamily::custom;
  throw std::invalid_argument("unknown scheme family: " + name);
}

StepScheme build_scheme(SchemeFamily family, double param, double h, std::size_t N) {
  if (!(h > 0)) throw std::invalid_argument("build_scheme: h must be > 0");
  if (N < 1) throw std::invalid_argument("build_scheme: N must be >= 1");

  StepScheme s{};
  s.h = h;
  s.N = N;
  s.family = family;
  s.param = param;

  switch (family) {
    case SchemeFamily::beta: {
      const double beta = param;
      if (beta < 0.0 || beta > 1.0)
        throw std::invalid_argument("build_scheme: beta must lie in [0,1]");
      const double d = 1.0 + beta * (1.0 - beta) * h * h;
      s.a11 = (1.0 - (1.0 - beta) * (1.0 - beta) * h * h) / d;
      s.a12 = h / d;
      s.a21 = -h / d;
      s.a22 = (1.0 - beta * beta * h * h) / d;
      s.b1 = (1.0 - beta) * h / d;
      s.b2 = 1.0 / d;
      break;
    }
    case SchemeFamily::theta: {
      const double theta = param;
      if (theta < 0.0 || theta > 1.0)
        throw std::invalid_argument("build_scheme: theta must lie in [0,1]");
      if (theta == 0.5)
        throw std::invalid_argument(
            "build_scheme: theta = 1/2 is the midpoint method; use the beta family");
      const double d = 1.0 + theta * theta * h * h;
      s.a11 = (1.0 - (1.0 - theta) * theta * h * h) / d;
      s.a12 = h / d;
      s.a21 = -h / d;
      s.a22 = s.a11;
      s.b1 = theta * h / d;
      s.b2 = 1.0 / d;
      break;
    }
    case SchemeFamily::exponential:
    case SchemeFamily::integral:
    case SchemeFamily::optimal:
    case SchemeFamily::half_h: {
      const double ch = std::cos(h), sh = std::sin(h);
      s.a11 = ch;
      s.a12 = sh;
      s.a21 = -sh;
      s.a22 = ch;
      if (family == SchemeFamily::exponential) {
        s.b1 = 0.0;
        s.b2 = 1.0;
      } else if (family == SchemeFamily::integral) {
        s.b1 = sh;
        s.b2 = ch;
      } else if (family == SchemeFamily::optimal) {
        const double sh2 = std::sin(0.5 * h);
        s.b1 = 2.0 * sh2 * sh2 / h;
        s.b2 = sh / h;
      } else {
        s.b1 = 0.5 * h;
        s.b2 = 1.0;
      }
      break;
    }
    case SchemeFamily::pc_em_bem: {
      s.a11 = 1.0 - h * h;
      s.a12 = h;
      s.a21 = -h;
      s.a22 = 1.0 - h * h;
      s.b1 = h;
      s.b2 = 1.0;
      break;
    }
    case SchemeFamily::custom:
      throw std::invalid_argument("build_scheme: custom schemes carry their own coefficients");
  }
  return s;
}

StepScheme build_scheme_tn(SchemeFamily family, double param, double T, std::size_t N) {
  if (!(T > 0)) throw std::invalid_argument("build_scheme_tn: T must be > 0");
  if (N < 1) throw std::invalid_argument("build_scheme_tn: N must be >= 1");
  return build_scheme(family, param, T / static_cast<double>(N), N);
}

double SpectralParams::cos_xi() const { return trA / (2.0 * sqrt_det); }

double SpectralParams::sin_xi() const {
  const double disc = 4.0 * detA - trA * trA;
  return std::sqrt(disc) / (2.0 * sqrt_det);
}

SpectralParams spectral_params(const StepScheme& scheme) {
  const double tr = scheme.trace();
  const double det = scheme.det();
  const double disc = 4.0 * det - tr * tr;
  if (!(det > 0) || !(disc > 0))
    throw std::domain_error("spectral_params: tr(A)^2 >= 4 det(A), no spectral angle");
  SpectralParams p{};
  p.detA = det;
  p.trA = tr;
  p.sqrt_det = std::sqrt(det);
  // atan2 recovery keeps full accuracy when xi ~ h ~ 0 (arccos of the trace
  // ratio would lose half the digits there).
  p.xi = std::atan2(std::sqrt(disc), tr);
  return p;
}

RecurrenceCache hat_sequences(const SpectralParams& spectral, long k_max) {
  if (k_max < 0) throw std::invalid_argument("hat_sequences: k_max must be >= 0");
  RecurrenceCache cache;
  const std::size_t count = static_cast<std::size_t>(k_max) + 2;  // k = -1 .. k_max
  cache.hat_alpha.resize(count);
  cache.hat_beta.resize(count);
  const double inv_sin = 1.0 / spectral.sin_xi();
  const double log_sqrt_det = 0.5 * std::log(spectral.detA);
  for (long k = -1; k <= k_max; ++k) {
    const std::size_t i = static_cast<std::size_t>(k + 1);
    const double dk = std::exp(static_cast<double>(k) * log_sqrt_det);
    cache.hat_alpha[i] =
        dk * std::sin(reduce_angle(static_cast<double>(k + 1), spectral.xi)) * inv_sin;
    cache.hat_beta[i] = -dk * spectral.sqrt_det *
                        std::sin(reduce_angle(static_cast<double>(k), spectral.xi)) * inv_sin;
  }
  cache.hat_alpha[0] = 0.0;  // alpha_hat_{-1}
  cache.hat_beta[1] = 0.0;   // beta_hat_0
  return cache;
}

namespace {

constexpr double kDenominatorTol = 1e-9;

enum class TrigKind { sine, cosine };

double trig_sum_direct(std::size_t n, double xi, double a, TrigKind kind) {
  KahanSum<double> acc;
  double ak = 1.0;
  for (std::size_t k = 1; k <= n; ++k) {
    ak *= a;
    const double arg = reduce_angle(static_cast<double>(k), xi);
    acc += ak * (kind == TrigKind::sine ? std::sin(arg) : std::cos(arg));
  }
  return acc;
}

double trig_sum(std::size_t n, double xi, double a, TrigKind kind) {
  if (n < 1) throw std::invalid_argument("trig sum: n must be >= 1");
  if (!(xi > 0) || !(xi < 2.0 * std::numbers::pi))
    throw std::invalid_argument("trig sum: xi must lie in (0, 2*pi)");

  const double nn = static_cast<double>(n);
  if (a == 1.0) {
    const double half = 0.5 * xi;
    const double denom = 2.0 * std::sin(half);
    if (std::abs(denom) < kDenominatorTol) return trig_sum_direct(n, xi, a, kind);
    if (kind == TrigKind::sine)
      return (std::cos(half) - std::cos(reduce_angle(nn + 0.5, xi))) / denom;
    return std::sin(reduce_angle(nn + 0.5, xi)) / denom - 0.5;
  }

  const double denom = 1.0 - 2.0 * a * std::cos(xi) + a * a;
  if (std::abs(denom) < kDenominatorTol) return trig_sum_direct(n, xi, a, kind);

  const double an1 = std::pow(a, nn + 1.0);
  const double an2 = an1 * a;
  const double arg_n = reduce_angle(nn, xi);
  const double arg_n1 = reduce_angle(nn + 1.0, xi);
  if (kind == TrigKind::sine)
    return (a * std::sin(xi) - an1 * std::sin(arg_n1) + an2 * std::sin(arg_n)) / denom;
  return (a * std::cos(xi) - a * a - an1 * std::cos(arg_n1) + an2 * std::cos(arg_n)) / denom;
}

}  // namespace

double trig_sin_sum(std::size_t n, double xi, double a) {
  return trig_sum(n, xi, a, TrigKind::sine);
}

double trig_cos_sum(std::size_t n, double xi, double a) {
  return trig_sum(n, xi, a, TrigKind::cosine);
}

ConvergenceReport convergence_condition_check(SchemeFamily family, double param) {
  std::vector<double> hs, res_matrix, res_noise;
  for (int k = 3; k <= 12; ++k) {
    const double h = std::ldexp(1.0, -k);
    const StepScheme s = build_scheme(family, param, h, 1);
    hs.push_back(h);
    res_matrix.push_back(std::abs(s.a11 - 1.0) + std::abs(s.a22 - 1.0) +
                         std::abs(s.a12 - h) + std::abs(s.a21 + h));
    res_noise.push_back(std::abs(s.b1) + std::abs(s.b2 - 1.0));
  }
  ConvergenceReport r{};
  r.matrix_slope = loglog_slope(hs, res_matrix);
  r.noise_slope = loglog_slope(hs, res_noise);
  r.matrix_ok = r.matrix_slope >= 2.0 - 0.1;
  r.noise_ok = r.noise_slope >= 1.0 - 0.1;
  return r;
}

}  // namespace sdelaw

#ifndef NETUM_FGM_HPP
#define NETUM_FGM_HPP

#include <cstdint>
#include <numeric>
#include <optional>
#include <span>

#include "netum/model.hpp"
#include "netum/oracle.hpp"
#include "netum/trace.hpp"

namespace netum {

/// Exact nonnegative fraction for the method's weight schedule.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational make(std::int64_t num, std::int64_t den) {
    const std::int64_t g = std::gcd(num, den);
    return {num / g, den / g};
  }
  double value() const {
    return static_cast<double>(num) / static_cast<double>(den);
  }
  friend Rational operator+(Rational a, Rational b) {
    return make(a.num * b.den + b.num * a.den, a.den * b.den);
  }
  friend Rational operator-(Rational a, Rational b) {
    return make(a.num * b.den - b.num * a.den, a.den * b.den);
  }
  friend Rational operator*(Rational a, Rational b) {
    return make(a.num * b.num, a.den * b.den);
  }
  friend bool operator==(Rational a, Rational b) {
    return a.num * b.den == b.num * a.den;
  }
};

/// alpha_t = (t+1)/2
inline Rational step_weight(std::uint64_t t) {
  return Rational::make(static_cast<std::int64_t>(t) + 1, 2);
}
/// A_t = (t+1)(t+2)/4, the sum of alpha_0..alpha_t
inline Rational accumulated_weight(std::uint64_t t) {
  const auto s = static_cast<std::int64_t>(t);
  return Rational::make((s + 1) * (s + 2), 4);
}
/// tau_t = alpha_{t+1}/A_{t+1} = 2/(t+3)
inline Rational interpolation_weight(std::uint64_t t) {
  return Rational::make(2, static_cast<std::int64_t>(t) + 3);
}

/// Iterate of the primal-dual fast gradient method after `t` steps.
struct FgmState {
  std::uint64_t t = 0;
  Vector lambda;        // lambda_t
  Vector lambda0;
  Vector y;             // gradient-step point of the last step
  Vector z;             // dual-averaging point of the last step
  Vector grad_accum;    // sum_k alpha_k (b - C x(lambda_k))
  Vector primal_accum;  // sum_k alpha_k x(lambda_k)
  Vector x_last;        // x(lambda_{t-1}) from the last step
  double weight = 0.0;  // A_{t-1}
  double lipschitz = 0.0;
};

FgmState make_fgm_state(const ProblemInstance& inst, Vector lambda0,
                        double lipschitz);

/// One iteration: evaluates x(lambda_t) once (n oracle calls), takes the
/// projected gradient step y_t and the projected averaged step z_t, and
/// interpolates lambda_{t+1} = tau_t z_t + (1 - tau_t) y_t.
/// Throws std::runtime_error naming the component on non-finite values.
void fgm_step(FgmState& state, SmoothedDualOracle& oracle);

/// Projected gradient step [lambda - g/L]_+ for one component.
inline double gradient_step(double lambda, double grad, double lipschitz) {
  const double v = lambda - grad / lipschitz;
  return v > 0.0 ? v : 0.0;
}

/// x_hat = primal_accum / A.
Vector averaged_primal(const FgmState& state);

struct FgmCertificate {
  double gap = 0.0;        // phi_mu(y) - U_mu(x_hat)
  double violation = 0.0;  // ||(C x_hat - b)_+||_q
  double utility = 0.0;    // U(x_hat)
  double bound = 0.0;      // 26 L R_q^2 / A, NaN without R_q

  /// gap + 5 R_q violation, the quantity the bound controls.
  double lhs(double r_q) const { return gap + 5.0 * r_q * violation; }
};

/// Evaluates the primal-dual gap at (y, x_hat); costs n oracle calls.
FgmCertificate evaluate_certificate(SmoothedDualOracle& oracle,
                                    std::span<const double> y,
                                    std::span<const double> x_hat,
                                    double weight, double lipschitz);

struct FgmOptions {
  std::uint64_t max_iter = 10'000;
  /// Stop once gap <= eps/2 and violation <= eps/(4 R_q). Decides
  /// convergence whenever enabled.
  bool use_certificate = true;
  /// Run this many iterations (capped by max_iter).
  std::optional<std::uint64_t> fixed_iterations;
  LipschitzMethod lipschitz = LipschitzMethod::spectral;
  /// Evaluate the gap (and the certificate) every `trace_stride` steps.
  std::uint64_t trace_stride = 1;
  std::optional<Vector> lambda0;
};

struct FgmResult {
  Vector lambda_final;
  Vector y_final;
  Vector x_hat;
  SolverTrace trace;
  std::uint64_t iterations = 0;
  bool converged = false;
  double lipschitz = 0.0;
  std::uint64_t oracle_calls = 0;
};

/// Lipschitz constant used by the solver; falls back to 1/mu for a matrix
/// without entries (constant gradient).
double solver_lipschitz(const SmoothedDualOracle& oracle,
                        LipschitzMethod method);

FgmResult fgm_solve(const ProblemInstance& inst, const SmoothingConfig& cfg,
                    const FgmOptions& opts = {});

/// Iterations sufficient for an eps-solution: floor(8 sqrt(13) R_q R_p
/// ||C|| / eps), or with strong concavity mu the min with
/// floor(2 sqrt(26) sqrt(R_q R_p) ||C|| / sqrt(mu eps)).
std::uint64_t fgm_iterations_bound(const SmoothingConfig& cfg, double norm_c,
                                   double mu_strong, double eps);

nlohmann::json to_json(const FgmOptions& opts);

}  // namespace netum

#endif  // NETUM_FGM_HPP

#ifndef NETUM_ORACLE_HPP
#define NETUM_ORACLE_HPP

#include <cstdint>
#include <optional>
#include <span>

#include "netum/model.hpp"

namespace netum {

/// Parameters of the regularized dual
///   phi_mu(lambda) = max_{x>=0} U(x) + <lambda, b - Cx> - (mu/2)||x - x0||_2^2.
struct SmoothingConfig {
  double mu = 0.0;                // additive smoothing coefficient
  Vector x0;                      // prox center
  double epsilon = 0.0;           // target accuracy
  double r_p = 0.0;               // bound on ||x* - x0||_p
  std::optional<double> r_q;      // bound on ||lambda*||_q, ||lambda_0||_q
  double strong_concavity = 0.0;  // curvature the utility already provides

  /// Curvature of the inner problem; the dual gradient is
  /// (||C||^2 / effective_mu())-Lipschitz.
  double effective_mu() const { return mu + strong_concavity; }
};

struct SmoothingOptions {
  double epsilon = 1.0;
  std::optional<double> mu;
  std::optional<Vector> x0;
  std::optional<double> r_p;
  std::optional<double> r_q;
  /// With a strongly concave utility and no explicit mu, use the utility's
  /// own curvature instead of adding a prox term.
  bool use_strong_concavity = true;
};

/// Fills the defaults: x0 = 0, R_p = ||x(0)||_2 + ||x0||_2 (x(0) is the
/// unsmoothed best response at zero prices), mu = eps / R_p^2, and R_q from
/// the Slater point 0 when min_j b_j > 0.
SmoothingConfig make_smoothing_config(const ProblemInstance& inst,
                                      const SmoothingOptions& opts);

enum class LipschitzMethod { nnz, spectral, operator_norm };

/// argmax over x >= 0 of u_i(x) - cost*x - (mu/2)(x - center)^2 by bisection
/// on the decreasing derivative. Bracket [0, hi], hi doubled from 1 up to
/// 2^60; stops at width 1e-10. Throws std::domain_error if no bracket exists.
double bisect_best_response(const Utility& u, std::size_t i, double cost,
                            double mu, double center);

/// Best responses, smoothed dual value and gradient over one instance.
///
/// Counts one call per single-vertex best response. Not thread-safe: each
/// solver run owns its oracle. The instance must outlive the oracle.
class SmoothedDualOracle {
 public:
  SmoothedDualOracle(const ProblemInstance& inst, SmoothingConfig cfg);

  const ProblemInstance& instance() const { return *inst_; }
  const SmoothingConfig& config() const { return cfg_; }

  double best_response(std::span<const double> lambda, int i);
  /// Same, given the aggregated price (C^T lambda)_i directly.
  double best_response_at_cost(int i, double cost);
  Vector primal_from_prices(std::span<const double> lambda);

  double dual_value(std::span<const double> lambda);
  Vector dual_gradient(std::span<const double> lambda);

  struct Evaluation {
    Vector x;         // x(lambda)
    Vector gradient;  // b - C x(lambda)
    double value;     // phi_mu(lambda)
  };
  /// One pass of n best responses yielding value and gradient together.
  Evaluation evaluate(std::span<const double> lambda);

  /// U_mu(x) = U(x) - (mu/2)||x - x0||_2^2.
  double smoothed_utility(std::span<const double> x) const;

  double lipschitz_bound(LipschitzMethod method) const;
  /// lambda_max(C^T C), computed once.
  double spectral_norm_sq() const;

  std::uint64_t calls() const { return calls_; }

 private:
  void check_prices(std::span<const double> lambda) const;
  double value_at(std::span<const double> lambda, std::span<const double> x,
                  std::span<const double> gradient) const;

  const ProblemInstance* inst_;
  SmoothingConfig cfg_;
  std::uint64_t calls_ = 0;
  mutable std::optional<double> spectral_;
};

}  // namespace netum

#endif  // NETUM_ORACLE_HPP

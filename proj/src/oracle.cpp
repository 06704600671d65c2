#include "netum/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace netum {

namespace {

constexpr double kBracketCap = 0x1.0p60;
constexpr double kBisectionWidth = 1e-10;

}  // namespace

double bisect_best_response(const Utility& u, std::size_t i, double cost,
                            double mu, double center) {
  auto slope = [&](double x) {
    return u.derivative(i, x) - cost - mu * (x - center);
  };
  if (slope(0.0) <= 0.0) return 0.0;

  double lo = 0.0;
  double hi = 1.0;
  double s_hi = slope(hi);
  while (s_hi > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > kBracketCap) {
      throw std::domain_error("best response for vertex " + std::to_string(i) +
                              " has no bracket below 2^60; utility is not "
                              "concave enough");
    }
    s_hi = slope(hi);
  }
  if (s_hi == 0.0) return hi;

  while (hi - lo > kBisectionWidth) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (slope(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

SmoothingConfig make_smoothing_config(const ProblemInstance& inst,
                                      const SmoothingOptions& opts) {
  if (!(opts.epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  const auto n = static_cast<std::size_t>(inst.n());

  SmoothingConfig cfg;
  cfg.epsilon = opts.epsilon;
  cfg.x0 = opts.x0.value_or(Vector(n, 0.0));
  if (cfg.x0.size() != n) throw std::invalid_argument("x0 has wrong length");
  if (std::any_of(cfg.x0.begin(), cfg.x0.end(), [](double v) { return v < 0; })) {
    throw std::invalid_argument("x0 must be nonnegative");
  }

  const double curvature = inst.utility().strong_concavity();
  if (opts.use_strong_concavity && !opts.mu && curvature > 0.0) {
    cfg.strong_concavity = curvature;
  }

  if (opts.r_p) {
    cfg.r_p = *opts.r_p;
  } else {
    // Unsmoothed best response at zero prices bounds the solution scale.
    SmoothingConfig bare;
    bare.x0 = Vector(n, 0.0);
    SmoothedDualOracle probe(inst, bare);
    const Vector zero(static_cast<std::size_t>(inst.m()), 0.0);
    Vector x_free;
    try {
      x_free = probe.primal_from_prices(zero);
    } catch (const std::domain_error&) {
      throw std::invalid_argument("R_p cannot be derived for an unbounded best response; supply it");
    }
    cfg.r_p = norm(x_free, Norm::l2) + norm(cfg.x0, Norm::l2);
  }
  if (!(cfg.r_p > 0.0)) {
    throw std::invalid_argument("R_p must be > 0; supply it explicitly");
  }

  if (opts.mu) {
    cfg.mu = *opts.mu;
  } else if (cfg.strong_concavity > 0.0) {
    cfg.mu = 0.0;
  } else {
    cfg.mu = cfg.epsilon / (cfg.r_p * cfg.r_p);
  }
  if (!(cfg.mu >= 0.0)) throw std::invalid_argument("mu must be >= 0");

  if (opts.r_q) {
    cfg.r_q = *opts.r_q;
  } else {
    const auto& b = inst.capacity();
    const double min_b = b.empty() ? 0.0 : *std::min_element(b.begin(), b.end());
    if (min_b > 0.0) {
      // Slater point x~ = 0: sum_j lambda*_j b_j <= phi_mu(0) - U_mu(0).
      SmoothedDualOracle probe(inst, cfg);
      const Vector zero_price(b.size(), 0.0);
      const Vector zero_rate(n, 0.0);
      cfg.r_q = (probe.dual_value(zero_price) -
                 probe.smoothed_utility(zero_rate)) / min_b;
    }
  }
  return cfg;
}

SmoothedDualOracle::SmoothedDualOracle(const ProblemInstance& inst,
                                       SmoothingConfig cfg)
    : inst_(&inst), cfg_(std::move(cfg)) {
  if (cfg_.x0.empty()) cfg_.x0.assign(static_cast<std::size_t>(inst.n()), 0.0);
  if (cfg_.x0.size() != static_cast<std::size_t>(inst.n())) {
    throw std::invalid_argument("prox center has wrong length");
  }
}

void SmoothedDualOracle::check_prices(std::span<const double> lambda) const {
  if (lambda.size() != static_cast<std::size_t>(inst_->m())) {
    throw std::invalid_argument("price vector has length " +
                                std::to_string(lambda.size()) + ", expected " +
                                std::to_string(inst_->m()));
  }
  for (std::size_t j = 0; j < lambda.size(); ++j) {
    if (!(lambda[j] >= 0.0)) {
      throw std::invalid_argument("price lambda[" + std::to_string(j) +
                                  "] must be >= 0");
    }
  }
}

double SmoothedDualOracle::best_response_at_cost(int i, double cost) {
  ++calls_;
  const auto idx = static_cast<std::size_t>(i);
  const Utility& u = inst_->utility();
  if (auto closed = u.best_response(idx, cost, cfg_.mu, cfg_.x0[idx])) {
    return *closed;
  }
  return bisect_best_response(u, idx, cost, cfg_.mu, cfg_.x0[idx]);
}

double SmoothedDualOracle::best_response(std::span<const double> lambda,
                                         int i) {
  check_prices(lambda);
  double cost = 0.0;
  for (int j : inst_->matrix().col(i)) cost += lambda[static_cast<std::size_t>(j)];
  return best_response_at_cost(i, cost);
}

Vector SmoothedDualOracle::primal_from_prices(std::span<const double> lambda) {
  check_prices(lambda);
  const Vector cost = mat_t_vec(inst_->matrix(), lambda);
  Vector x(cost.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = best_response_at_cost(static_cast<int>(i), cost[i]);
  }
  return x;
}

double SmoothedDualOracle::value_at(std::span<const double> lambda,
                                    std::span<const double> x,
                                    std::span<const double> gradient) const {
  return smoothed_utility(x) + dot(lambda, gradient);
}

SmoothedDualOracle::Evaluation SmoothedDualOracle::evaluate(
    std::span<const double> lambda) {
  Evaluation out;
  out.x = primal_from_prices(lambda);
  out.gradient = mat_vec(inst_->matrix(), out.x);
  const auto& b = inst_->capacity();
  for (std::size_t j = 0; j < b.size(); ++j) {
    out.gradient[j] = b[j] - out.gradient[j];
  }
  out.value = value_at(lambda, out.x, out.gradient);
  return out;
}

double SmoothedDualOracle::dual_value(std::span<const double> lambda) {
  return evaluate(lambda).value;
}

Vector SmoothedDualOracle::dual_gradient(std::span<const double> lambda) {
  return evaluate(lambda).gradient;
}

double SmoothedDualOracle::smoothed_utility(std::span<const double> x) const {
  double prox = 0.0;
  if (cfg_.mu != 0.0) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - cfg_.x0[i];
      prox += d * d;
    }
  }
  return utility_total(*inst_, x) - 0.5 * cfg_.mu * prox;
}

double SmoothedDualOracle::spectral_norm_sq() const {
  if (!spectral_) spectral_ = netum::spectral_norm_sq(inst_->matrix());
  return *spectral_;
}

double SmoothedDualOracle::lipschitz_bound(LipschitzMethod method) const {
  const double mu = cfg_.effective_mu();
  if (!(mu > 0.0)) {
    throw std::domain_error(
        "Lipschitz bound needs mu > 0: the unsmoothed dual need not be smooth");
  }
  switch (method) {
    case LipschitzMethod::nnz:
      return static_cast<double>(inst_->matrix().nnz()) / mu;
    case LipschitzMethod::spectral:
    case LipschitzMethod::operator_norm:
      if (inst_->norm_p() != Norm::l2 || inst_->norm_q() != Norm::l2) {
        throw std::invalid_argument(
            "spectral/operator-norm Lipschitz bound needs p = q = 2");
      }
      return spectral_norm_sq() / mu;
  }
  throw std::invalid_argument("unknown Lipschitz method");
}

}  // namespace netum

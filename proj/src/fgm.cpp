#include "netum/fgm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace netum {

namespace {

void check_finite(const Vector& v, const char* name) {
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!std::isfinite(v[k])) {
      throw std::runtime_error(std::string("fgm: non-finite ") + name + "[" +
                               std::to_string(k) + "]");
    }
  }
}

std::string_view method_name(LipschitzMethod method) {
  switch (method) {
    case LipschitzMethod::nnz: return "nnz";
    case LipschitzMethod::spectral: return "spectral";
    case LipschitzMethod::operator_norm: return "operator_norm";
  }
  return "unknown";
}

}  // namespace

FgmState make_fgm_state(const ProblemInstance& inst, Vector lambda0,
                        double lipschitz) {
  const auto m = static_cast<std::size_t>(inst.m());
  if (lambda0.size() != m) throw std::invalid_argument("lambda0 has wrong length");
  if (std::any_of(lambda0.begin(), lambda0.end(),
                  [](double v) { return !(v >= 0.0); })) {
    throw std::invalid_argument("lambda0 must be nonnegative");
  }
  if (!(lipschitz > 0.0) || !std::isfinite(lipschitz)) {
    throw std::invalid_argument("Lipschitz constant must be finite and > 0");
  }
  FgmState state;
  state.lambda = lambda0;
  state.lambda0 = std::move(lambda0);
  state.y = state.lambda;
  state.z = state.lambda;
  state.grad_accum.assign(m, 0.0);
  state.primal_accum.assign(static_cast<std::size_t>(inst.n()), 0.0);
  state.lipschitz = lipschitz;
  return state;
}

void fgm_step(FgmState& state, SmoothedDualOracle& oracle) {
  const double alpha = step_weight(state.t).value();
  const double tau = interpolation_weight(state.t).value();
  const double inv_l = 1.0 / state.lipschitz;

  auto eval = oracle.evaluate(state.lambda);
  for (std::size_t i = 0; i < eval.x.size(); ++i) {
    state.primal_accum[i] += alpha * eval.x[i];
  }
  for (std::size_t j = 0; j < state.lambda.size(); ++j) {
    const double g = eval.gradient[j];
    state.grad_accum[j] += alpha * g;
    state.y[j] = gradient_step(state.lambda[j], g, state.lipschitz);
    const double zj = state.lambda0[j] - inv_l * state.grad_accum[j];
    state.z[j] = zj > 0.0 ? zj : 0.0;
    state.lambda[j] = tau * state.z[j] + (1.0 - tau) * state.y[j];
  }
  state.weight += alpha;
  state.x_last = std::move(eval.x);
  ++state.t;

  check_finite(state.y, "y");
  check_finite(state.z, "z");
  check_finite(state.lambda, "lambda");
}

Vector averaged_primal(const FgmState& state) {
  Vector x_hat(state.primal_accum.size(), 0.0);
  if (state.weight <= 0.0) return x_hat;
  for (std::size_t i = 0; i < x_hat.size(); ++i) {
    x_hat[i] = state.primal_accum[i] / state.weight;
  }
  return x_hat;
}

FgmCertificate evaluate_certificate(SmoothedDualOracle& oracle,
                                    std::span<const double> y,
                                    std::span<const double> x_hat,
                                    double weight, double lipschitz) {
  const ProblemInstance& inst = oracle.instance();
  FgmCertificate cert;
  cert.utility = utility_total(inst, x_hat);
  cert.gap = oracle.dual_value(y) - oracle.smoothed_utility(x_hat);
  cert.violation = violation_norm(inst, x_hat);
  if (const auto& r_q = oracle.config().r_q) {
    cert.bound = 26.0 * lipschitz * (*r_q) * (*r_q) / weight;
  } else {
    cert.bound = std::numeric_limits<double>::quiet_NaN();
  }
  return cert;
}

double solver_lipschitz(const SmoothedDualOracle& oracle,
                        LipschitzMethod method) {
  if (oracle.instance().matrix().nnz() == 0) {
    const double mu = oracle.config().effective_mu();
    if (!(mu > 0.0)) throw std::domain_error("Lipschitz bound needs mu > 0");
    return 1.0 / mu;
  }
  return oracle.lipschitz_bound(method);
}

FgmResult fgm_solve(const ProblemInstance& inst, const SmoothingConfig& cfg,
                    const FgmOptions& opts) {
  if (opts.trace_stride == 0) throw std::invalid_argument("trace_stride must be >= 1");
  if (opts.use_certificate && !cfg.r_q) {
    throw std::invalid_argument(
        "certificate rule needs R_q (no Slater bound available; pass r_q)");
  }
  SmoothedDualOracle oracle(inst, cfg);
  const double lipschitz = solver_lipschitz(oracle, opts.lipschitz);
  FgmState state = make_fgm_state(
      inst,
      opts.lambda0.value_or(Vector(static_cast<std::size_t>(inst.m()), 0.0)),
      lipschitz);

  FgmResult result;
  result.lipschitz = lipschitz;
  result.trace.parameters = to_json(opts);
  result.trace.parameters["epsilon"] = cfg.epsilon;
  result.trace.parameters["mu"] = cfg.mu;
  result.trace.parameters["strong_concavity"] = cfg.strong_concavity;
  result.trace.parameters["lipschitz"] = lipschitz;

  const std::uint64_t limit =
      std::min(opts.max_iter, opts.fixed_iterations.value_or(opts.max_iter));
  const double gap_target = 0.5 * cfg.epsilon;
  const double violation_target =
      cfg.r_q ? cfg.epsilon / (4.0 * *cfg.r_q) : 0.0;

  while (state.t < limit) {
    fgm_step(state, oracle);
    if (state.t % opts.trace_stride != 0 && state.t != limit) continue;

    const Vector x_hat = averaged_primal(state);
    const auto cert =
        evaluate_certificate(oracle, state.y, x_hat, state.weight, lipschitz);
    result.trace.rows.push_back({state.t, oracle.calls(), cert.utility,
                                 cert.violation, cert.gap, StepType::fgm});
    if (opts.use_certificate && cert.gap <= gap_target &&
        cert.violation <= violation_target) {
      result.converged = true;
      break;
    }
  }
  if (!opts.use_certificate) result.converged = true;

  result.iterations = state.t;
  result.x_hat = averaged_primal(state);
  result.lambda_final = std::move(state.lambda);
  result.y_final = std::move(state.y);
  result.oracle_calls = oracle.calls();
  return result;
}

std::uint64_t fgm_iterations_bound(const SmoothingConfig& cfg, double norm_c,
                                   double mu_strong, double eps) {
  if (!(eps > 0.0) || !(norm_c > 0.0)) {
    throw std::invalid_argument("fgm_iterations_bound: eps and ||C|| must be > 0");
  }
  if (!cfg.r_q) throw std::invalid_argument("fgm_iterations_bound needs R_q");
  const double r_q = *cfg.r_q;
  const double plain = std::floor(8.0 * std::sqrt(13.0) * r_q * cfg.r_p * norm_c / eps);
  double bound = plain;
  if (mu_strong > 0.0) {
    const double strong = std::floor(2.0 * std::sqrt(26.0) *
                                     std::sqrt(r_q * cfg.r_p) * norm_c /
                                     std::sqrt(mu_strong * eps));
    bound = std::min(plain, strong);
  }
  return static_cast<std::uint64_t>(bound);
}

nlohmann::json to_json(const FgmOptions& opts) {
  nlohmann::json doc = {{"max_iter", opts.max_iter},
                        {"use_certificate", opts.use_certificate},
                        {"lipschitz_method", method_name(opts.lipschitz)},
                        {"trace_stride", opts.trace_stride}};
  if (opts.fixed_iterations) doc["fixed_iterations"] = *opts.fixed_iterations;
  return doc;
}

}  // namespace netum

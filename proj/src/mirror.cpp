#include "netum/mirror.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "netum/oracle.hpp"

namespace netum {

MdState make_md_state(const ProblemInstance& inst, double eps,
                      double gradient_bound, Vector x0, std::uint64_t seed,
                      bool literal_sign) {
  const auto n = static_cast<std::size_t>(inst.n());
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be > 0");
  if (!(gradient_bound > 0.0)) throw std::invalid_argument("M_U must be > 0");
  if (x0.size() != n) throw std::invalid_argument("x0 has wrong length");
  if (std::any_of(x0.begin(), x0.end(), [](double v) { return !(v >= 0.0); })) {
    throw std::invalid_argument("x0 must be nonnegative");
  }

  MdState state;
  state.rng = Rng(seed);
  state.eps = eps;
  state.gradient_bound = gradient_bound;
  state.max_row_norm = max_row_dual_norm(inst.matrix(), inst.norm_p());
  const double nd = static_cast<double>(n);
  state.step_productive = eps * nd / (gradient_bound * gradient_bound);
  state.step_nonproductive =
      state.max_row_norm > 0.0
          ? eps * nd / (state.max_row_norm * state.max_row_norm)
          : 0.0;
  state.literal_sign = literal_sign;
  state.residual = residual(inst, x0);
  state.x = std::move(x0);
  state.productive_sum.assign(n, 0.0);
  state.sum_synced_at.assign(n, 0);
  state.jt_histogram.assign(static_cast<std::size_t>(inst.m()), 0);
  state.violation_checks = inst.matrix().nnz();
  return state;
}

std::optional<int> most_violated(std::span<const double> residual, double eps,
                                 double* max_residual) {
  int worst = -1;
  double worst_value = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < residual.size(); ++j) {
    if (residual[j] > worst_value) {
      worst_value = residual[j];
      worst = static_cast<int>(j);
    }
  }
  if (max_residual != nullptr) {
    *max_residual = worst < 0 ? -std::numeric_limits<double>::infinity()
                              : worst_value;
  }
  if (worst < 0 || worst_value <= eps) return std::nullopt;
  return worst;
}

double productive_update(double x, double derivative, double step,
                         bool literal_sign) {
  const double v = literal_sign ? x - step * derivative : x + step * derivative;
  return v > 0.0 ? v : 0.0;
}

double nonproductive_update(double x, double step) {
  const double v = x - step;
  return v > 0.0 ? v : 0.0;
}

void sync_productive_sum(double x, std::uint64_t productive_count,
                         double& sum, std::uint64_t& synced_at) {
  if (productive_count != synced_at) {
    sum += x * static_cast<double>(productive_count - synced_at);
    synced_at = productive_count;
  }
}

double averaged_component(double x, double sum, std::uint64_t synced_at,
                          std::uint64_t productive_count) {
  double total = sum;
  if (productive_count != synced_at) {
    total += x * static_cast<double>(productive_count - synced_at);
  }
  return total / static_cast<double>(productive_count);
}

MdStepInfo md_step(MdState& state, const ProblemInstance& inst) {
  const IncidenceMatrix& c = inst.matrix();
  MdStepInfo info;
  const auto worst = most_violated(state.residual, state.eps, &info.max_residual);

  int i = 0;
  double updated = 0.0;
  if (!worst) {
    info.branch = MdBranch::productive;
    ++state.productive_count;  // x_t joins the productive set
    i = static_cast<int>(state.rng.uniform_index(state.x.size()));
    const auto idx = static_cast<std::size_t>(i);
    const double g = inst.utility().derivative(idx, state.x[idx]);
    if (std::abs(g) > state.gradient_bound) state.gradient_bound_violated = true;
    updated = productive_update(state.x[idx], g, state.step_productive,
                                state.literal_sign);
  } else {
    info.branch = MdBranch::nonproductive;
    info.connection = *worst;
    const auto related = c.row(*worst);
    if (related.empty()) {
      throw std::invalid_argument("connection " + std::to_string(*worst) +
                                  " is violated but relates to no vertex");
    }
    i = related[state.rng.uniform_index(related.size())];
    ++state.jt_histogram[static_cast<std::size_t>(*worst)];
    updated = nonproductive_update(state.x[static_cast<std::size_t>(i)],
                                   state.step_nonproductive);
  }

  const auto idx = static_cast<std::size_t>(i);
  sync_productive_sum(state.x[idx], state.productive_count,
                      state.productive_sum[idx], state.sum_synced_at[idx]);
  const double delta = updated - state.x[idx];
  state.x[idx] = updated;
  for (int j : c.col(i)) state.residual[static_cast<std::size_t>(j)] += delta;

  ++state.oracle_calls;
  state.violation_checks += c.col_degree(i);
  ++state.t;
  info.vertex = i;
  info.new_value = updated;
  return info;
}

std::optional<Vector> productive_average(const MdState& state) {
  if (state.productive_count == 0) return std::nullopt;
  Vector x_hat(state.x.size());
  for (std::size_t i = 0; i < x_hat.size(); ++i) {
    x_hat[i] = averaged_component(state.x[i], state.productive_sum[i],
                                  state.sum_synced_at[i],
                                  state.productive_count);
  }
  return x_hat;
}

MdTraceRecorder::MdTraceRecorder(const ProblemInstance& inst,
                                 std::uint64_t stride,
                                 std::uint64_t total_steps)
    : inst_(&inst), stride_(stride), total_(total_steps) {
  if (stride == 0) throw std::invalid_argument("trace_stride must be >= 1");
}

void MdTraceRecorder::after_step(std::uint64_t t, MdBranch branch,
                                 std::span<const double> x,
                                 std::span<const double> sum,
                                 std::span<const std::uint64_t> synced_at,
                                 std::uint64_t productive_count,
                                 std::uint64_t oracle_calls,
                                 SolverTrace& trace) const {
  if (t % stride_ != 0 && t != total_) return;
  TraceRow row;
  row.iter = t;
  row.oracle_calls = oracle_calls;
  row.gap = std::numeric_limits<double>::quiet_NaN();
  row.step_type = branch == MdBranch::productive ? StepType::productive
                                                 : StepType::nonproductive;
  if (productive_count == 0) {
    row.utility = utility_total(*inst_, x);
    row.violation = max_violation(*inst_, x);
  } else {
    Vector x_hat(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      x_hat[i] = averaged_component(x[i], sum[i], synced_at[i], productive_count);
    }
    row.utility = utility_total(*inst_, x_hat);
    row.violation = max_violation(*inst_, x_hat);
  }
  trace.rows.push_back(row);
}

void finish_md_result(const ProblemInstance& inst, const MdState& state,
                      MdResult& result) {
  result.iterations = state.t;
  result.productive_count = state.productive_count;
  result.nonproductive_count = state.nonproductive_count();
  result.productive_fraction =
      state.t == 0 ? 0.0
                   : static_cast<double>(state.productive_count) /
                         static_cast<double>(state.t);
  result.jt_histogram = state.jt_histogram;
  result.x_final = state.x;
  result.gradient_bound_violated = state.gradient_bound_violated;
  result.oracle_calls = state.oracle_calls;
  result.violation_checks = state.violation_checks;
  result.x_hat = productive_average(state);
  result.all_nonproductive = !result.x_hat.has_value();
  if (result.x_hat) {
    result.x_hat_max_violation = max_violation(inst, *result.x_hat);
    result.lambda_hat =
        reconstruct_dual(state.jt_histogram, state.productive_count,
                         state.gradient_bound, state.max_row_norm);
  } else {
    result.x_hat_max_violation = std::numeric_limits<double>::quiet_NaN();
  }
}

MdResult md_solve(const ProblemInstance& inst, double eps,
                  double gradient_bound, Vector x0, std::uint64_t n_steps,
                  std::uint64_t seed, const MdOptions& opts) {
  if (n_steps == 0) throw std::invalid_argument("md_solve needs N >= 1");
  MdState state = make_md_state(inst, eps, gradient_bound, std::move(x0), seed,
                                opts.literal_sign);
  const MdTraceRecorder recorder(inst, opts.trace_stride, n_steps);

  MdResult result;
  result.trace.parameters = {{"eps", eps},
                             {"gradient_bound", gradient_bound},
                             {"steps", n_steps},
                             {"seed", seed},
                             {"literal_sign", opts.literal_sign},
                             {"trace_stride", opts.trace_stride}};
  while (state.t < n_steps) {
    const MdStepInfo info = md_step(state, inst);
    if (opts.record_steps) result.steps.push_back(info);
    recorder.after_step(state.t, info.branch, state.x, state.productive_sum,
                        state.sum_synced_at, state.productive_count,
                        state.oracle_calls, result.trace);
  }
  finish_md_result(inst, state, result);
  return result;
}

std::uint64_t md_iterations_bound(double gradient_bound, double max_row_norm,
                                  std::uint64_t n, double r_p, double eps) {
  if (!(gradient_bound > 0.0) || !(max_row_norm > 0.0) || n == 0 ||
      !(r_p > 0.0) || !(eps > 0.0)) {
    throw std::invalid_argument("md_iterations_bound: inputs must be positive");
  }
  const double scale = std::max(gradient_bound, max_row_norm);
  const double nd = static_cast<double>(n);
  const double value = 72.0 * scale * scale * nd * nd * r_p * r_p / (eps * eps);
  if (!(value < 0x1.0p63)) {
    throw std::overflow_error("md_iterations_bound exceeds 2^63");
  }
  return static_cast<std::uint64_t>(std::ceil(value));
}

Vector reconstruct_dual(std::span<const std::uint64_t> jt_histogram,
                        std::uint64_t productive_count, double gradient_bound,
                        double max_row_norm) {
  if (productive_count == 0) {
    throw std::domain_error("dual reconstruction needs a productive step");
  }
  if (!(max_row_norm > 0.0)) {
    throw std::invalid_argument("max row norm must be > 0");
  }
  const double scale = gradient_bound * gradient_bound /
                       (static_cast<double>(productive_count) *
                        max_row_norm * max_row_norm);
  Vector lambda(jt_histogram.size());
  for (std::size_t j = 0; j < lambda.size(); ++j) {
    lambda[j] = scale * static_cast<double>(jt_histogram[j]);
  }
  return lambda;
}

ComponentGradient randomized_gradient(const ProblemInstance& inst,
                                      std::span<const double> x, int i) {
  if (i < 0 || i >= inst.n()) throw std::out_of_range("vertex index");
  const auto idx = static_cast<std::size_t>(i);
  return {i, static_cast<double>(inst.n()) * inst.utility().derivative(idx, x[idx])};
}

double default_gradient_bound(const ProblemInstance& inst) {
  const auto* quad = inst.quadratic_utility();
  if (quad == nullptr) {
    throw std::invalid_argument("M_U default needs a quadratic utility");
  }
  double bound = 0.0;
  for (double ai : quad->a()) bound = std::max(bound, std::abs(ai));
  if (!(bound > 0.0)) throw std::invalid_argument("M_U default is zero");
  return bound;
}

double md_duality_gap(const ProblemInstance& inst, const MdResult& result) {
  if (!result.x_hat || !result.lambda_hat) {
    throw std::domain_error("no productive average to evaluate");
  }
  SmoothingConfig bare;
  bare.x0 = Vector(static_cast<std::size_t>(inst.n()), 0.0);
  SmoothedDualOracle oracle(inst, bare);
  return oracle.dual_value(*result.lambda_hat) -
         utility_total(inst, *result.x_hat);
}

}  // namespace netum

#ifndef NETUM_MIRROR_HPP
#define NETUM_MIRROR_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "netum/model.hpp"
#include "netum/rng.hpp"
#include "netum/trace.hpp"

namespace netum {

enum class MdBranch { productive, nonproductive };

/// Randomized switching mirror descent state.
///
/// `residual` caches Cx - b and is updated only on the rows of the vertex
/// that changed. The productive-iterate sum is kept lazily: component i of
/// the sum is current up to `sum_synced_at[i]` productive iterations.
struct MdState {
  std::uint64_t t = 0;
  Vector x;
  Vector residual;
  std::uint64_t productive_count = 0;
  Vector productive_sum;
  std::vector<std::uint64_t> sum_synced_at;
  std::vector<std::uint64_t> jt_histogram;
  Rng rng{0};
  double eps = 0.0;
  double gradient_bound = 0.0;  // M_U
  double max_row_norm = 0.0;    // max_j ||C_j||_{p*}
  double step_productive = 0.0;     // eps n / M_U^2
  double step_nonproductive = 0.0;  // eps n / max_j ||C_j||^2
  bool literal_sign = false;
  bool gradient_bound_violated = false;
  std::uint64_t oracle_calls = 0;
  std::uint64_t violation_checks = 0;

  std::uint64_t nonproductive_count() const { return t - productive_count; }
};

struct MdStepInfo {
  MdBranch branch = MdBranch::productive;
  int vertex = -1;
  int connection = -1;          // j_t on non-productive steps
  double max_residual = 0.0;    // max_j (C_j x_t - b_j) at the branch check
  double new_value = 0.0;

  friend bool operator==(const MdStepInfo&, const MdStepInfo&) = default;
};

MdState make_md_state(const ProblemInstance& inst, double eps,
                      double gradient_bound, Vector x0, std::uint64_t seed,
                      bool literal_sign = false);

/// One step. Productive when every cached residual is <= eps: a uniformly
/// drawn vertex takes an ascent step of size eps n / M_U^2 along u_i'
/// (descent with `literal_sign`), clamped at 0. Otherwise the most violated
/// connection j_t (lowest index on ties) has a uniformly drawn related vertex
/// lowered by eps n / max_j ||C_j||^2. Throws std::invalid_argument when j_t
/// has no related vertex.
MdStepInfo md_step(MdState& state, const ProblemInstance& inst);

// Step primitives, shared with the protocol simulator.

/// Lowest index of the largest residual, or nullopt when all are <= eps.
std::optional<int> most_violated(std::span<const double> residual, double eps,
                                 double* max_residual = nullptr);
double productive_update(double x, double derivative, double step,
                         bool literal_sign);
double nonproductive_update(double x, double step);
/// Brings sum_i up to date with `productive_count` before x_i changes.
void sync_productive_sum(double x, std::uint64_t productive_count,
                         double& sum, std::uint64_t& synced_at);
/// x_hat_i from a lazily kept sum, without modifying it.
double averaged_component(double x, double sum, std::uint64_t synced_at,
                          std::uint64_t productive_count);

/// Average of the productive iterates; nullopt while none exist.
std::optional<Vector> productive_average(const MdState& state);

struct MdOptions {
  bool literal_sign = false;
  /// Record a trace row every `trace_stride` steps (and after the last).
  std::uint64_t trace_stride = 1;
  bool record_steps = false;
};

struct MdResult {
  std::optional<Vector> x_hat;
  std::optional<Vector> lambda_hat;
  SolverTrace trace;
  double productive_fraction = 0.0;
  std::uint64_t iterations = 0;
  std::uint64_t productive_count = 0;
  std::uint64_t nonproductive_count = 0;
  std::vector<std::uint64_t> jt_histogram;
  Vector x_final;
  /// max_j (C_j x_hat - b_j)_+, NaN without x_hat.
  double x_hat_max_violation = 0.0;
  bool all_nonproductive = false;
  bool gradient_bound_violated = false;
  std::uint64_t oracle_calls = 0;
  std::uint64_t violation_checks = 0;
  std::vector<MdStepInfo> steps;
};

/// Appends trace rows for a run: utility and max violation of the current
/// productive average (of the iterate itself before the first productive
/// step), gap left NaN.
class MdTraceRecorder {
 public:
  MdTraceRecorder(const ProblemInstance& inst, std::uint64_t stride,
                  std::uint64_t total_steps);
  /// Called after step `t` (1-based) finished.
  void after_step(std::uint64_t t, MdBranch branch, std::span<const double> x,
                  std::span<const double> sum,
                  std::span<const std::uint64_t> synced_at,
                  std::uint64_t productive_count, std::uint64_t oracle_calls,
                  SolverTrace& trace) const;

 private:
  const ProblemInstance* inst_;
  std::uint64_t stride_;
  std::uint64_t total_;
};

MdResult md_solve(const ProblemInstance& inst, double eps,
                  double gradient_bound, Vector x0, std::uint64_t n_steps,
                  std::uint64_t seed, const MdOptions& opts = {});

/// Builds the result fields shared by md_solve and the protocol run.
void finish_md_result(const ProblemInstance& inst, const MdState& state,
                      MdResult& result);

/// ceil(72 max{M_U, maxnorm}^2 n^2 R_p^2 / eps^2).
std::uint64_t md_iterations_bound(double gradient_bound, double max_row_norm,
                                  std::uint64_t n, double r_p, double eps);

/// lambda_hat_j = M_U^2 / (|I| maxnorm^2) * #{t in J : j_t = j}.
Vector reconstruct_dual(std::span<const std::uint64_t> jt_histogram,
                        std::uint64_t productive_count, double gradient_bound,
                        double max_row_norm);

struct ComponentGradient {
  int index = 0;
  double value = 0.0;  // n u_i'(x_i)
};

/// Unbiased single-vertex estimate e_i n u_i'(x_i) of grad U(x).
ComponentGradient randomized_gradient(const ProblemInstance& inst,
                                      std::span<const double> x, int i);

/// M_U for quadratic utilities: max_i a_i, valid on 0 <= x_i <= a_i/(n sigma).
double default_gradient_bound(const ProblemInstance& inst);

/// phi(lambda_hat) - U(x_hat) with the unsmoothed dual.
double md_duality_gap(const ProblemInstance& inst, const MdResult& result);

}  // namespace netum

#endif  // NETUM_MIRROR_HPP

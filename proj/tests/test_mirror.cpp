#include <cmath>
#include <numeric>

#include "doctest.h"
#include "netum/mirror.hpp"
#include "support.hpp"

using namespace netum;
using testing_support::Gen;

TEST_CASE("interior point takes a productive step on one component") {
  auto inst = ProblemInstance::quadratic(IncidenceMatrix(2, 3, {{0, 0}, {0, 1}, {1, 2}}),
                                         {10, 10}, {1, 2, 3}, 0.1);
  MdState state = make_md_state(inst, 0.1, 3.0, {1, 1, 1}, 5);
  const Vector before = state.x;
  const auto info = md_step(state, inst);
  CHECK(info.branch == MdBranch::productive);
  int changed = 0;
  for (int i = 0; i < 3; ++i) changed += state.x[i] != before[i] ? 1 : 0;
  CHECK(changed == 1);
  const auto i = static_cast<std::size_t>(info.vertex);
  const double g = 1.0 + static_cast<double>(i) - 0.3 * 1.0;
  CHECK(state.x[i] == doctest::Approx(1.0 + 0.1 * 3 / 9.0 * g));
  CHECK(state.productive_count == 1);
  CHECK(state.oracle_calls == 1);
}

TEST_CASE("the origin is always productive") {
  Gen gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = gen.instance(4, 6, 0.4, 1, 10, 0, 5, 0.01);
    MdState state = make_md_state(inst, 1e-6, 10.0, Vector(6, 0.0), trial);
    CHECK(md_step(state, inst).branch == MdBranch::productive);
  }
}

TEST_CASE("single violated link lowers its only vertex") {
  // row 0 relates only to vertex 1; row 1 has two vertices so maxnorm^2 = 2
  auto inst = ProblemInstance::quadratic(
      IncidenceMatrix(2, 3, {{0, 1}, {1, 0}, {1, 2}}), {1.0, 100.0}, {1, 1, 1}, 0.1);
  const double eps = 0.05;
  MdState state = make_md_state(inst, eps, 1.0, {0.0, 5.0, 0.0}, 9);
  const auto info = md_step(state, inst);
  CHECK(info.branch == MdBranch::nonproductive);
  CHECK(info.connection == 0);
  CHECK(info.vertex == 1);
  CHECK(state.x[1] == doctest::Approx(std::max(0.0, 5.0 - eps * 3 / 2.0)));
  CHECK(state.jt_histogram == std::vector<std::uint64_t>{1, 0});
  CHECK(state.residual[0] == doctest::Approx(state.x[1] - 1.0));
}

TEST_CASE("ties go to the lowest index") {
  double worst = 0;
  CHECK(most_violated(Vector{2.0, 3.0, 3.0, 1.0}, 0.5, &worst) == 1);
  CHECK(worst == 3.0);
  CHECK_FALSE(most_violated(Vector{0.5, -1.0}, 0.5).has_value());
  CHECK_FALSE(most_violated(Vector{}, 0.5).has_value());
}

TEST_CASE("slack capacities make every step productive") {
  // curvature sigma n = 1, unconstrained maximizer (1, 2)
  auto inst = ProblemInstance::quadratic(IncidenceMatrix(1, 2, {{0, 0}, {0, 1}}), {1e6},
                                         {1.0, 2.0}, 0.5);
  const auto r = md_solve(inst, 0.01, 2.0, {0.0, 0.0}, 200000, 17, {.trace_stride = 1000});
  CHECK(r.productive_count == 200000);
  CHECK(r.nonproductive_count == 0);
  REQUIRE(r.x_hat);
  CHECK(std::abs((*r.x_hat)[0] - 1.0) <= 0.05);
  CHECK(std::abs((*r.x_hat)[1] - 2.0) <= 0.05 * 2.0);
  CHECK_FALSE(r.gradient_bound_violated);
  REQUIRE(r.lambda_hat);
  CHECK(*r.lambda_hat == Vector{0.0});
}

TEST_CASE("one step from a feasible start averages the start") {
  auto inst = ProblemInstance::quadratic(IncidenceMatrix(1, 2, {{0, 0}, {0, 1}}), {5},
                                         {1.0, 2.0}, 0.5);
  const auto r = md_solve(inst, 0.1, 2.0, {0.5, 0.25}, 1, 1);
  REQUIRE(r.x_hat);
  CHECK(*r.x_hat == Vector{0.5, 0.25});
  CHECK(r.productive_fraction == 1.0);
}

TEST_CASE("all non-productive runs carry no average") {
  auto inst = ProblemInstance::quadratic(IncidenceMatrix(1, 1, {{0, 0}}), {0.0}, {1.0}, 1.0);
  const auto r = md_solve(inst, 0.01, 1.0, {1000.0}, 10, 1);
  CHECK(r.all_nonproductive);
  CHECK_FALSE(r.x_hat.has_value());
  CHECK_FALSE(r.lambda_hat.has_value());
  CHECK(std::isnan(r.x_hat_max_violation));
  CHECK_THROWS_AS(md_duality_gap(inst, r), std::domain_error);
}

TEST_CASE("run invariants on random instances") {
  Gen gen(29);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = gen.integer(1, 6);
    const int n = gen.integer(1, 8);
    auto inst = gen.instance(m, n, 0.4, 1, 10, 0.5, 4, 1.0 / n);
    const double eps = gen.uniform(0.05, 0.5);
    const Vector x0 = gen.vector(n, 0, 6);
    const auto steps = static_cast<std::uint64_t>(gen.integer(1, 3000));
    MdOptions opts;
    opts.record_steps = true;
    const auto r = md_solve(inst, eps, default_gradient_bound(inst), x0, steps, trial, opts);
    CHECK(r.productive_count + r.nonproductive_count == steps);
    CHECK(r.productive_count + std::accumulate(r.jt_histogram.begin(), r.jt_histogram.end(),
                                               std::uint64_t{0}) == steps);
    for (double v : r.x_final) CHECK(v >= 0.0);
    for (const auto& s : r.steps) {
      if (s.branch == MdBranch::productive) CHECK(s.max_residual <= eps);
      else CHECK(s.max_residual > eps);
    }
    if (r.x_hat) {
      for (double v : *r.x_hat) CHECK(v >= 0.0);
      CHECK(r.x_hat_max_violation <= eps + 1e-12);
    }
    CHECK(r.trace.rows.size() == steps);
    CHECK(r.oracle_calls == steps);
    std::uint64_t checks = inst.matrix().nnz();
    for (const auto& s : r.steps) checks += inst.matrix().col_degree(s.vertex);
    CHECK(r.violation_checks == checks);

    const auto again = md_solve(inst, eps, default_gradient_bound(inst), x0, steps, trial, opts);
    CHECK(same_rows(r.trace, again.trace));
    CHECK(r.steps == again.steps);
  }
}

TEST_CASE("lazy productive sum equals the eager average") {
  Gen gen(37);
  auto inst = gen.instance(3, 5, 0.5, 1, 10, 1, 4, 0.2);
  MdState state = make_md_state(inst, 0.2, 10.0, gen.vector(5, 0, 3), 4);
  Vector eager(5, 0.0);
  std::uint64_t count = 0;
  for (int t = 0; t < 2000; ++t) {
    const Vector before = state.x;
    const auto info = md_step(state, inst);
    if (info.branch == MdBranch::productive) {
      for (int i = 0; i < 5; ++i) eager[i] += before[i];
      ++count;
    }
  }
  REQUIRE(count > 0);
  const auto avg = productive_average(state);
  REQUIRE(avg);
  for (int i = 0; i < 5; ++i) {
    CHECK((*avg)[i] == doctest::Approx(eager[i] / static_cast<double>(count)).epsilon(1e-12));
  }
}

TEST_CASE("gradient bound monitoring") {
  auto inst = ProblemInstance::quadratic(IncidenceMatrix(1, 2, {{0, 0}, {0, 1}}), {100},
                                         {3.0, 5.0}, 0.5);
  CHECK(md_solve(inst, 0.1, 0.5, {0, 0}, 50, 1).gradient_bound_violated);
  CHECK_FALSE(md_solve(inst, 0.1, default_gradient_bound(inst), {0, 0}, 5000, 1)
                  .gradient_bound_violated);
}

TEST_CASE("printed sign variant descends") {
  auto inst = ProblemInstance::quadratic(IncidenceMatrix(1, 1, {{0, 0}}), {100}, {3.0}, 1.0);
  const auto up = md_solve(inst, 0.1, 3.0, {1.0}, 20, 1);
  const auto down = md_solve(inst, 0.1, 3.0, {1.0}, 20, 1, {.literal_sign = true});
  CHECK(up.x_final[0] > 1.0);
  CHECK(down.x_final[0] < 1.0);
  CHECK(productive_update(1.0, 2.0, 0.1, false) == doctest::Approx(1.2));
  CHECK(productive_update(1.0, 2.0, 0.1, true) == doctest::Approx(0.8));
  CHECK(productive_update(0.1, -5.0, 0.1, false) == 0.0);
}

TEST_CASE("invalid inputs") {
  auto inst = ProblemInstance::quadratic(IncidenceMatrix(1, 1, {{0, 0}}), {1}, {3.0}, 1.0);
  CHECK_THROWS_AS(md_solve(inst, 0.1, 1.0, {0.0}, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(md_solve(inst, 0.0, 1.0, {0.0}, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(md_solve(inst, 0.1, 0.0, {0.0}, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(md_solve(inst, 0.1, 1.0, {-1.0}, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(md_solve(inst, 0.1, 1.0, {0.0, 0.0}, 1, 1), std::invalid_argument);
}

TEST_CASE("step bound") {
  CHECK(md_iterations_bound(1, 1, 1, 1, 1) == 72);
  CHECK(md_iterations_bound(1, 1, 1, 1, 0.5) == 288);
  CHECK(md_iterations_bound(1, 1, 1, 1, 0.5) == 4 * md_iterations_bound(1, 1, 1, 1, 1));
  // with p = 1 the row norm is 1 whatever the pattern
  Gen gen(5);
  for (int trial = 0; trial < 5; ++trial) {
    const auto c = gen.matrix(5, 6, gen.uniform(0.2, 0.9));
    CHECK(max_row_dual_norm(c, Norm::l1) == 1.0);
    CHECK(md_iterations_bound(0.5, max_row_dual_norm(c, Norm::l1), 6, 2, 0.1) ==
          md_iterations_bound(0.5, 1.0, 6, 2, 0.1));
  }
  CHECK_THROWS_AS(md_iterations_bound(0, 1, 1, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(md_iterations_bound(1e300, 1, 1000, 1, 1e-300), std::overflow_error);
}

TEST_CASE("dual reconstruction") {
  CHECK(reconstruct_dual(std::vector<std::uint64_t>{0, 0}, 3, 2.0, 1.0) == Vector{0, 0});
  CHECK(reconstruct_dual(std::vector<std::uint64_t>{3, 0}, 2, 1.0, 1.0) == Vector{1.5, 0});
  const std::vector<std::uint64_t> hist{4, 1, 7};
  const Vector base = reconstruct_dual(hist, 5, 1.5, 2.0);
  const Vector scaled = reconstruct_dual(hist, 5, 3.0 * 1.5, 2.0);
  for (int j = 0; j < 3; ++j) CHECK(scaled[j] == doctest::Approx(9.0 * base[j]));
  CHECK_THROWS_AS(reconstruct_dual(hist, 0, 1.0, 1.0), std::domain_error);
}

TEST_CASE("randomized gradient is unbiased") {
  Gen gen(53);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = gen.integer(1, 12);
    auto inst = gen.instance(3, n, 0.4, 1, 50, 1, 5, 0.01);
    const Vector x = gen.vector(n, 0, 30);
    const Vector grad = utility_gradient(inst, x);
    Vector mean(n, 0.0);
    for (int i = 0; i < n; ++i) {
      const auto g = randomized_gradient(inst, x, i);
      CHECK(g.index == i);
      mean[i] += g.value / n;
    }
    for (int i = 0; i < n; ++i) CHECK(std::abs(mean[i] - grad[i]) <= 1e-14 * std::max(1.0, std::abs(grad[i])));
  }
  auto inst = ProblemInstance::quadratic(IncidenceMatrix(1, 3, {{0, 0}}), {1}, {2, 3, 4}, 0.1);
  CHECK(randomized_gradient(inst, Vector(3, 0.0), 2).value == doctest::Approx(12.0));
  CHECK_THROWS_AS(randomized_gradient(inst, Vector(3, 0.0), 3), std::out_of_range);
}

TEST_CASE("duality gap of a converged run is small") {
  auto inst = ProblemInstance::quadratic(IncidenceMatrix(1, 2, {{0, 0}, {0, 1}}), {1.0},
                                         {2.0, 1.5}, 0.5);
  const auto r = md_solve(inst, 0.02, 2.0, {0, 0}, 400000, 3, {.trace_stride = 100000});
  REQUIRE(r.x_hat);
  const double gap = md_duality_gap(inst, r);
  CHECK(std::isfinite(gap));
  CHECK(std::abs(gap) < 0.5);
}

#include <cmath>

#include "doctest.h"
#include "netum/simnet.hpp"
#include "support.hpp"

using namespace netum;
using testing_support::Gen;

namespace {

SmoothingConfig config_for(const ProblemInstance& inst, double eps, double mu) {
  SmoothingOptions opts;
  opts.epsilon = eps;
  opts.mu = mu;
  return make_smoothing_config(inst, opts);
}

FgmOptions fixed(std::uint64_t iters) {
  FgmOptions fo;
  fo.use_certificate = false;
  fo.fixed_iterations = iters;
  return fo;
}

}  // namespace

TEST_CASE("network enforces locality") {
  IncidenceMatrix c(2, 2, {{0, 0}, {1, 1}});
  Network net(c);
  net.send(MessageKind::rate_report, AgentId::vertex(0), AgentId::connection(0));
  net.send(MessageKind::price_notify, AgentId::connection(1), AgentId::vertex(1));
  net.send(MessageKind::iter_type_request, AgentId::vertex(1), AgentId::center());
  CHECK(net.deliver().size() == 3);
  CHECK(net.now() == 1);
  CHECK(net.deliver().empty());
  CHECK(net.now() == 1);  // idle rounds cost nothing

  net.send(MessageKind::rate_report, AgentId::vertex(0), AgentId::connection(1));
  CHECK_THROWS_AS(net.deliver(), ProtocolError);
  net.send(MessageKind::rate_report, AgentId::vertex(0), AgentId::vertex(1));
  CHECK_THROWS_AS(net.deliver(), ProtocolError);

  const auto& stats = net.stats();
  std::uint64_t total = 0;
  for (auto v : stats.messages_by_kind) total += v;
  CHECK(stats.total_messages() == total);
  CHECK(stats.messages(MessageKind::rate_report) == 1);
  const auto doc = to_json(stats);
  CHECK(doc.at("messages").at("RateReport") == 1);
  CHECK(doc.contains("ticks"));
  CHECK(doc.contains("oracle_calls"));
}

TEST_CASE("fgm protocol reproduces the centralized run") {
  Gen gen(83);
  for (int trial = 0; trial < 5; ++trial) {
    auto inst = gen.instance(gen.integer(2, 8), gen.integer(3, 15), 0.3, 1, 10, 1, 5, 0.05);
    const auto cfg = config_for(inst, 0.1, 0.2);
    const auto central = fgm_solve(inst, cfg, fixed(50));
    FgmProtocolOptions po;
    po.fgm = fixed(50);
    const auto [dist, stats] = run_fgm_protocol(inst, cfg, 50, po);
    REQUIRE(dist.x_hat.size() == central.x_hat.size());
    for (std::size_t i = 0; i < dist.x_hat.size(); ++i) {
      CHECK(std::abs(dist.x_hat[i] - central.x_hat[i]) <= 1e-9);
    }
    for (std::size_t j = 0; j < dist.lambda_final.size(); ++j) {
      CHECK(std::abs(dist.lambda_final[j] - central.lambda_final[j]) <= 1e-9);
      CHECK(std::abs(dist.y_final[j] - central.y_final[j]) <= 1e-9);
    }
    REQUIRE(dist.trace.rows.size() == central.trace.rows.size());
    for (std::size_t k = 0; k < dist.trace.rows.size(); ++k) {
      CHECK(std::abs(dist.trace.rows[k].utility - central.trace.rows[k].utility) <= 1e-9);
      CHECK(dist.trace.rows[k].oracle_calls == central.trace.rows[k].oracle_calls);
    }
    const std::uint64_t nnz = inst.matrix().nnz();
    CHECK(stats.messages(MessageKind::rate_report) == 50 * nnz);
    CHECK(stats.messages(MessageKind::price_notify) == 50 * nnz);
    CHECK(stats.total_messages() == 2 * nnz * 50);
    CHECK(stats.ticks == 100);
    CHECK(stats.component_oracle_calls == dist.oracle_calls);
  }
}

TEST_CASE("isolated vertex is never messaged") {
  // vertex 2 relates to nothing
  auto inst = ProblemInstance::quadratic(IncidenceMatrix(1, 3, {{0, 0}, {0, 1}}), {1.0},
                                         {2.0, 1.0, 3.0}, 1.0 / 3.0);
  const auto cfg = config_for(inst, 0.1, 0.5);
  FgmProtocolOptions po;
  po.fgm = fixed(20);
  bool touched = false;
  po.drop = [&](const Message& msg) {
    if ((msg.from.role == Role::vertex && msg.from.index == 2) ||
        (msg.to.role == Role::vertex && msg.to.index == 2)) {
      touched = true;
    }
    return false;
  };
  const auto [r, stats] = run_fgm_protocol(inst, cfg, 20, po);
  CHECK_FALSE(touched);
  // (a + mu x0) / (curvature + mu) with x0 = 0
  CHECK(r.x_hat[2] == doctest::Approx(3.0 / 1.5));
  CHECK(stats.total_messages() == 2 * 2 * 20);
}

TEST_CASE("a lost price deadlocks the named vertex") {
  Gen gen(89);
  auto inst = gen.instance(3, 4, 0.6, 1, 10, 1, 5, 0.1);
  const auto cfg = config_for(inst, 0.1, 0.2);
  FgmProtocolOptions po;
  po.fgm = fixed(10);
  po.drop = [](const Message& msg) {
    return msg.kind == MessageKind::price_notify && msg.to.index == 1 && msg.tick > 3;
  };
  try {
    run_fgm_protocol(inst, cfg, 10, po);
    FAIL("expected a deadlock");
  } catch (const ProtocolError& e) {
    CHECK(std::string(e.what()).find("vertex 1") != std::string::npos);
  }

  FgmProtocolOptions lost_rate;
  lost_rate.fgm = fixed(10);
  lost_rate.drop = [](const Message& msg) { return msg.kind == MessageKind::rate_report; };
  CHECK_THROWS_AS(run_fgm_protocol(inst, cfg, 10, lost_rate), ProtocolError);
}

TEST_CASE("md protocol is bit-identical to md_solve") {
  Gen gen(97);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = gen.integer(2, 12);
    auto inst = gen.instance(gen.integer(1, 6), n, 0.3, 1, 10, 0.5, 4, 1.0 / n);
    const Vector x0 = gen.vector(n, 0, 8);
    const double bound = default_gradient_bound(inst);
    MdOptions mo;
    mo.record_steps = true;
    const auto central = md_solve(inst, 0.2, bound, x0, 10000, trial, mo);
    MdProtocolOptions po;
    po.md = mo;
    const auto [dist, stats] = run_md_protocol(inst, 0.2, bound, x0, 10000, trial, po);
    CHECK(same_rows(central.trace, dist.trace));
    CHECK(central.steps == dist.steps);
    CHECK(central.x_final == dist.x_final);
    CHECK(central.x_hat == dist.x_hat);
    CHECK(central.lambda_hat == dist.lambda_hat);
    CHECK(central.jt_histogram == dist.jt_histogram);
    CHECK(central.violation_checks == dist.violation_checks);

    std::uint64_t updates = 0;
    for (const auto& s : dist.steps) updates += inst.matrix().col_degree(s.vertex);
    CHECK(stats.residual_updates == updates);
    CHECK(stats.jt_announcements == dist.nonproductive_count);
    CHECK(stats.messages(MessageKind::iter_type_request) == 10000);
    CHECK(stats.messages(MessageKind::iter_type_reply) == 10000);
    CHECK(stats.messages(MessageKind::update_notify) == 10000);
    CHECK(stats.component_oracle_calls == 10000);
  }
}

TEST_CASE("feasible runs never announce a violated link") {
  auto inst = ProblemInstance::quadratic(IncidenceMatrix(2, 3, {{0, 0}, {0, 1}, {1, 2}}),
                                         {1e6, 1e6}, {1, 2, 3}, 0.1);
  const auto [r, stats] = run_md_protocol(inst, 0.1, 3.0, Vector(3, 0.0), 2000, 4);
  CHECK(r.nonproductive_count == 0);
  CHECK(stats.jt_announcements == 0);
}

TEST_CASE("md protocol detects lost updates and cache drift") {
  Gen gen(101);
  auto inst = gen.instance(3, 5, 0.5, 1, 10, 0.5, 3, 0.2);
  const Vector x0 = gen.vector(5, 0, 5);
  MdProtocolOptions lossy;
  lossy.drop = [](const Message& msg) {
    return msg.kind == MessageKind::residual_report && msg.tick > 20;
  };
  CHECK_THROWS_AS(run_md_protocol(inst, 0.2, 10.0, x0, 100, 1, lossy), ProtocolError);

  MdProtocolOptions strict;
  strict.check_every = 1;
  strict.check_tolerance = -1.0;  // any comparison fails
  CHECK_THROWS_AS(run_md_protocol(inst, 0.2, 10.0, x0, 10, 1, strict), ProtocolError);
}

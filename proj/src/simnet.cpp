#include "netum/simnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace netum {

namespace {

std::size_t position_of(std::span<const int> sorted, int value) {
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), value);
  return static_cast<std::size_t>(it - sorted.begin());
}

struct FgmVertex {
  double rate = 0.0;
  double primal_accum = 0.0;
  std::vector<double> prices;  // aligned with C.col(i)
  std::vector<char> fresh;
};

struct FgmConnection {
  double lambda = 0.0;
  double lambda0 = 0.0;
  double y = 0.0;
  double z = 0.0;
  double grad_accum = 0.0;
  std::vector<double> rates;  // aligned with C.row(j)
  std::vector<char> fresh;
};

struct MdVertex {
  double rate = 0.0;
  double sum = 0.0;
  std::uint64_t synced_at = 0;
};

struct MdCenter {
  Vector residual;
  std::uint64_t productive_count = 0;
  std::vector<std::uint64_t> jt_histogram;
  Rng rng{0};
  bool gradient_bound_violated = false;
};

}  // namespace

std::string_view to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::rate_report: return "RateReport";
    case MessageKind::price_notify: return "PriceNotify";
    case MessageKind::rate_request: return "RateRequest";
    case MessageKind::price_request: return "PriceRequest";
    case MessageKind::iter_type_request: return "IterTypeRequest";
    case MessageKind::iter_type_reply: return "IterTypeReply";
    case MessageKind::update_notify: return "UpdateNotify";
    case MessageKind::residual_report: return "ResidualReport";
  }
  return "Unknown";
}

std::string describe(const AgentId& id) {
  switch (id.role) {
    case Role::vertex: return "vertex " + std::to_string(id.index);
    case Role::connection: return "connection " + std::to_string(id.index);
    case Role::center: return "center";
  }
  return "unknown agent";
}

std::uint64_t SimStats::total_messages() const {
  return std::accumulate(messages_by_kind.begin(), messages_by_kind.end(),
                         std::uint64_t{0});
}

nlohmann::json to_json(const SimStats& stats) {
  nlohmann::json messages = nlohmann::json::object();
  for (std::size_t k = 0; k < kMessageKinds; ++k) {
    messages[std::string(to_string(static_cast<MessageKind>(k)))] =
        stats.messages_by_kind[k];
  }
  return {{"messages", std::move(messages)},
          {"ticks", stats.ticks},
          {"oracle_calls", stats.component_oracle_calls}};
}

Network::Network(const IncidenceMatrix& c, DropFilter drop)
    : c_(&c), drop_(std::move(drop)) {}

void Network::send(MessageKind kind, AgentId from, AgentId to,
                   Payload payload) {
  in_flight_.push_back({kind, from, to, payload, now_});
}

void Network::check_locality(const Message& msg) const {
  const AgentId& a = msg.from;
  const AgentId& b = msg.to;
  if (a.role == Role::center || b.role == Role::center) return;
  if (a.role == b.role) {
    throw ProtocolError("locality: " + describe(a) + " messaged " + describe(b));
  }
  const int j = a.role == Role::connection ? a.index : b.index;
  const int i = a.role == Role::vertex ? a.index : b.index;
  if (!c_->contains(j, i)) {
    throw ProtocolError("locality: " + describe(a) + " and " + describe(b) +
                        " are not in relation");
  }
}

std::vector<Message> Network::deliver() {
  std::vector<Message> batch;
  batch.swap(in_flight_);
  if (batch.empty()) return batch;
  ++now_;
  stats_.ticks = now_;
  std::vector<Message> delivered;
  delivered.reserve(batch.size());
  for (auto& msg : batch) {
    check_locality(msg);
    if (drop_ && drop_(msg)) continue;
    ++stats_.messages_by_kind[static_cast<std::size_t>(msg.kind)];
    delivered.push_back(msg);
  }
  return delivered;
}

std::pair<FgmResult, SimStats> run_fgm_protocol(const ProblemInstance& inst,
                                                const SmoothingConfig& cfg,
                                                std::uint64_t iterations,
                                                FgmProtocolOptions opts) {
  const FgmOptions& fo = opts.fgm;
  if (fo.trace_stride == 0) throw std::invalid_argument("trace_stride must be >= 1");
  if (fo.use_certificate && !cfg.r_q) {
    throw std::invalid_argument("certificate rule needs R_q");
  }
  const IncidenceMatrix& c = inst.matrix();
  const auto m = static_cast<std::size_t>(inst.m());
  const auto n = static_cast<std::size_t>(inst.n());

  SmoothedDualOracle oracle(inst, cfg);
  const double lipschitz = solver_lipschitz(oracle, fo.lipschitz);
  const Vector lambda0 = fo.lambda0.value_or(Vector(m, 0.0));
  (void)make_fgm_state(inst, lambda0, lipschitz);  // validates lambda0 and L
  const double inv_l = 1.0 / lipschitz;

  std::vector<FgmVertex> vertices(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto related = c.col(static_cast<int>(i));
    vertices[i].prices.resize(related.size());
    vertices[i].fresh.assign(related.size(), 1);
    for (std::size_t k = 0; k < related.size(); ++k) {
      vertices[i].prices[k] = lambda0[static_cast<std::size_t>(related[k])];
    }
  }
  std::vector<FgmConnection> connections(m);
  for (std::size_t j = 0; j < m; ++j) {
    auto& conn = connections[j];
    conn.lambda = conn.lambda0 = conn.y = conn.z = lambda0[j];
    conn.rates.assign(c.row_degree(static_cast<int>(j)), 0.0);
    conn.fresh.assign(conn.rates.size(), 0);
  }

  Network net(c, std::move(opts.drop));
  FgmResult result;
  result.lipschitz = lipschitz;
  result.trace.parameters = to_json(fo);
  result.trace.parameters["epsilon"] = cfg.epsilon;
  result.trace.parameters["mu"] = cfg.mu;
  result.trace.parameters["strong_concavity"] = cfg.strong_concavity;
  result.trace.parameters["lipschitz"] = lipschitz;
  result.trace.parameters["protocol"] = true;

  const std::uint64_t limit = std::min(iterations, fo.max_iter);
  const double gap_target = 0.5 * cfg.epsilon;
  const double violation_target = cfg.r_q ? cfg.epsilon / (4.0 * *cfg.r_q) : 0.0;
  double weight = 0.0;
  std::uint64_t t = 0;

  auto assemble_x_hat = [&] {
    Vector x_hat(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) x_hat[i] = vertices[i].primal_accum / weight;
    return x_hat;
  };
  auto assemble = [&](auto field) {
    Vector out(m);
    for (std::size_t j = 0; j < m; ++j) out[j] = connections[j].*field;
    return out;
  };

  while (t < limit) {
    const double alpha = step_weight(t).value();
    const double tau = interpolation_weight(t).value();

    // Vertex phase: best response to the cached prices, report the rate.
    for (std::size_t i = 0; i < n; ++i) {
      auto& v = vertices[i];
      const auto related = c.col(static_cast<int>(i));
      double cost = 0.0;
      for (std::size_t k = 0; k < related.size(); ++k) {
        if (!v.fresh[k]) {
          throw ProtocolError("deadlock: vertex " + std::to_string(i) +
                              " waited past the barrier for a price from "
                              "connection " + std::to_string(related[k]));
        }
        cost += v.prices[k];
      }
      std::fill(v.fresh.begin(), v.fresh.end(), 0);
      v.rate = oracle.best_response_at_cost(static_cast<int>(i), cost);
      v.primal_accum += alpha * v.rate;
      for (int j : related) {
        net.send(MessageKind::rate_report, AgentId::vertex(static_cast<int>(i)),
                 AgentId::connection(j), {.value = v.rate});
      }
    }
    for (const Message& msg : net.deliver()) {
      auto& conn = connections[static_cast<std::size_t>(msg.to.index)];
      const auto k = position_of(c.row(msg.to.index), msg.from.index);
      conn.rates[k] = msg.payload.value;
      conn.fresh[k] = 1;
    }

    // Connection phase: local price update, then notify related vertices.
    for (std::size_t j = 0; j < m; ++j) {
      auto& conn = connections[j];
      const auto related = c.row(static_cast<int>(j));
      double load = 0.0;
      for (std::size_t k = 0; k < related.size(); ++k) {
        if (!conn.fresh[k]) {
          throw ProtocolError("deadlock: connection " + std::to_string(j) +
                              " waited past the barrier for a rate from "
                              "vertex " + std::to_string(related[k]));
        }
        load += conn.rates[k];
      }
      std::fill(conn.fresh.begin(), conn.fresh.end(), 0);
      const double g = inst.capacity()[j] - load;
      conn.grad_accum += alpha * g;
      conn.y = gradient_step(conn.lambda, g, lipschitz);
      const double zj = conn.lambda0 - inv_l * conn.grad_accum;
      conn.z = zj > 0.0 ? zj : 0.0;
      conn.lambda = tau * conn.z + (1.0 - tau) * conn.y;
      if (!std::isfinite(conn.lambda)) {
        throw std::runtime_error("fgm protocol: non-finite price at connection " +
                                 std::to_string(j));
      }
      for (int i : related) {
        net.send(MessageKind::price_notify,
                 AgentId::connection(static_cast<int>(j)), AgentId::vertex(i),
                 {.value = conn.lambda});
      }
    }
    for (const Message& msg : net.deliver()) {
      auto& v = vertices[static_cast<std::size_t>(msg.to.index)];
      const auto k = position_of(c.col(msg.to.index), msg.from.index);
      v.prices[k] = msg.payload.value;
      v.fresh[k] = 1;
    }

    weight += alpha;
    ++t;

    // Observer: trace and certificate, outside the protocol's messages.
    if (t % fo.trace_stride != 0 && t != limit) continue;
    const Vector x_hat = assemble_x_hat();
    const Vector y = assemble(&FgmConnection::y);
    const auto cert = evaluate_certificate(oracle, y, x_hat, weight, lipschitz);
    result.trace.rows.push_back({t, oracle.calls(), cert.utility, cert.violation,
                                 cert.gap, StepType::fgm});
    if (fo.use_certificate && cert.gap <= gap_target &&
        cert.violation <= violation_target) {
      result.converged = true;
      break;
    }
  }
  if (!fo.use_certificate) result.converged = true;

  result.iterations = t;
  result.x_hat = weight > 0.0 ? assemble_x_hat() : Vector(n, 0.0);
  result.lambda_final = assemble(&FgmConnection::lambda);
  result.y_final = assemble(&FgmConnection::y);
  result.oracle_calls = oracle.calls();

  SimStats stats = net.stats();
  stats.component_oracle_calls = oracle.calls();
  return {std::move(result), stats};
}

std::pair<MdResult, SimStats> run_md_protocol(const ProblemInstance& inst,
                                              double eps, double gradient_bound,
                                              Vector x0, std::uint64_t n_steps,
                                              std::uint64_t seed,
                                              MdProtocolOptions opts) {
  if (n_steps == 0) throw std::invalid_argument("md protocol needs N >= 1");
  if (opts.check_every == 0) throw std::invalid_argument("check_every must be >= 1");
  const IncidenceMatrix& c = inst.matrix();
  const auto m = static_cast<std::size_t>(inst.m());
  const auto n = static_cast<std::size_t>(inst.n());

  // Validates inputs and fixes the constants every agent is configured with.
  MdState config = make_md_state(inst, eps, gradient_bound, x0, seed,
                                 opts.md.literal_sign);

  std::vector<MdVertex> vertices(n);
  for (std::size_t i = 0; i < n; ++i) vertices[i].rate = x0[i];

  Network net(c, std::move(opts.drop));
  const AgentId center_id = AgentId::center();

  // Initial poll: vertices report rates to their connections, each
  // connection reports C_j x0 - b_j to the center.
  for (std::size_t i = 0; i < n; ++i) {
    for (int j : c.col(static_cast<int>(i))) {
      net.send(MessageKind::rate_report, AgentId::vertex(static_cast<int>(i)),
               AgentId::connection(j), {.value = vertices[i].rate});
    }
  }
  std::vector<std::vector<double>> loads(m);
  for (std::size_t j = 0; j < m; ++j) loads[j].assign(c.row_degree(static_cast<int>(j)), 0.0);
  for (const Message& msg : net.deliver()) {
    const auto k = position_of(c.row(msg.to.index), msg.from.index);
    loads[static_cast<std::size_t>(msg.to.index)][k] = msg.payload.value;
  }
  for (std::size_t j = 0; j < m; ++j) {
    double load = 0.0;
    for (double r : loads[j]) load += r;
    net.send(MessageKind::residual_report, AgentId::connection(static_cast<int>(j)),
             center_id,
             {.value = load - inst.capacity()[j], .index = static_cast<int>(j)});
  }
  MdCenter center;
  center.residual.assign(m, 0.0);
  center.jt_histogram.assign(m, 0);
  center.rng = Rng(seed);
  for (const Message& msg : net.deliver()) {
    center.residual[static_cast<std::size_t>(msg.payload.index)] = msg.payload.value;
  }

  const MdTraceRecorder recorder(inst, opts.md.trace_stride, n_steps);
  MdResult result;
  result.trace.parameters = {{"eps", eps},
                             {"gradient_bound", gradient_bound},
                             {"steps", n_steps},
                             {"seed", seed},
                             {"literal_sign", opts.md.literal_sign},
                             {"trace_stride", opts.md.trace_stride},
                             {"protocol", true}};
  std::uint64_t oracle_calls = 0;
  std::uint64_t violation_checks = c.nnz();
  Vector x_view(n);
  Vector sum_view(n);
  std::vector<std::uint64_t> synced_view(n);

  for (std::uint64_t t = 0; t < n_steps; ++t) {
    // Center: iteration type from the cache, and who gets to step.
    MdStepInfo info;
    const auto worst = most_violated(center.residual, eps, &info.max_residual);
    int i = 0;
    if (!worst) {
      info.branch = MdBranch::productive;
      ++center.productive_count;
      i = static_cast<int>(center.rng.uniform_index(n));
    } else {
      info.branch = MdBranch::nonproductive;
      info.connection = *worst;
      const auto related = c.row(*worst);
      if (related.empty()) {
        throw std::invalid_argument("connection " + std::to_string(*worst) +
                                    " is violated but relates to no vertex");
      }
      i = related[center.rng.uniform_index(related.size())];
      ++center.jt_histogram[static_cast<std::size_t>(*worst)];
    }
    const AgentId vertex_id = AgentId::vertex(i);

    net.send(MessageKind::iter_type_request, vertex_id, center_id);
    if (net.deliver().empty()) {
      throw ProtocolError("deadlock: center never heard from " + describe(vertex_id));
    }
    net.send(MessageKind::iter_type_reply, center_id, vertex_id,
             {.index = worst ? *worst : -1, .count = center.productive_count});
    if (worst) ++net.stats().jt_announcements;
    const auto reply = net.deliver();
    if (reply.empty()) {
      throw ProtocolError("deadlock: " + describe(vertex_id) +
                          " waited past the barrier for the iteration type");
    }

    // Vertex: local update, then per-row deltas to the center.
    auto& v = vertices[static_cast<std::size_t>(i)];
    const auto idx = static_cast<std::size_t>(i);
    sync_productive_sum(v.rate, reply.front().payload.count, v.sum, v.synced_at);
    double updated = 0.0;
    bool bound_hit = false;
    if (reply.front().payload.index < 0) {
      const double g = inst.utility().derivative(idx, v.rate);
      bound_hit = std::abs(g) > gradient_bound;
      updated = productive_update(v.rate, g, config.step_productive,
                                  opts.md.literal_sign);
    } else {
      updated = nonproductive_update(v.rate, config.step_nonproductive);
    }
    ++oracle_calls;
    const double delta = updated - v.rate;
    v.rate = updated;
    for (int j : c.col(i)) {
      net.send(MessageKind::residual_report, vertex_id, center_id,
               {.value = delta, .index = j});
    }
    net.send(MessageKind::update_notify, vertex_id, center_id,
             {.index = bound_hit ? 1 : 0});

    std::size_t updates = 0;
    bool notified = false;
    for (const Message& msg : net.deliver()) {
      if (msg.kind == MessageKind::residual_report) {
        center.residual[static_cast<std::size_t>(msg.payload.index)] += msg.payload.value;
        ++updates;
      } else if (msg.kind == MessageKind::update_notify) {
        notified = true;
        if (msg.payload.index == 1) center.gradient_bound_violated = true;
      }
    }
    if (!notified || updates != c.col_degree(i)) {
      throw ProtocolError("deadlock: center missing the update of " +
                          describe(vertex_id));
    }
    net.stats().residual_updates += updates;
    violation_checks += updates;

    info.vertex = i;
    info.new_value = updated;
    if (opts.md.record_steps) result.steps.push_back(info);

    for (std::size_t k = 0; k < n; ++k) {
      x_view[k] = vertices[k].rate;
      sum_view[k] = vertices[k].sum;
      synced_view[k] = vertices[k].synced_at;
    }
    const std::uint64_t done = t + 1;
    if (done % opts.check_every == 0 || done == n_steps) {
      const Vector truth = residual(inst, x_view);
      for (std::size_t j = 0; j < m; ++j) {
        // relative to the magnitudes involved: incremental sums drift with them
        const double scale =
            std::max({1.0, std::abs(truth[j]), inst.capacity()[j]});
        if (std::abs(truth[j] - center.residual[j]) > opts.check_tolerance * scale) {
          throw ProtocolError("center residual cache diverged at connection " +
                              std::to_string(j) + " after step " +
                              std::to_string(done));
        }
      }
    }
    recorder.after_step(done, info.branch, x_view, sum_view, synced_view,
                        center.productive_count, oracle_calls, result.trace);
  }

  // Assemble the distributed state for the shared result builder.
  MdState final_state = std::move(config);
  final_state.t = n_steps;
  final_state.x = x_view;
  final_state.residual = center.residual;
  final_state.productive_count = center.productive_count;
  final_state.productive_sum = sum_view;
  final_state.sum_synced_at = synced_view;
  final_state.jt_histogram = center.jt_histogram;
  final_state.rng = center.rng;
  final_state.gradient_bound_violated = center.gradient_bound_violated;
  final_state.oracle_calls = oracle_calls;
  final_state.violation_checks = violation_checks;
  finish_md_result(inst, final_state, result);

  SimStats stats = net.stats();
  stats.component_oracle_calls = oracle_calls;
  return {std::move(result), stats};
}

}  // namespace netum

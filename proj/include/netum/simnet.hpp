#ifndef NETUM_SIMNET_HPP
#define NETUM_SIMNET_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "netum/fgm.hpp"
#include "netum/mirror.hpp"
#include "netum/model.hpp"
#include "netum/oracle.hpp"

namespace netum {

enum class MessageKind : int {
  rate_report,
  price_notify,
  rate_request,
  price_request,
  iter_type_request,
  iter_type_reply,
  update_notify,
  residual_report,
};
inline constexpr std::size_t kMessageKinds = 8;

std::string_view to_string(MessageKind kind);

enum class Role { vertex, connection, center };

struct AgentId {
  Role role = Role::center;
  int index = 0;

  static AgentId vertex(int i) { return {Role::vertex, i}; }
  static AgentId connection(int j) { return {Role::connection, j}; }
  static AgentId center() { return {Role::center, 0}; }
  friend bool operator==(const AgentId&, const AgentId&) = default;
};

std::string describe(const AgentId& id);

/// Only single components or per-agent scalars travel: a value (rate, price
/// or delta), an index (connection number or j_t) and a count (|I|).
struct Payload {
  double value = 0.0;
  int index = -1;
  std::uint64_t count = 0;
};

struct Message {
  MessageKind kind = MessageKind::rate_report;
  AgentId from;
  AgentId to;
  Payload payload;
  std::uint64_t tick = 0;  // logical time of enqueue
};

struct SimStats {
  std::array<std::uint64_t, kMessageKinds> messages_by_kind{};
  std::uint64_t ticks = 0;
  std::uint64_t component_oracle_calls = 0;
  std::uint64_t residual_updates = 0;
  std::uint64_t jt_announcements = 0;

  std::uint64_t messages(MessageKind kind) const {
    return messages_by_kind[static_cast<std::size_t>(kind)];
  }
  std::uint64_t total_messages() const;
};

/// {messages: {kind: count}, ticks, oracle_calls}
nlohmann::json to_json(const SimStats& stats);

/// Protocol broke down: deadlock, locality breach or cache divergence.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Deterministic delivery: every message enqueued at tick T arrives at T+1,
/// in send order. Vertex-connection traffic must follow the incidence
/// structure; the center may talk to anyone.
class Network {
 public:
  using DropFilter = std::function<bool(const Message&)>;

  explicit Network(const IncidenceMatrix& c, DropFilter drop = {});

  void send(MessageKind kind, AgentId from, AgentId to, Payload payload = {});
  /// Advances the clock one tick and hands back everything in flight.
  std::vector<Message> deliver();

  std::uint64_t now() const { return now_; }
  SimStats& stats() { return stats_; }
  const SimStats& stats() const { return stats_; }

 private:
  void check_locality(const Message& msg) const;

  const IncidenceMatrix* c_;
  DropFilter drop_;
  std::vector<Message> in_flight_;
  std::uint64_t now_ = 0;
  SimStats stats_;
};

struct FgmProtocolOptions {
  FgmOptions fgm;
  /// Fault injection for tests: matching messages are silently lost.
  Network::DropFilter drop;
};

/// Runs the fast gradient method as a push protocol between vertex and
/// connection agents: per iteration every vertex reports x_i(lambda_t) to its
/// connections, every connection updates its price components and notifies
/// its vertices. Exactly 2 nnz(C) data messages per iteration.
std::pair<FgmResult, SimStats> run_fgm_protocol(
    const ProblemInstance& inst, const SmoothingConfig& cfg,
    std::uint64_t iterations, FgmProtocolOptions opts = {});

struct MdProtocolOptions {
  MdOptions md;
  /// Compare the center's residual cache with Cx - b every this many steps,
  /// to within check_tolerance * max(1, |C_j x - b_j|, b_j).
  std::uint64_t check_every = 100;
  double check_tolerance = 1e-9;
  Network::DropFilter drop;
};

/// Runs switching mirror descent through a decision center that keeps the
/// residual cache, picks the step type and samples the stepping vertex with
/// the solver's generator. Bit-identical to md_solve under the same seed.
std::pair<MdResult, SimStats> run_md_protocol(const ProblemInstance& inst,
                                              double eps, double gradient_bound,
                                              Vector x0, std::uint64_t n_steps,
                                              std::uint64_t seed,
                                              MdProtocolOptions opts = {});

}  // namespace netum

#endif  // NETUM_SIMNET_HPP

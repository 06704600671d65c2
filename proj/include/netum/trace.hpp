#ifndef NETUM_TRACE_HPP
#define NETUM_TRACE_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace netum {

enum class StepType { fgm, productive, nonproductive };

std::string_view to_string(StepType type);
StepType step_type_from_string(std::string_view text);

struct TraceRow {
  std::uint64_t iter = 0;
  std::uint64_t oracle_calls = 0;
  double utility = 0.0;
  double violation = 0.0;
  double gap = 0.0;  // NaN when not evaluated
  StepType step_type = StepType::fgm;
};

/// Per-iteration solver record. `fingerprint` identifies the instance and
/// `parameters` snapshots the solver settings; neither goes into the CSV.
struct SolverTrace {
  std::vector<TraceRow> rows;
  std::string fingerprint;
  nlohmann::json parameters = nlohmann::json::object();
};

inline constexpr std::string_view kTraceHeader =
    "iter,oracle_calls,utility,violation,gap,step_type";

/// Writes the header and one line per row; doubles use 17 significant
/// digits so the file parses back bit-exactly.
void write_trace_csv(std::ostream& out, const SolverTrace& trace);
void write_trace_csv(const std::string& path, const SolverTrace& trace);
/// Throws std::invalid_argument on a malformed header or row.
SolverTrace read_trace_csv(std::istream& in);
SolverTrace read_trace_csv(const std::string& path);

/// Bitwise row equality (NaN gaps compare equal to each other).
bool same_rows(const SolverTrace& a, const SolverTrace& b);

}  // namespace netum

#endif  // NETUM_TRACE_HPP

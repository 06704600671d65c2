#include "netum/trace.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace netum {

namespace {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

double parse_double(const std::string& field, std::size_t line) {
  if (field == "nan") return std::nan("");
  char* end = nullptr;
  const double value = std::strtod(field.c_str(), &end);
  if (field.empty() || end != field.c_str() + field.size()) {
    throw std::invalid_argument("trace line " + std::to_string(line) +
                                ": bad number '" + field + "'");
  }
  return value;
}

std::uint64_t parse_count(const std::string& field, std::size_t line) {
  std::uint64_t value = 0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw std::invalid_argument("trace line " + std::to_string(line) +
                                ": bad count '" + field + "'");
  }
  return value;
}

bool same_double(double a, double b) {
  if (std::isnan(a) && std::isnan(b)) return true;
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

}  // namespace

std::string_view to_string(StepType type) {
  switch (type) {
    case StepType::fgm: return "fgm";
    case StepType::productive: return "productive";
    case StepType::nonproductive: return "nonproductive";
  }
  return "unknown";
}

StepType step_type_from_string(std::string_view text) {
  if (text == "fgm") return StepType::fgm;
  if (text == "productive") return StepType::productive;
  if (text == "nonproductive") return StepType::nonproductive;
  throw std::invalid_argument("unknown step type '" + std::string(text) + "'");
}

void write_trace_csv(std::ostream& out, const SolverTrace& trace) {
  out << kTraceHeader << '\n';
  for (const auto& row : trace.rows) {
    out << row.iter << ',' << row.oracle_calls << ','
        << format_double(row.utility) << ',' << format_double(row.violation)
        << ',' << format_double(row.gap) << ',' << to_string(row.step_type)
        << '\n';
  }
}

void write_trace_csv(const std::string& path, const SolverTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_trace_csv(out, trace);
}

SolverTrace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) {
    throw std::invalid_argument("trace CSV has unexpected header");
  }
  SolverTrace trace;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 6) {
      throw std::invalid_argument("trace line " + std::to_string(line_no) +
                                  ": expected 6 fields");
    }
    TraceRow row;
    row.iter = parse_count(fields[0], line_no);
    row.oracle_calls = parse_count(fields[1], line_no);
    row.utility = parse_double(fields[2], line_no);
    row.violation = parse_double(fields[3], line_no);
    row.gap = parse_double(fields[4], line_no);
    row.step_type = step_type_from_string(fields[5]);
    trace.rows.push_back(row);
  }
  return trace;
}

SolverTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open trace " + path);
  return read_trace_csv(in);
}

bool same_rows(const SolverTrace& a, const SolverTrace& b) {
  if (a.rows.size() != b.rows.size()) return false;
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    const auto& x = a.rows[k];
    const auto& y = b.rows[k];
    if (x.iter != y.iter || x.oracle_calls != y.oracle_calls ||
        x.step_type != y.step_type || !same_double(x.utility, y.utility) ||
        !same_double(x.violation, y.violation) || !same_double(x.gap, y.gap)) {
      return false;
    }
  }
  return true;
}

}  // namespace netum

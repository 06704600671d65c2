#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "netum/trace.hpp"
#include "support.hpp"

using namespace netum;

TEST_CASE("step type names round trip") {
  for (auto t : {StepType::fgm, StepType::productive, StepType::nonproductive}) {
    CHECK(step_type_from_string(to_string(t)) == t);
  }
  CHECK_THROWS_AS(step_type_from_string("other"), std::invalid_argument);
}

TEST_CASE("CSV round trip is lossless") {
  testing_support::Gen gen(13);
  for (int trial = 0; trial < 20; ++trial) {
    SolverTrace trace;
    std::uint64_t calls = 0;
    const int rows = gen.integer(0, 40);
    for (int r = 0; r < rows; ++r) {
      calls += static_cast<std::uint64_t>(gen.integer(1, 100));
      TraceRow row;
      row.iter = static_cast<std::uint64_t>(r + 1);
      row.oracle_calls = calls;
      row.utility = gen.uniform(-1e6, 1e6) * std::pow(10.0, gen.integer(-20, 20));
      row.violation = gen.coin(0.2) ? 0.0 : gen.uniform(0, 1) / 3.0;
      row.gap = gen.coin(0.3) ? std::numeric_limits<double>::quiet_NaN()
                              : gen.uniform(-1, 1) * 1e-300;
      row.step_type = static_cast<StepType>(gen.integer(0, 2));
      trace.rows.push_back(row);
    }
    std::stringstream buf;
    write_trace_csv(buf, trace);
    const auto text = buf.str();
    CHECK(text.find('\r') == std::string::npos);
    CHECK(text.rfind(std::string(kTraceHeader) + "\n", 0) == 0);
    const SolverTrace back = read_trace_csv(buf);
    CHECK(same_rows(trace, back));
  }
}

TEST_CASE("malformed CSV is rejected") {
  std::stringstream bad_header("iter,calls\n");
  CHECK_THROWS_AS(read_trace_csv(bad_header), std::invalid_argument);
  std::stringstream bad_row(std::string(kTraceHeader) + "\n1,2,abc,0,0,fgm\n");
  CHECK_THROWS_AS(read_trace_csv(bad_row), std::invalid_argument);
  std::stringstream short_row(std::string(kTraceHeader) + "\n1,2,3\n");
  CHECK_THROWS_AS(read_trace_csv(short_row), std::invalid_argument);
  std::stringstream bad_type(std::string(kTraceHeader) + "\n1,2,3,0,nan,sideways\n");
  CHECK_THROWS_AS(read_trace_csv(bad_type), std::invalid_argument);
}

TEST_CASE("same_rows is bitwise") {
  SolverTrace a;
  a.rows.push_back({1, 1, 0.1, 0.0, std::nan(""), StepType::fgm});
  SolverTrace b = a;
  CHECK(same_rows(a, b));
  b.rows[0].utility = std::nextafter(0.1, 1.0);
  CHECK_FALSE(same_rows(a, b));
  b = a;
  b.rows[0].violation = -0.0;
  CHECK_FALSE(same_rows(a, b));
}

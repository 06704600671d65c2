// Shared generators and dense reference computations for the test suites.
#ifndef NETUM_TESTS_SUPPORT_HPP
#define NETUM_TESTS_SUPPORT_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "netum/model.hpp"

namespace testing_support {

using netum::Vector;

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    // hand-rolled so values do not depend on the standard library
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }
  int integer(int lo, int hi) {  // inclusive
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<int>(engine_() % span);
  }
  bool coin(double p) { return uniform(0.0, 1.0) < p; }

  Vector vector(std::size_t len, double lo, double hi) {
    Vector v(len);
    for (auto& x : v) x = uniform(lo, hi);
    return v;
  }

  /// Random incidence pattern; every row and column gets at least one entry
  /// when `fill` is set.
  netum::IncidenceMatrix matrix(int m, int n, double density, bool fill = true) {
    std::vector<std::vector<char>> cell(m, std::vector<char>(n, 0));
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < n; ++i) cell[j][i] = coin(density) ? 1 : 0;
    }
    if (fill) {
      for (int j = 0; j < m; ++j) {
        bool any = false;
        for (int i = 0; i < n; ++i) any = any || cell[j][i];
        if (!any) cell[j][integer(0, n - 1)] = 1;
      }
      for (int i = 0; i < n; ++i) {
        bool any = false;
        for (int j = 0; j < m; ++j) any = any || cell[j][i];
        if (!any) cell[integer(0, m - 1)][i] = 1;
      }
    }
    std::vector<std::pair<int, int>> entries;
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < n; ++i) {
        if (cell[j][i]) entries.emplace_back(j, i);
      }
    }
    return netum::IncidenceMatrix(m, n, std::move(entries));
  }

  netum::ProblemInstance instance(int m, int n, double density, double a_lo,
                                  double a_hi, double b_lo, double b_hi,
                                  double sigma) {
    auto c = matrix(m, n, density);
    Vector b = vector(static_cast<std::size_t>(m), b_lo, b_hi);
    Vector a = vector(static_cast<std::size_t>(n), a_lo, a_hi);
    return netum::ProblemInstance::quadratic(std::move(c), std::move(b),
                                             std::move(a), sigma);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

inline std::vector<std::vector<double>> dense(const netum::IncidenceMatrix& c) {
  std::vector<std::vector<double>> d(static_cast<std::size_t>(c.rows()),
                                     std::vector<double>(static_cast<std::size_t>(c.cols()), 0.0));
  for (const auto& [j, i] : c.entries()) d[j][i] = 1.0;
  return d;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

}  // namespace testing_support

#endif  // NETUM_TESTS_SUPPORT_HPP

#ifndef NETUM_MODEL_HPP
#define NETUM_MODEL_HPP

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace netum {

using Vector = std::vector<double>;

/// Norm exponent used for the primal (p) and dual (q) spaces.
enum class Norm : int { l1 = 1, l2 = 2 };

Norm norm_from_int(int value);
inline int to_int(Norm norm) { return static_cast<int>(norm); }

/// Sparse binary connection-by-vertex matrix.
///
/// Entry (j, i) means connection j is in relation to vertex i. Both the
/// row view (connection -> vertices) and the column view (vertex ->
/// connections) are kept, each sorted ascending.
class IncidenceMatrix {
 public:
  using Entry = std::pair<int, int>;  // (row j, column i)

  IncidenceMatrix() = default;
  /// Throws std::invalid_argument on out-of-range or duplicate entries.
  IncidenceMatrix(int rows, int cols, std::vector<Entry> entries);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t nnz() const { return row_idx_.size(); }

  std::span<const int> row(int j) const;
  std::span<const int> col(int i) const;
  std::size_t row_degree(int j) const { return row(j).size(); }
  std::size_t col_degree(int i) const { return col(i).size(); }
  bool contains(int j, int i) const;

  /// Entries in row-major order.
  std::vector<Entry> entries() const;

  friend bool operator==(const IncidenceMatrix&, const IncidenceMatrix&);

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<int> col_idx_;  // column indices, grouped by row
  std::vector<std::size_t> col_ptr_{0};
  std::vector<int> row_idx_;  // row indices, grouped by column
};

/// Per-vertex concave utility u_i. Implementations must be immutable.
class Utility {
 public:
  virtual ~Utility() = default;
  virtual std::size_t size() const = 0;
  virtual double value(std::size_t i, double x) const = 0;
  virtual double derivative(std::size_t i, double x) const = 0;

  /// Closed-form argmax over x >= 0 of u_i(x) - cost*x - (mu/2)(x - center)^2,
  /// if the utility provides one. std::nullopt means the caller must solve
  /// the one-dimensional problem numerically.
  virtual std::optional<double> best_response(std::size_t i, double cost,
                                              double mu, double center) const {
    (void)i, (void)cost, (void)mu, (void)center;
    return std::nullopt;
  }

  /// Modulus of strong concavity shared by every u_i (0 if none).
  virtual double strong_concavity() const { return 0.0; }
};

/// u_i(x) = a_i x - (sigma n / 2) x^2.
class QuadraticUtility final : public Utility {
 public:
  QuadraticUtility(Vector a, double sigma);

  std::size_t size() const override { return a_.size(); }
  double value(std::size_t i, double x) const override;
  double derivative(std::size_t i, double x) const override;
  std::optional<double> best_response(std::size_t i, double cost, double mu,
                                      double center) const override;
  double strong_concavity() const override { return curvature(); }

  const Vector& a() const { return a_; }
  double sigma() const { return sigma_; }
  /// sigma * n, the second-derivative magnitude of every u_i.
  double curvature() const { return sigma_ * static_cast<double>(a_.size()); }

 private:
  Vector a_;
  double sigma_;
};

/// Utility given by value/derivative callbacks; best responses go through
/// bisection.
class CallbackUtility final : public Utility {
 public:
  using Fn = std::function<double(std::size_t, double)>;

  CallbackUtility(std::size_t n, Fn value, Fn derivative,
                  double strong_concavity = 0.0)
      : n_(n), value_(std::move(value)), derivative_(std::move(derivative)),
        strong_concavity_(strong_concavity) {}

  std::size_t size() const override { return n_; }
  double value(std::size_t i, double x) const override { return value_(i, x); }
  double derivative(std::size_t i, double x) const override {
    return derivative_(i, x);
  }
  double strong_concavity() const override { return strong_concavity_; }

 private:
  std::size_t n_;
  Fn value_;
  Fn derivative_;
  double strong_concavity_;
};

/// max U(x) subject to Cx <= b, x >= 0.
class ProblemInstance {
 public:
  ProblemInstance(IncidenceMatrix c, Vector b,
                  std::shared_ptr<const Utility> utility, Norm p = Norm::l2,
                  Norm q = Norm::l2);

  /// Convenience for the quadratic family.
  static ProblemInstance quadratic(IncidenceMatrix c, Vector b, Vector a,
                                   double sigma, Norm p = Norm::l2,
                                   Norm q = Norm::l2);

  const IncidenceMatrix& matrix() const { return c_; }
  const Vector& capacity() const { return b_; }
  const Utility& utility() const { return *utility_; }
  std::shared_ptr<const Utility> utility_ptr() const { return utility_; }
  /// Non-null iff the utility is quadratic.
  const QuadraticUtility* quadratic_utility() const;

  int m() const { return c_.rows(); }
  int n() const { return c_.cols(); }
  Norm norm_p() const { return p_; }
  Norm norm_q() const { return q_; }

 private:
  IncidenceMatrix c_;
  Vector b_;
  std::shared_ptr<const Utility> utility_;
  Norm p_;
  Norm q_;
};

/// Power iteration did not reach the requested tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double last_estimate)
      : std::runtime_error(what), last_estimate_(last_estimate) {}
  double last_estimate() const { return last_estimate_; }

 private:
  double last_estimate_;
};

Vector mat_vec(const IncidenceMatrix& c, std::span<const double> x);
Vector mat_t_vec(const IncidenceMatrix& c, std::span<const double> lambda);

/// Largest eigenvalue of C^T C by power iteration from the normalized
/// all-ones vector. Stops when the Rayleigh quotient changes by at most
/// `tol` (relative) between sweeps.
double spectral_norm_sq(const IncidenceMatrix& c, double tol = 1e-8,
                        int max_iter = 10'000);

/// max_j ||C_j||_{p*}.
double max_row_dual_norm(const IncidenceMatrix& c, Norm p);

double utility_total(const ProblemInstance& inst, std::span<const double> x);
Vector utility_gradient(const ProblemInstance& inst,
                        std::span<const double> x);

/// Cx - b.
Vector residual(const ProblemInstance& inst, std::span<const double> x);
/// ||(Cx - b)_+||_q with q taken from the instance unless given.
double violation_norm(const ProblemInstance& inst, std::span<const double> x);
double violation_norm(const ProblemInstance& inst, std::span<const double> x,
                      Norm q);
/// max_j (C_j x - b_j)_+, 0 when there are no constraints.
double max_violation(const ProblemInstance& inst, std::span<const double> x);

double norm(std::span<const double> v, Norm kind);
double dot(std::span<const double> a, std::span<const double> b);

// Serialization: {m, n, entries: [[j,i],...], b, a, sigma, p, q}.
// Only quadratic-utility instances are serializable.
nlohmann::json to_json(const ProblemInstance& inst);
ProblemInstance instance_from_json(const nlohmann::json& doc);
void save_instance(const ProblemInstance& inst, const std::string& path);
ProblemInstance load_instance(const std::string& path);

}  // namespace netum

#endif  // NETUM_MODEL_HPP

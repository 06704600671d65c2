#include "netum/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace netum {

namespace {

void require_size(std::size_t actual, std::size_t expected, const char* what) {
  if (actual != expected) {
    std::ostringstream msg;
    msg << what << ": expected length " << expected << ", got " << actual;
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

Norm norm_from_int(int value) {
  if (value == 1) return Norm::l1;
  if (value == 2) return Norm::l2;
  throw std::invalid_argument("norm exponent must be 1 or 2, got " +
                              std::to_string(value));
}

IncidenceMatrix::IncidenceMatrix(int rows, int cols, std::vector<Entry> entries)
    : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) {
    throw std::invalid_argument("incidence matrix dimensions must be >= 0");
  }
  for (const auto& [j, i] : entries) {
    if (j < 0 || j >= rows || i < 0 || i >= cols) {
      std::ostringstream msg;
      msg << "entry (" << j << ", " << i << ") outside " << rows << "x" << cols;
      throw std::invalid_argument(msg.str());
    }
  }
  std::sort(entries.begin(), entries.end());
  auto dup = std::adjacent_find(entries.begin(), entries.end());
  if (dup != entries.end()) {
    std::ostringstream msg;
    msg << "duplicate entry (" << dup->first << ", " << dup->second << ")";
    throw std::invalid_argument(msg.str());
  }

  row_ptr_.assign(static_cast<std::size_t>(rows) + 1, 0);
  col_ptr_.assign(static_cast<std::size_t>(cols) + 1, 0);
  for (const auto& [j, i] : entries) {
    ++row_ptr_[static_cast<std::size_t>(j) + 1];
    ++col_ptr_[static_cast<std::size_t>(i) + 1];
  }
  std::partial_sum(row_ptr_.begin(), row_ptr_.end(), row_ptr_.begin());
  std::partial_sum(col_ptr_.begin(), col_ptr_.end(), col_ptr_.begin());

  col_idx_.resize(entries.size());
  row_idx_.resize(entries.size());
  std::vector<std::size_t> fill(col_ptr_.begin(), col_ptr_.end() - 1);
  // entries are sorted by (j, i), so both views come out ascending.
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto [j, i] = entries[k];
    col_idx_[k] = i;
    row_idx_[fill[static_cast<std::size_t>(i)]++] = j;
  }
}

std::span<const int> IncidenceMatrix::row(int j) const {
  const auto begin = row_ptr_[static_cast<std::size_t>(j)];
  const auto end = row_ptr_[static_cast<std::size_t>(j) + 1];
  return {col_idx_.data() + begin, end - begin};
}

std::span<const int> IncidenceMatrix::col(int i) const {
  const auto begin = col_ptr_[static_cast<std::size_t>(i)];
  const auto end = col_ptr_[static_cast<std::size_t>(i) + 1];
  return {row_idx_.data() + begin, end - begin};
}

bool IncidenceMatrix::contains(int j, int i) const {
  if (j < 0 || j >= rows_ || i < 0 || i >= cols_) return false;
  const auto r = row(j);
  return std::binary_search(r.begin(), r.end(), i);
}

std::vector<IncidenceMatrix::Entry> IncidenceMatrix::entries() const {
  std::vector<Entry> out;
  out.reserve(nnz());
  for (int j = 0; j < rows_; ++j) {
    for (int i : row(j)) out.emplace_back(j, i);
  }
  return out;
}

bool operator==(const IncidenceMatrix& lhs, const IncidenceMatrix& rhs) {
  return lhs.rows_ == rhs.rows_ && lhs.cols_ == rhs.cols_ &&
         lhs.row_ptr_ == rhs.row_ptr_ && lhs.col_idx_ == rhs.col_idx_;
}

QuadraticUtility::QuadraticUtility(Vector a, double sigma)
    : a_(std::move(a)), sigma_(sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("sigma must be finite and >= 0");
  }
}

double QuadraticUtility::value(std::size_t i, double x) const {
  return a_[i] * x - 0.5 * curvature() * x * x;
}

double QuadraticUtility::derivative(std::size_t i, double x) const {
  return a_[i] - curvature() * x;
}

std::optional<double> QuadraticUtility::best_response(std::size_t i,
                                                      double cost, double mu,
                                                      double center) const {
  const double numer = a_[i] - cost + mu * center;
  const double denom = curvature() + mu;
  if (denom <= 0.0) {
    if (numer > 0.0) {
      throw std::domain_error("best response unbounded for vertex " +
                              std::to_string(i) +
                              " (linear utility without smoothing)");
    }
    return 0.0;
  }
  return std::max(0.0, numer / denom);
}

ProblemInstance::ProblemInstance(IncidenceMatrix c, Vector b,
                                 std::shared_ptr<const Utility> utility,
                                 Norm p, Norm q)
    : c_(std::move(c)), b_(std::move(b)), utility_(std::move(utility)),
      p_(p), q_(q) {
  if (!utility_) throw std::invalid_argument("utility must not be null");
  require_size(b_.size(), static_cast<std::size_t>(c_.rows()), "capacity b");
  require_size(utility_->size(), static_cast<std::size_t>(c_.cols()),
               "utility coefficients");
  for (std::size_t j = 0; j < b_.size(); ++j) {
    if (!(b_[j] >= 0.0) || !std::isfinite(b_[j])) {
      throw std::invalid_argument("capacity b[" + std::to_string(j) +
                                  "] must be finite and >= 0");
    }
  }
}

ProblemInstance ProblemInstance::quadratic(IncidenceMatrix c, Vector b,
                                           Vector a, double sigma, Norm p,
                                           Norm q) {
  auto utility = std::make_shared<QuadraticUtility>(std::move(a), sigma);
  return ProblemInstance(std::move(c), std::move(b), std::move(utility), p, q);
}

const QuadraticUtility* ProblemInstance::quadratic_utility() const {
  return dynamic_cast<const QuadraticUtility*>(utility_.get());
}

Vector mat_vec(const IncidenceMatrix& c, std::span<const double> x) {
  require_size(x.size(), static_cast<std::size_t>(c.cols()), "mat_vec x");
  Vector out(static_cast<std::size_t>(c.rows()), 0.0);
  for (int j = 0; j < c.rows(); ++j) {
    double sum = 0.0;
    for (int i : c.row(j)) sum += x[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(j)] = sum;
  }
  return out;
}

Vector mat_t_vec(const IncidenceMatrix& c, std::span<const double> lambda) {
  require_size(lambda.size(), static_cast<std::size_t>(c.rows()),
               "mat_t_vec lambda");
  Vector out(static_cast<std::size_t>(c.cols()), 0.0);
  for (int i = 0; i < c.cols(); ++i) {
    double sum = 0.0;
    for (int j : c.col(i)) sum += lambda[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = sum;
  }
  return out;
}

double spectral_norm_sq(const IncidenceMatrix& c, double tol, int max_iter) {
  if (c.nnz() == 0) {
    throw std::invalid_argument("spectral_norm_sq: matrix has no entries");
  }
  if (!(tol > 0.0)) throw std::invalid_argument("spectral_norm_sq: tol <= 0");

  const auto n = static_cast<std::size_t>(c.cols());
  Vector v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double estimate = 0.0;
  for (int iter = 0; iter < max_iter; ++iter) {
    const Vector cv = mat_vec(c, v);
    const double rayleigh = dot(cv, cv);  // v^T C^T C v with ||v|| = 1
    Vector w = mat_t_vec(c, cv);
    const double w_norm = norm(w, Norm::l2);
    if (w_norm == 0.0) return 0.0;
    for (auto& wi : w) wi /= w_norm;
    v = std::move(w);
    if (iter > 0 && std::abs(rayleigh - estimate) <= tol * rayleigh) {
      return rayleigh;
    }
    estimate = rayleigh;
  }
  throw ConvergenceError("power iteration did not converge in " +
                             std::to_string(max_iter) + " sweeps",
                         estimate);
}

double max_row_dual_norm(const IncidenceMatrix& c, Norm p) {
  if (c.nnz() == 0) return 0.0;
  if (p == Norm::l1) return 1.0;  // dual norm is max |C_ji| = 1
  std::size_t widest = 0;
  for (int j = 0; j < c.rows(); ++j) widest = std::max(widest, c.row_degree(j));
  return std::sqrt(static_cast<double>(widest));
}

double utility_total(const ProblemInstance& inst, std::span<const double> x) {
  require_size(x.size(), static_cast<std::size_t>(inst.n()), "utility x");
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < 0.0) {
      throw std::invalid_argument("negative rate at vertex " +
                                  std::to_string(i));
    }
    total += inst.utility().value(i, x[i]);
  }
  return total;
}

Vector utility_gradient(const ProblemInstance& inst,
                        std::span<const double> x) {
  require_size(x.size(), static_cast<std::size_t>(inst.n()), "gradient x");
  Vector grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    grad[i] = inst.utility().derivative(i, x[i]);
  }
  return grad;
}

Vector residual(const ProblemInstance& inst, std::span<const double> x) {
  Vector r = mat_vec(inst.matrix(), x);
  for (std::size_t j = 0; j < r.size(); ++j) r[j] -= inst.capacity()[j];
  return r;
}

double violation_norm(const ProblemInstance& inst, std::span<const double> x) {
  return violation_norm(inst, x, inst.norm_q());
}

double violation_norm(const ProblemInstance& inst, std::span<const double> x,
                      Norm q) {
  Vector r = residual(inst, x);
  for (auto& rj : r) rj = std::max(rj, 0.0);
  return norm(r, q);
}

double max_violation(const ProblemInstance& inst, std::span<const double> x) {
  double worst = 0.0;
  for (double rj : residual(inst, x)) worst = std::max(worst, rj);
  return worst;
}

double norm(std::span<const double> v, Norm kind) {
  if (kind == Norm::l1) {
    double sum = 0.0;
    for (double vi : v) sum += std::abs(vi);
    return sum;
  }
  return std::sqrt(dot(v, v));
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_size(b.size(), a.size(), "dot");
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) sum += a[k] * b[k];
  return sum;
}

nlohmann::json to_json(const ProblemInstance& inst) {
  const auto* quad = inst.quadratic_utility();
  if (quad == nullptr) {
    throw std::invalid_argument("only quadratic-utility instances serialize");
  }
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [j, i] : inst.matrix().entries()) {
    entries.push_back({j, i});
  }
  return {{"m", inst.m()},
          {"n", inst.n()},
          {"entries", std::move(entries)},
          {"b", inst.capacity()},
          {"a", quad->a()},
          {"sigma", quad->sigma()},
          {"p", to_int(inst.norm_p())},
          {"q", to_int(inst.norm_q())}};
}

ProblemInstance instance_from_json(const nlohmann::json& doc) {
  try {
    const int m = doc.at("m").get<int>();
    const int n = doc.at("n").get<int>();
    std::vector<IncidenceMatrix::Entry> entries;
    for (const auto& e : doc.at("entries")) {
      if (!e.is_array() || e.size() != 2) {
        throw std::invalid_argument("entry must be a [j, i] pair");
      }
      entries.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    return ProblemInstance::quadratic(
        IncidenceMatrix(m, n, std::move(entries)), doc.at("b").get<Vector>(),
        doc.at("a").get<Vector>(), doc.at("sigma").get<double>(),
        norm_from_int(doc.value("p", 2)), norm_from_int(doc.value("q", 2)));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed instance: ") + e.what());
  }
}

void save_instance(const ProblemInstance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << to_json(inst).dump(2) << '\n';
}

ProblemInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open instance file " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return instance_from_json(doc);
}

}  // namespace netum

#include "netum/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include "netum/fgm.hpp"
#include "netum/mirror.hpp"
#include "netum/oracle.hpp"
#include "netum/rng.hpp"
#include "netum/simnet.hpp"

namespace netum {

nlohmann::json to_json(const GeneratorConfig& cfg) {
  nlohmann::json doc = {{"m", cfg.m},
                        {"n", cfg.n},
                        {"density", cfg.density},
                        {"seed", cfg.seed},
                        {"a_low", cfg.a_low},
                        {"a_high", cfg.a_high},
                        {"b_scale", cfg.b_scale.value_or(cfg.n)},
                        {"sigma", cfg.sigma},
                        {"ensure_nonempty", cfg.ensure_nonempty}};
  return doc;
}

ProblemInstance generate_instance(const GeneratorConfig& cfg) {
  if (cfg.m < 1 || cfg.n < 1) throw std::invalid_argument("m and n must be >= 1");
  if (!(cfg.density > 0.0 && cfg.density <= 1.0)) {
    throw std::invalid_argument("density must lie in (0, 1]");
  }
  if (!(cfg.a_low <= cfg.a_high)) throw std::invalid_argument("a_low > a_high");
  const double b_scale = cfg.b_scale.value_or(static_cast<double>(cfg.n));
  if (!(b_scale >= 0.0)) throw std::invalid_argument("b_scale must be >= 0");

  Rng rng(cfg.seed);
  const auto m = static_cast<std::size_t>(cfg.m);
  const auto n = static_cast<std::size_t>(cfg.n);
  std::vector<char> cell(m * n, 0);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      // density 1 must saturate regardless of the draw
      cell[j * n + i] = cfg.density >= 1.0 || rng.bernoulli(cfg.density) ? 1 : 0;
    }
  }
  if (cfg.ensure_nonempty) {
    for (std::size_t j = 0; j < m; ++j) {
      bool any = false;
      for (std::size_t i = 0; i < n && !any; ++i) any = cell[j * n + i] != 0;
      if (!any) cell[j * n + rng.uniform_index(n)] = 1;
    }
    for (std::size_t i = 0; i < n; ++i) {
      bool any = false;
      for (std::size_t j = 0; j < m && !any; ++j) any = cell[j * n + i] != 0;
      if (!any) cell[rng.uniform_index(m) * n + i] = 1;
    }
  }
  std::vector<std::pair<int, int>> entries;
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      if (cell[j * n + i]) entries.emplace_back(static_cast<int>(j), static_cast<int>(i));
    }
  }
  Vector b(m);
  for (auto& bj : b) bj = rng.uniform(0.0, b_scale);
  Vector a(n);
  for (auto& ai : a) ai = rng.uniform(cfg.a_low, cfg.a_high);
  return ProblemInstance::quadratic(IncidenceMatrix(cfg.m, cfg.n, std::move(entries)),
                                    std::move(b), std::move(a), cfg.sigma);
}

std::string instance_fingerprint(const ProblemInstance& inst) {
  const std::string text = to_json(inst).dump();
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

Vector brute_force_solve(const ProblemInstance& inst, double grid_step,
                         const Vector& box) {
  const int n = inst.n();
  if (n > 4) throw std::invalid_argument("brute_force_solve supports n <= 4");
  if (!(grid_step > 0.0)) throw std::invalid_argument("grid_step must be > 0");
  const auto nu = static_cast<std::size_t>(n);
  if (box.size() != nu) throw std::invalid_argument("box has wrong length");
  for (double v : box) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("box must be finite and >= 0");
  }
  const IncidenceMatrix& c = inst.matrix();
  const Vector& b = inst.capacity();
  const Utility& u = inst.utility();
  constexpr double kTol = 1e-9;

  const std::size_t last = nu - 1;
  std::vector<std::int64_t> limit(nu);
  for (std::size_t i = 0; i < nu; ++i) {
    limit[i] = static_cast<std::int64_t>(std::floor(box[i] / grid_step + kTol));
  }
  std::vector<char> has_last(static_cast<std::size_t>(inst.m()), 0);
  for (int j : c.col(static_cast<int>(last))) has_last[static_cast<std::size_t>(j)] = 1;

  // Unconstrained peak of u_last, to seed the 1-D grid search.
  std::optional<double> peak;
  try {
    peak = u.best_response(last, 0.0, 0.0, 0.0);
  } catch (const std::domain_error&) {
    peak.reset();  // no interior peak, fall back to ternary search
  }
  auto last_value = [&](std::int64_t k) {
    return u.value(last, static_cast<double>(k) * grid_step);
  };
  auto best_last = [&](std::int64_t k_max) {
    if (peak) {
      const auto base = static_cast<std::int64_t>(std::floor(*peak / grid_step));
      std::int64_t best = std::clamp<std::int64_t>(base, 0, k_max);
      const std::int64_t next = std::clamp<std::int64_t>(base + 1, 0, k_max);
      if (last_value(next) > last_value(best)) best = next;
      return best;
    }
    std::int64_t lo = 0;
    std::int64_t hi = k_max;
    while (hi - lo > 2) {
      const std::int64_t m1 = lo + (hi - lo) / 3;
      const std::int64_t m2 = hi - (hi - lo) / 3;
      if (last_value(m1) < last_value(m2)) lo = m1 + 1; else hi = m2;
    }
    std::int64_t best = lo;
    for (std::int64_t k = lo + 1; k <= hi; ++k) {
      if (last_value(k) > last_value(best)) best = k;
    }
    return best;
  };

  std::vector<std::int64_t> k(nu, 0);
  Vector x(nu, 0.0);
  Vector best_x;
  double best_u = -std::numeric_limits<double>::infinity();
  while (true) {
    for (std::size_t i = 0; i < last; ++i) x[i] = static_cast<double>(k[i]) * grid_step;
    x[last] = 0.0;
    bool feasible = true;
    double slack = box[last];
    for (int j = 0; j < inst.m() && feasible; ++j) {
      double load = 0.0;
      for (int i : c.row(j)) load += x[static_cast<std::size_t>(i)];
      const double room = b[static_cast<std::size_t>(j)] - load;
      if (room < -kTol) feasible = false;
      if (has_last[static_cast<std::size_t>(j)]) slack = std::min(slack, room);
    }
    if (slack < -kTol) feasible = false;
    if (feasible) {
      const auto k_max = static_cast<std::int64_t>(
          std::floor(std::max(slack, 0.0) / grid_step + kTol));
      const std::int64_t kl = best_last(std::min(k_max, limit[last]));
      x[last] = static_cast<double>(kl) * grid_step;
      double total = 0.0;
      for (std::size_t i = 0; i < nu; ++i) total += u.value(i, x[i]);
      if (total > best_u) {
        best_u = total;
        best_x = x;
      }
    }
    // Odometer over the first n-1 coordinates. Loads only grow with k, so
    // an infeasible point ends the innermost sweep.
    std::size_t d = 0;
    if (!feasible && last > 0) k[0] = limit[0];
    while (d < last) {
      if (k[d] < limit[d]) {
        ++k[d];
        break;
      }
      k[d] = 0;
      ++d;
    }
    if (d >= last) break;
  }
  if (best_x.empty()) throw std::runtime_error("brute_force_solve: no feasible grid point");
  return best_x;
}

std::string_view to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::fgm: return "fgm";
    case SolverKind::md: return "md";
    case SolverKind::fgm_protocol: return "fgm-protocol";
    case SolverKind::md_protocol: return "md-protocol";
  }
  return "unknown";
}

SolverKind solver_from_string(std::string_view text) {
  if (text == "fgm") return SolverKind::fgm;
  if (text == "md") return SolverKind::md;
  if (text == "fgm-protocol" || text == "fgm_protocol") return SolverKind::fgm_protocol;
  if (text == "md-protocol" || text == "md_protocol") return SolverKind::md_protocol;
  throw std::invalid_argument("unknown solver '" + std::string(text) + "'");
}

nlohmann::json to_json(const ExperimentParams& p) {
  nlohmann::json doc = {{"seed", p.seed},
                        {"fgm_eps", p.fgm_eps},
                        {"fgm_iterations", p.fgm_iterations},
                        {"fgm_certificate", p.fgm_certificate},
                        {"fgm_trace_stride", p.fgm_trace_stride},
                        {"md_eps", p.md_eps},
                        {"md_steps", p.md_steps},
                        {"md_trace_stride", p.md_trace_stride},
                        {"literal_sign", p.literal_sign},
                        {"write_aligned", p.write_aligned}};
  if (p.fgm_eps_relative) doc["fgm_eps_relative"] = *p.fgm_eps_relative;
  if (p.fgm_mu) doc["fgm_mu"] = *p.fgm_mu;
  if (p.md_gradient_bound) doc["md_gradient_bound"] = *p.md_gradient_bound;
  if (p.md_x0) doc["md_x0"] = *p.md_x0;
  return doc;
}

const SolverOutcome* ExperimentResult::find(SolverKind kind) const {
  for (const auto& o : outcomes) {
    if (o.kind == kind) return &o;
  }
  return nullptr;
}

Vector default_md_start(const ProblemInstance& inst) {
  SmoothingConfig bare;
  bare.x0 = Vector(static_cast<std::size_t>(inst.n()), 0.0);
  SmoothedDualOracle oracle(inst, bare);
  return oracle.primal_from_prices(Vector(static_cast<std::size_t>(inst.m()), 0.0));
}

namespace {

std::uint64_t first_productive_step(const MdResult& r) {
  for (const auto& row : r.trace.rows) {
    if (row.step_type == StepType::productive) return row.iter;
  }
  return 0;
}

nlohmann::json fgm_summary(const FgmResult& r, const ProblemInstance& inst) {
  return {{"iterations", r.iterations},
          {"converged", r.converged},
          {"lipschitz", r.lipschitz},
          {"oracle_calls", r.oracle_calls},
          {"utility", utility_total(inst, r.x_hat)},
          {"violation", violation_norm(inst, r.x_hat)}};
}

nlohmann::json md_summary(const MdResult& r, const ProblemInstance& inst) {
  nlohmann::json doc = {{"iterations", r.iterations},
                        {"productive", r.productive_count},
                        {"nonproductive", r.nonproductive_count},
                        {"productive_fraction", r.productive_fraction},
                        {"first_productive_step", first_productive_step(r)},
                        {"gradient_bound_violated", r.gradient_bound_violated},
                        {"oracle_calls", r.oracle_calls}};
  if (r.x_hat) {
    doc["utility"] = utility_total(inst, *r.x_hat);
    doc["max_violation"] = r.x_hat_max_violation;
    doc["duality_gap"] = md_duality_gap(inst, r);
  }
  return doc;
}

}  // namespace

ExperimentResult run_experiment(const ProblemInstance& inst,
                                const std::vector<SolverKind>& solvers,
                                const ExperimentParams& params,
                                const std::string& outdir) {
  namespace fs = std::filesystem;
  const bool write = !outdir.empty();
  if (write) fs::create_directories(outdir);

  ExperimentParams p = params;
  const Vector md_x0 = p.md_x0.value_or(default_md_start(inst));
  if (p.fgm_eps_relative) {
    p.fgm_eps = *p.fgm_eps_relative * std::abs(utility_total(inst, default_md_start(inst)));
  }
  const std::string fingerprint = instance_fingerprint(inst);

  ExperimentResult result;
  for (SolverKind kind : solvers) {
    SolverOutcome out;
    out.kind = kind;
    try {
      switch (kind) {
        case SolverKind::fgm:
        case SolverKind::fgm_protocol: {
          SmoothingOptions so;
          so.epsilon = p.fgm_eps;
          so.mu = p.fgm_mu;
          const SmoothingConfig cfg = make_smoothing_config(inst, so);
          FgmOptions fo;
          fo.use_certificate = p.fgm_certificate;
          fo.fixed_iterations = p.fgm_iterations;
          fo.max_iter = std::max(fo.max_iter, p.fgm_iterations);
          fo.trace_stride = p.fgm_trace_stride;
          if (kind == SolverKind::fgm) {
            FgmResult r = fgm_solve(inst, cfg, fo);
            out.summary = fgm_summary(r, inst);
            out.trace = std::move(r.trace);
          } else {
            FgmProtocolOptions po;
            po.fgm = fo;
            auto [r, stats] = run_fgm_protocol(inst, cfg, p.fgm_iterations, po);
            out.summary = fgm_summary(r, inst);
            out.summary["network"] = to_json(stats);
            out.trace = std::move(r.trace);
          }
          break;
        }
        case SolverKind::md:
        case SolverKind::md_protocol: {
          const double bound = p.md_gradient_bound.value_or(default_gradient_bound(inst));
          MdOptions mo;
          mo.literal_sign = p.literal_sign;
          mo.trace_stride = p.md_trace_stride;
          if (kind == SolverKind::md) {
            MdResult r = md_solve(inst, p.md_eps, bound, md_x0, p.md_steps, p.seed, mo);
            out.summary = md_summary(r, inst);
            out.trace = std::move(r.trace);
          } else {
            MdProtocolOptions po;
            po.md = mo;
            auto [r, stats] =
                run_md_protocol(inst, p.md_eps, bound, md_x0, p.md_steps, p.seed, po);
            out.summary = md_summary(r, inst);
            out.summary["network"] = to_json(stats);
            out.trace = std::move(r.trace);
          }
          break;
        }
      }
      out.ok = true;
      out.trace.fingerprint = fingerprint;
      if (write) {
        out.csv_path = (fs::path(outdir) / (std::string(to_string(kind)) + ".csv")).string();
        write_trace_csv(out.csv_path, out.trace);
      }
    } catch (const std::exception& e) {
      out.ok = false;
      out.error = e.what();
    }
    result.outcomes.push_back(std::move(out));
  }

  nlohmann::json solvers_doc = nlohmann::json::object();
  std::vector<std::string> names;
  std::vector<const SolverTrace*> traces;
  for (const auto& o : result.outcomes) {
    nlohmann::json entry = {{"status", o.ok ? "ok" : "failed"}};
    if (o.ok) {
      entry["csv"] = fs::path(o.csv_path).filename().string();
      entry["rows"] = o.trace.rows.size();
      entry["parameters"] = o.trace.parameters;
      entry["summary"] = o.summary;
      names.emplace_back(to_string(o.kind));
      traces.push_back(&o.trace);
    } else {
      entry["error"] = o.error;
    }
    solvers_doc[std::string(to_string(o.kind))] = std::move(entry);
  }
  result.manifest = {{"version", kVersion},
                     {"seed", p.seed},
                     {"fingerprint", fingerprint},
                     {"instance", {{"m", inst.m()}, {"n", inst.n()}, {"nnz", inst.matrix().nnz()}}},
                     {"parameters", to_json(p)},
                     {"solvers", std::move(solvers_doc)}};
  if (write) {
    if (p.write_aligned && !traces.empty()) {
      write_aligned_csv((fs::path(outdir) / "aligned.csv").string(), names, traces);
      result.manifest["aligned"] = "aligned.csv";
    }
    std::ofstream mf(fs::path(outdir) / "manifest.json", std::ios::binary);
    if (!mf) throw std::runtime_error("cannot write manifest in " + outdir);
    mf << result.manifest.dump(2) << '\n';
  }
  return result;
}

void write_aligned_csv(const std::string& path,
                       const std::vector<std::string>& names,
                       const std::vector<const SolverTrace*>& traces) {
  if (names.size() != traces.size()) throw std::invalid_argument("names/traces mismatch");
  std::set<std::uint64_t> axis;
  for (const auto* t : traces) {
    for (const auto& row : t->rows) axis.insert(row.oracle_calls);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "oracle_calls";
  for (const auto& name : names) out << ',' << name << "_utility," << name << "_violation";
  out << '\n';
  std::vector<std::size_t> cursor(traces.size(), 0);
  char buf[64];
  for (std::uint64_t calls : axis) {
    out << calls;
    for (std::size_t s = 0; s < traces.size(); ++s) {
      const auto& rows = traces[s]->rows;
      while (cursor[s] < rows.size() && rows[cursor[s]].oracle_calls <= calls) ++cursor[s];
      if (cursor[s] == 0) {
        out << ",,";
        continue;
      }
      const TraceRow& row = rows[cursor[s] - 1];
      std::snprintf(buf, sizeof buf, ",%.17g", row.utility);
      out << buf;
      std::snprintf(buf, sizeof buf, ",%.17g", row.violation);
      out << buf;
    }
    out << '\n';
  }
}

ExperimentPreset experiment_preset(std::string_view name) {
  ExperimentPreset preset;
  preset.generator.m = 40;
  preset.generator.n = 100;
  preset.generator.a_low = 1.0;
  preset.generator.a_high = 50.0;
  preset.generator.sigma = 0.001;
  preset.generator.seed = 2024;
  preset.generator.ensure_nonempty = true;

  preset.params.seed = 7;
  preset.params.md_eps = 1.0;
  preset.params.md_steps = 100000;
  preset.params.md_trace_stride = 100;
  preset.params.fgm_eps_relative = 0.05;
  preset.params.fgm_iterations = preset.params.md_steps / 100;  // same oracle budget
  preset.params.fgm_trace_stride = 10;

  if (name == "paper-fig1") {
    preset.name = "paper-fig1";
    preset.generator.density = 0.001;
    preset.description =
        "m=40, n=100, density 0.001 with every row and column forced nonempty, "
        "a ~ U[1,50], b ~ U[0,100], sigma=0.001; MD from the zero-price rates "
        "(infeasible), FGM on the same oracle budget";
  } else if (name == "dense-fig1") {
    preset.name = "dense-fig1";
    preset.generator.density = 0.1;
    preset.description =
        "alternative to paper-fig1 with density 0.1 (about 400 incidences); "
        "not the literal setting";
  } else {
    throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
  }
  return preset;
}

std::vector<std::string> preset_names() { return {"paper-fig1", "dense-fig1"}; }

}  // namespace netum

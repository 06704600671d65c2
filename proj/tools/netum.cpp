// Command-line front end: instance generation, single solver runs,
// preset experiments and iteration bounds.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "netum/fgm.hpp"
#include "netum/harness.hpp"
#include "netum/mirror.hpp"
#include "netum/model.hpp"
#include "netum/oracle.hpp"
#include "netum/simnet.hpp"

namespace {

using namespace netum;

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kNotConverged = 2;
constexpr std::uint64_t kMdStepCap = 10'000'000;

struct GenerateArgs {
  GeneratorConfig cfg;
  double b_scale = -1.0;
  std::string out;
};

struct SolveArgs {
  std::string instance;
  std::string solver = "fgm";
  double eps = 0.0;
  std::optional<double> mu;
  std::optional<std::uint64_t> max_iter;
  std::uint64_t seed = 0;
  bool literal_sign = false;
  std::uint64_t trace_stride = 1;
  std::optional<double> gradient_bound;
  std::string out;
};

struct ExperimentArgs {
  std::string preset = "paper-fig1";
  std::optional<std::uint64_t> instance_seed;
  std::optional<std::uint64_t> solver_seed;
  std::vector<std::string> solvers{"fgm", "md"};
  std::string out;
};

struct BoundsArgs {
  std::string instance;
  double eps = 0.0;
};

int run_generate(GenerateArgs& args) {
  if (args.b_scale >= 0.0) args.cfg.b_scale = args.b_scale;
  const ProblemInstance inst = generate_instance(args.cfg);
  save_instance(inst, args.out);
  std::cout << nlohmann::json{{"file", args.out},
                              {"m", inst.m()},
                              {"n", inst.n()},
                              {"nnz", inst.matrix().nnz()},
                              {"fingerprint", instance_fingerprint(inst)}}
                   .dump()
            << '\n';
  return kOk;
}

int run_solve(const SolveArgs& args) {
  const ProblemInstance inst = load_instance(args.instance);
  const SolverKind kind = solver_from_string(args.solver);
  const std::string fingerprint = instance_fingerprint(inst);
  nlohmann::json summary = {{"solver", to_string(kind)}, {"fingerprint", fingerprint}};
  int status = kOk;

  if (kind == SolverKind::fgm || kind == SolverKind::fgm_protocol) {
    SmoothingOptions so;
    so.epsilon = args.eps;
    so.mu = args.mu;  // an explicit mu switches off the strong-concavity path
    const SmoothingConfig cfg = make_smoothing_config(inst, so);
    FgmOptions fo;
    if (args.max_iter) fo.max_iter = *args.max_iter;
    fo.trace_stride = args.trace_stride;
    if (!cfg.r_q) {
      throw std::invalid_argument(
          "no Slater bound: some capacity is 0, so the certificate rule cannot run");
    }
    FgmResult r;
    if (kind == SolverKind::fgm) {
      r = fgm_solve(inst, cfg, fo);
    } else {
      FgmProtocolOptions po;
      po.fgm = fo;
      auto [res, stats] = run_fgm_protocol(inst, cfg, fo.max_iter, po);
      r = std::move(res);
      summary["network"] = to_json(stats);
    }
    r.trace.fingerprint = fingerprint;
    write_trace_csv(args.out, r.trace);
    summary["iterations"] = r.iterations;
    summary["converged"] = r.converged;
    summary["utility"] = utility_total(inst, r.x_hat);
    summary["violation"] = violation_norm(inst, r.x_hat);
    summary["oracle_calls"] = r.oracle_calls;
    summary["x_hat"] = r.x_hat;
    if (!r.converged) status = kNotConverged;
  } else {
    const double bound = args.gradient_bound.value_or(default_gradient_bound(inst));
    Vector x0(static_cast<std::size_t>(inst.n()), 0.0);
    std::uint64_t steps = 0;
    if (args.max_iter) {
      steps = *args.max_iter;
    } else {
      SmoothingOptions so;
      so.epsilon = args.eps;
      const SmoothingConfig cfg = make_smoothing_config(inst, so);
      const double row_norm = max_row_dual_norm(inst.matrix(), inst.norm_p());
      steps = md_iterations_bound(bound, row_norm, static_cast<std::uint64_t>(inst.n()),
                                  cfg.r_p, args.eps);
      if (steps > kMdStepCap) {
        std::cerr << "note: step bound " << steps << " capped at " << kMdStepCap
                  << "; pass --max-iter to override\n";
        steps = kMdStepCap;
      }
    }
    MdOptions mo;
    mo.literal_sign = args.literal_sign;
    mo.trace_stride = args.trace_stride;
    MdResult r;
    if (kind == SolverKind::md) {
      r = md_solve(inst, args.eps, bound, x0, steps, args.seed, mo);
    } else {
      MdProtocolOptions po;
      po.md = mo;
      auto [res, stats] = run_md_protocol(inst, args.eps, bound, x0, steps, args.seed, po);
      r = std::move(res);
      summary["network"] = to_json(stats);
    }
    r.trace.fingerprint = fingerprint;
    write_trace_csv(args.out, r.trace);
    summary["iterations"] = r.iterations;
    summary["productive"] = r.productive_count;
    summary["nonproductive"] = r.nonproductive_count;
    summary["gradient_bound_violated"] = r.gradient_bound_violated;
    if (r.x_hat) {
      summary["utility"] = utility_total(inst, *r.x_hat);
      summary["max_violation"] = r.x_hat_max_violation;
      summary["duality_gap"] = md_duality_gap(inst, r);
      summary["x_hat"] = *r.x_hat;
    } else {
      summary["error"] = "no productive iterate";
      status = kNotConverged;
    }
  }
  std::cout << summary.dump() << '\n';
  return status;
}

int run_experiment_cmd(const ExperimentArgs& args) {
  ExperimentPreset preset = experiment_preset(args.preset);
  if (args.instance_seed) preset.generator.seed = *args.instance_seed;
  if (args.solver_seed) preset.params.seed = *args.solver_seed;
  std::vector<SolverKind> solvers;
  for (const auto& s : args.solvers) solvers.push_back(solver_from_string(s));

  const ProblemInstance inst = generate_instance(preset.generator);
  std::filesystem::create_directories(args.out);
  save_instance(inst, (std::filesystem::path(args.out) / "instance.json").string());
  ExperimentResult result = run_experiment(inst, solvers, preset.params, args.out);

  nlohmann::json report = {{"preset", preset.name},
                           {"description", preset.description},
                           {"generator", to_json(preset.generator)},
                           {"out", args.out}};
  bool all_ok = true;
  for (const auto& o : result.outcomes) {
    report["solvers"][std::string(to_string(o.kind))] =
        o.ok ? o.summary : nlohmann::json{{"error", o.error}};
    all_ok = all_ok && o.ok;
  }
  std::cout << report.dump(2) << '\n';
  return all_ok ? kOk : kInvalid;
}

int run_bounds(const BoundsArgs& args) {
  const ProblemInstance inst = load_instance(args.instance);
  nlohmann::json out = {{"eps", args.eps}, {"nnz", inst.matrix().nnz()}};

  SmoothingOptions plain;
  plain.epsilon = args.eps;
  plain.use_strong_concavity = false;
  const SmoothingConfig cfg = make_smoothing_config(inst, plain);
  out["r_p"] = cfg.r_p;
  out["mu"] = cfg.mu;
  if (cfg.r_q) out["r_q"] = *cfg.r_q;

  const auto* quad = inst.quadratic_utility();
  const double strong = quad != nullptr ? quad->curvature() : inst.utility().strong_concavity();
  out["strong_concavity"] = strong;

  if (inst.matrix().nnz() > 0) {
    const double norm_sq = spectral_norm_sq(inst.matrix());
    out["spectral_norm_sq"] = norm_sq;
    SmoothedDualOracle oracle(inst, cfg);
    nlohmann::json lip;
    lip["nnz"] = oracle.lipschitz_bound(LipschitzMethod::nnz);
    try {
      lip["spectral"] = oracle.lipschitz_bound(LipschitzMethod::spectral);
      lip["operator_norm"] = oracle.lipschitz_bound(LipschitzMethod::operator_norm);
    } catch (const std::invalid_argument& e) {
      lip["spectral"] = e.what();
    }
    if (strong > 0.0) lip["strong_concavity_only"] = norm_sq / strong;
    out["lipschitz"] = lip;
    if (cfg.r_q) {
      out["fgm_iterations"] = fgm_iterations_bound(cfg, std::sqrt(norm_sq), 0.0, args.eps);
      if (strong > 0.0) {
        out["fgm_iterations_strong"] =
            fgm_iterations_bound(cfg, std::sqrt(norm_sq), strong, args.eps);
      }
    } else {
      out["fgm_iterations"] = "unavailable: no Slater bound (some capacity is 0)";
    }
    const double row_norm = max_row_dual_norm(inst.matrix(), inst.norm_p());
    const double grad = quad != nullptr ? default_gradient_bound(inst) : 1.0;
    out["md_gradient_bound"] = grad;
    out["md_iterations"] = md_iterations_bound(grad, row_norm,
                                               static_cast<std::uint64_t>(inst.n()),
                                               cfg.r_p, args.eps);
  } else {
    out["note"] = "matrix has no entries; the problem is unconstrained";
  }
  std::cout << out.dump(2) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Network utility maximization: solvers, protocol simulator, experiments"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Draw a random instance");
  g->add_option("--m", gen.cfg.m, "connections")->required()->check(CLI::PositiveNumber);
  g->add_option("--n", gen.cfg.n, "vertices")->required()->check(CLI::PositiveNumber);
  g->add_option("--density", gen.cfg.density, "probability of each incidence")->required();
  g->add_option("--seed", gen.cfg.seed, "generator seed")->required();
  g->add_flag("--ensure-nonempty", gen.cfg.ensure_nonempty,
              "add an entry to every empty row and column");
  g->add_option("--a-low", gen.cfg.a_low)->capture_default_str();
  g->add_option("--a-high", gen.cfg.a_high)->capture_default_str();
  g->add_option("--b-scale", gen.b_scale, "capacities ~ U[0, b-scale] (default n)");
  g->add_option("--sigma", gen.cfg.sigma)->capture_default_str();
  g->add_option("-o,--output", gen.out, "instance JSON")->required();

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "Run one solver and write its trace");
  s->add_option("--instance", solve.instance)->required()->check(CLI::ExistingFile);
  s->add_option("--solver", solve.solver)
      ->required()
      ->check(CLI::IsMember({"fgm", "md", "fgm-protocol", "md-protocol"}));
  s->add_option("--eps", solve.eps)->required()->check(CLI::PositiveNumber);
  s->add_option("--mu", solve.mu, "explicit smoothing; disables the strong-concavity path");
  s->add_option("--max-iter", solve.max_iter, "FGM iteration cap / MD step count");
  s->add_option("--seed", solve.seed)->capture_default_str();
  s->add_flag("--literal-sign", solve.literal_sign,
              "MD productive step as printed (descent on u)");
  s->add_option("--trace-stride", solve.trace_stride)->check(CLI::PositiveNumber);
  s->add_option("--gradient-bound", solve.gradient_bound, "M_U (default max a_i)");
  s->add_option("-o,--output", solve.out, "trace CSV")->required();

  ExperimentArgs exp;
  auto* e = app.add_subcommand("experiment", "Run a preset comparison end to end");
  e->add_option("--preset", exp.preset)
      ->check(CLI::IsMember(preset_names()))
      ->capture_default_str();
  e->add_option("--instance-seed", exp.instance_seed);
  e->add_option("--seed", exp.solver_seed, "solver seed");
  e->add_option("--solvers", exp.solvers)->delimiter(',')->capture_default_str();
  e->add_option("-o,--output", exp.out, "output directory")->required();

  BoundsArgs bounds;
  auto* b = app.add_subcommand("bounds", "Print iteration bounds and Lipschitz estimates");
  b->add_option("--instance", bounds.instance)->required()->check(CLI::ExistingFile);
  b->add_option("--eps", bounds.eps)->required()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForVersion& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kInvalid;
  }

  try {
    if (*g) return run_generate(gen);
    if (*s) return run_solve(solve);
    if (*e) return run_experiment_cmd(exp);
    if (*b) return run_bounds(bounds);
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kInvalid;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kInvalid;
  }
  return kInvalid;
}

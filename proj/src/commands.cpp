#include "slg/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

#include "slg/barriers.hpp"
#include "slg/config.hpp"
#include "slg/errors.hpp"
#include "slg/fields.hpp"
#include "slg/kernels.hpp"
#include "slg/report.hpp"
#include "slg/solver.hpp"
#include "slg/spectral.hpp"
#include "slg/verify.hpp"

namespace slg {
namespace {

namespace fs = std::filesystem;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string error_location(const std::string& path, const ConfigError& e) {
  std::ostringstream os;
  os << path;
  if (e.line() > 0) os << ":" << e.line();
  os << ": " << e.what();
  return os.str();
}

// u -> -u flips the quadratic part, the constant, and every trig amplitude.
PotentialSpec negated_potential(const PotentialSpec& p) {
  PotentialSpec q = p;
  q.quadratic.scale(-1.0);
  q.constant = -q.constant;
  for (TrigMode& m : q.modes) {
    m.cos_amp = -m.cos_amp;
    m.sin_amp = -m.sin_amp;
  }
  return q;
}

// Mirror routing: solve the negated data on the standard branch, then negate
// the solution back. Valid because the operator is odd under simultaneous
// negation of the potential and the phase target.
ProblemSetup mirrored_setup(const ProblemSetup& s) {
  ProblemSetup m = s;
  m.negated = true;
  if (m.pair) {
    m.pair->u0 = negated_potential(m.pair->u0);
    m.pair->u1 = negated_potential(m.pair->u1);
  }
  if (m.chi_matrix) m.chi_matrix->scale(-1.0);
  return m;
}

PhaseBranch mirrored_branch(const PhaseBranch& b) {
  return PhaseBranch{b.n, -b.theta, -b.big_theta};
}

PhaseAdmissibilityReport assess_admissibility(const ProblemSetup& setup) {
  if (setup.pair) return phase_admissibility_report(*setup.pair, setup.branch, setup.space);
  return phase_admissibility_report(setup.make_chi(1.0), setup.branch);
}

RunConfig load_config(const CommandOptions& opt) {
  if (opt.config_path.empty()) throw ConfigError("missing --config <path>");
  RunConfig cfg = parse_config_file(opt.config_path);
  if (!opt.tau_schedule.empty()) cfg.schedule.tau_sequence = opt.tau_schedule;
  if (opt.grid > 0) cfg.grid_points = opt.grid;
  if (opt.time_grid > 0) cfg.time_points = opt.time_grid;
  cfg.validate();
  return cfg;
}

void select_kernel_or_throw(const std::string& kernel) {
  if (!kernels::select(kernel))
    throw ConfigError("kernel '" + kernel + "' is not available on this machine");
}

fs::path prepare_out_dir(const std::string& out_dir) {
  fs::path dir(out_dir.empty() ? std::string(".") : out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

int report_config_error(const std::string& command, const CommandOptions& opt,
                        const std::exception& e) {
  const auto* ce = dynamic_cast<const ConfigError*>(&e);
  std::cerr << command << ": "
            << (ce != nullptr && !opt.config_path.empty() ? error_location(opt.config_path, *ce)
                                                          : std::string(e.what()))
            << "\n";
  return kExitConfig;
}

const TauRecord* last_success(const SweepResult& sweep) {
  const TauRecord* last = nullptr;
  for (const TauRecord& r : sweep.records)
    if (r.success) last = &r;
  return last;
}

// Verification checks run in the solved (possibly mirrored) frame; the
// convexity and oracle statements are the ones the solver certified.
void run_enabled_checks(const RunConfig& cfg, const ProblemSetup& solved, const SweepResult& sweep,
                        VerificationBundle& out) {
  const TauRecord* last = last_success(sweep);
  if (last == nullptr) return;
  if (cfg.check_convexity) out.convexity = convexity_check(last->vhat, solved.make_chi(last->tau));
  // The determinant identity holds at every tau; measure it where the fixed
  // grid resolves the fields best, the largest tau.
  const TauRecord& first = sweep.records.front();
  if (cfg.check_monge_ampere && cfg.n == 1 && solved.pair && cfg.time_points >= 7 &&
      first.success)
    out.monge_ampere = monge_ampere_oracle(first.vhat, *solved.pair, cfg.monge_ampere_bound);
  if (cfg.check_energy && solved.pair) {
    out.energy = energy_functional(last->vhat, *solved.pair, solved.branch);
    if (out.energy->weight_warning)
      out.notes.push_back("energy weight dipped below zero on a path slice");
  }
  if (cfg.check_residual_trend && solved.pair)
    out.residual_trend = geodesic_residual_trend(sweep, *solved.pair, solved.branch);
}

// Flip solved-frame fields back into the input frame for emission.
SweepResult display_sweep(const SweepResult& sweep, bool negated) {
  if (!negated) return sweep;
  SweepResult d = sweep;
  for (TauRecord& r : d.records)
    for (double& x : r.vhat.values) x = -x;
  return d;
}

struct SolvePipeline {
  RunConfig cfg;
  ProblemSetup original;
  ProblemSetup solved;
  VerificationBundle verification;
  SweepResult sweep;
  bool admissible = false;
};

// Shared front half of solve and sweep: admissibility gate, routing, tau
// descent. Returns false when the data is inadmissible on both branches.
bool run_pipeline(const CommandOptions& opt, const RunConfig& cfg, SolvePipeline& p) {
  p.cfg = cfg;
  p.original = cfg.setup();
  p.verification.admissibility = assess_admissibility(p.original);
  const PhaseAdmissibilityReport& adm = *p.verification.admissibility;
  if (!adm.raw.admissible && !adm.use_mirror) return false;

  p.solved = adm.use_mirror ? mirrored_setup(p.original) : p.original;
  if (p.solved.negated)
    p.verification.notes.push_back(
        "endpoints satisfy the mirrored cone condition; solved the negated problem and negated "
        "the solution");
  p.sweep = run_tau_sweep(p.solved, cfg.schedule, cfg.newton, opt.jobs);
  p.admissible = true;
  return true;
}

int finish_report(const fs::path& dir, ReportInputs& report,
                  std::chrono::steady_clock::time_point t0) {
  report.wall_seconds = seconds_since(t0);
  write_report_json((dir / "report.json").string(), report);
  if (report.exit_code == kExitSuccess)
    std::cout << report.command << ": pass, report at " << (dir / "report.json").string() << "\n";
  else
    std::cerr << report.command << ": " << report.status
              << (report.failure_reason.empty() ? "" : ": " + report.failure_reason) << "\n";
  return report.exit_code;
}

}  // namespace

int cmd_solve(const CommandOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig cfg;
  fs::path dir;
  try {
    cfg = load_config(opt);
    select_kernel_or_throw(opt.kernel);
    dir = prepare_out_dir(opt.out_dir);
  } catch (const Error& e) {
    return report_config_error("solve", opt, e);
  }

  SolvePipeline p;
  ReportInputs report;
  report.command = "solve";
  report.config = &p.cfg;
  report.verification = &p.verification;

  try {
    if (!run_pipeline(opt, cfg, p)) {
      report.setup = &p.original;
      report.status = "inadmissible";
      report.failure_reason = p.verification.admissibility->instruction;
      report.exit_code = kExitAdmissibility;
      return finish_report(dir, report, t0);
    }
  } catch (const AdmissibilityError& e) {
    report.setup = &p.original;
    report.status = "inadmissible";
    report.failure_reason = e.what();
    report.exit_code = kExitAdmissibility;
    return finish_report(dir, report, t0);
  } catch (const InputError& e) {
    return report_config_error("solve", opt, e);
  }

  report.setup = &p.original;
  report.sweep = &p.sweep;
  report.negated = p.solved.negated;
  run_enabled_checks(cfg, p.solved, p.sweep, p.verification);

  // Emission happens in the input frame: negate the solution fields back and
  // evaluate phases against the un-mirrored data and branch.
  const SweepResult display = display_sweep(p.sweep, p.solved.negated);
  ProblemSetup display_setup = p.original;
  if (p.solved.negated) display_setup.branch = mirrored_branch(p.original.branch);

  for (std::size_t k = 0; k < display.records.size(); ++k) {
    const TauRecord& r = display.records[k];
    if (!r.success) break;
    const std::string name = "fields_tau" + std::to_string(k) + ".csv";
    write_fields_csv((dir / name).string(), r, display_setup);
    report.artifact_files.push_back(name);
  }
  const ResidualTrendReport* trend =
      p.verification.residual_trend ? &*p.verification.residual_trend : nullptr;
  write_trend_tau_csv((dir / "trend_tau.csv").string(), p.sweep, trend);
  report.artifact_files.push_back("trend_tau.csv");

  if (p.sweep.success && display_setup.pair) {
    const ExtractedGeodesic extracted = extract_geodesic(display, *display_setup.pair);
    report.extracted_time_variation = extracted.time_variation;
    report.extracted_tau_min = extracted.tau_min;
  }

  if (!p.sweep.success) {
    report.status = "solver_failure";
    report.failure_reason = p.sweep.failure_reason;
    report.exit_code = kExitSolver;
  } else if (p.verification.any_hard_failure()) {
    report.status = "verification_failure";
    report.failure_reason = "one or more verification checks failed";
    report.exit_code = kExitVerification;
  } else {
    report.status = "pass";
    report.exit_code = kExitSuccess;
  }
  return finish_report(dir, report, t0);
}

int cmd_verify(const CommandOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig cfg;
  fs::path dir;
  try {
    cfg = load_config(opt);
    select_kernel_or_throw(opt.kernel);
    dir = prepare_out_dir(opt.out_dir);
  } catch (const Error& e) {
    return report_config_error("verify", opt, e);
  }

  const std::vector<int> dims{1, 2, 3, 4};
  const std::vector<double> lambda_prime{1.0, 2.0, 3.0};
  const std::vector<double> a_vec{0.6, -1.3, 0.9};
  const std::vector<double> a_values{1e2, 1e3, 1e4};
  const std::vector<double> tau_values{1.0, 0.25};

  VerificationBundle bundle;
  bundle.identity_sweep = sigma_det_identity_sweep(dims, 250, opt.seed, 1e-10);
  bundle.gradient_oracle = gradient_fd_oracle(100, 4, opt.seed + 1, 1e-6);
  bundle.arrow = arrow_asymptotics_check(lambda_prime, a_vec, a_values, tau_values);
  try {
    bundle.admissibility = assess_admissibility(cfg.setup());
  } catch (const InputError& e) {
    return report_config_error("verify", opt, e);
  }

  auto line = [](const std::string& name, bool pass, const std::string& detail) {
    std::cout << "verify: " << name << ": " << (pass ? "pass" : "FAIL")
              << (detail.empty() ? "" : " (" + detail + ")") << "\n";
  };
  {
    std::ostringstream d;
    d << bundle.identity_sweep->instances << " instances, max rel "
      << bundle.identity_sweep->max_rel_error;
    line("sigma/det identity", bundle.identity_sweep->pass, d.str());
  }
  {
    std::ostringstream d;
    d << bundle.gradient_oracle->instances << " instances, max rel "
      << bundle.gradient_oracle->max_rel_error;
    line("gradient oracle", bundle.gradient_oracle->pass, d.str());
  }
  {
    std::ostringstream d;
    d << "deviation slope " << bundle.arrow->deviation_slope;
    line("eigenvalue asymptotics", bundle.arrow->pass, d.str());
  }
  line("phase admissibility",
       bundle.admissibility->raw.admissible || bundle.admissibility->use_mirror,
       bundle.admissibility->instruction);

  ReportInputs report;
  report.command = "verify";
  report.config = &cfg;
  report.verification = &bundle;
  report.status = bundle.any_hard_failure() ? "verification_failure" : "pass";
  report.exit_code = bundle.any_hard_failure() ? kExitVerification : kExitSuccess;
  if (report.exit_code != kExitSuccess) report.failure_reason = "one or more checks failed";
  return finish_report(dir, report, t0);
}

int cmd_sweep(const CommandOptions& opt, const std::string& parameter) {
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig cfg;
  fs::path dir;
  try {
    cfg = load_config(opt);
    select_kernel_or_throw(opt.kernel);
    dir = prepare_out_dir(opt.out_dir);
    if (parameter != "tau" && parameter != "grid")
      throw ConfigError("sweep parameter must be 'tau' or 'grid', got '" + parameter + "'");
    if (parameter == "grid") {
      if (cfg.n != 1 || !cfg.u0)
        throw ConfigError("grid sweeps need an n = 1 potential-pair config for the "
                          "determinant oracle");
      if (cfg.time_points < 7)
        throw ConfigError("grid sweeps need time_grid >= 7 for the fourth-order oracle");
    }
  } catch (const Error& e) {
    return report_config_error("sweep", opt, e);
  }

  if (parameter == "tau") {
    SolvePipeline p;
    ReportInputs report;
    report.command = "sweep tau";
    report.config = &p.cfg;
    report.verification = &p.verification;
    try {
      if (!run_pipeline(opt, cfg, p)) {
        report.setup = &p.original;
        report.status = "inadmissible";
        report.failure_reason = p.verification.admissibility->instruction;
        report.exit_code = kExitAdmissibility;
        return finish_report(dir, report, t0);
      }
    } catch (const AdmissibilityError& e) {
      report.setup = &p.original;
      report.status = "inadmissible";
      report.failure_reason = e.what();
      report.exit_code = kExitAdmissibility;
      return finish_report(dir, report, t0);
    } catch (const InputError& e) {
      return report_config_error("sweep", opt, e);
    }
    report.setup = &p.original;
    report.sweep = &p.sweep;
    report.negated = p.solved.negated;
    if (p.solved.pair && last_success(p.sweep) != nullptr)
      p.verification.residual_trend =
          geodesic_residual_trend(p.sweep, *p.solved.pair, p.solved.branch);
    const ResidualTrendReport* trend =
        p.verification.residual_trend ? &*p.verification.residual_trend : nullptr;
    write_trend_tau_csv((dir / "trend_tau.csv").string(), p.sweep, trend);
    report.artifact_files.push_back("trend_tau.csv");
    if (!p.sweep.success) {
      report.status = "solver_failure";
      report.failure_reason = p.sweep.failure_reason;
      report.exit_code = kExitSolver;
    } else {
      report.status = "pass";
      report.exit_code = kExitSuccess;
    }
    return finish_report(dir, report, t0);
  }

  // Grid refinement: one tau level per grid, deviation measured by the
  // independent fourth-order determinant oracle.
  ReportInputs report;
  report.command = "sweep grid";
  report.config = &cfg;
  std::vector<double> deviations;
  std::vector<double> spacings;
  // The sweep measures the spatial order, so the time grid is pinned fine
  // enough that its truncation term stays below the finest spatial one.
  const int max_grid = *std::max_element(cfg.grid_sweep.begin(), cfg.grid_sweep.end());
  const int sweep_time_points = std::max(cfg.time_points, 4 * max_grid + 1);
  for (int levels : cfg.grid_sweep) {
    RunConfig level_cfg = cfg;
    level_cfg.grid_points = levels;
    level_cfg.time_points = sweep_time_points;
    level_cfg.schedule.tau_sequence = {cfg.schedule.tau_sequence.front()};
    SolvePipeline p;
    try {
      if (!run_pipeline(opt, level_cfg, p)) {
        report.status = "inadmissible";
        report.failure_reason = p.verification.admissibility->instruction;
        report.exit_code = kExitAdmissibility;
        return finish_report(dir, report, t0);
      }
    } catch (const AdmissibilityError& e) {
      report.status = "inadmissible";
      report.failure_reason = e.what();
      report.exit_code = kExitAdmissibility;
      return finish_report(dir, report, t0);
    } catch (const InputError& e) {
      return report_config_error("sweep", opt, e);
    }
    const TauRecord* rec = last_success(p.sweep);
    if (rec == nullptr) {
      report.status = "solver_failure";
      report.failure_reason = "grid level " + std::to_string(levels) + ": " +
                              (p.sweep.failure_reason.empty() ? "no converged tau level"
                                                              : p.sweep.failure_reason);
      report.exit_code = kExitSolver;
      return finish_report(dir, report, t0);
    }
    const MongeAmpereReport ma =
        monge_ampere_oracle(rec->vhat, *p.solved.pair, cfg.monge_ampere_bound);
    report.grid_levels.push_back(levels);
    deviations.push_back(ma.max_deviation);
    spacings.push_back(1.0 / levels);
  }
  report.grid_deviations = deviations;
  report.grid_order = loglog_slope(spacings, deviations);
  write_trend_grid_csv((dir / "trend_grid.csv").string(), report.grid_levels, deviations);
  report.artifact_files.push_back("trend_grid.csv");
  report.status = "pass";
  report.exit_code = kExitSuccess;
  std::cout << "sweep grid: oracle deviation order " << *report.grid_order << "\n";
  return finish_report(dir, report, t0);
}

namespace {

struct EquivalenceReport {
  std::string compared;
  int batches = 0;
  double max_abs_error = 0.0;
  bool pass = false;
};

// Same random batches through the scalar reference and the active kernels;
// the two must agree to rounding.
EquivalenceReport kernel_equivalence_check(unsigned seed, double tol) {
  const kernels::Ops& ref = kernels::scalar_ops();
  const kernels::Ops& act = kernels::active();
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> entry(-3.0, 3.0);

  EquivalenceReport rep;
  rep.compared = std::string(ref.name) + " vs " + std::string(act.name);
  for (int m = 1; m <= 6; ++m) {
    const int packed = SymmetricMatrix::packed_size(m);
    std::vector<double> a(static_cast<std::size_t>(packed) * kernels::kWidth);
    std::vector<double> e0(static_cast<std::size_t>(m) * kernels::kWidth);
    std::vector<double> e1(e0.size());
    std::vector<double> g0(a.size());
    std::vector<double> g1(a.size());
    for (int batch = 0; batch < 32; ++batch) {
      for (double& x : a) x = entry(rng);
      ref.eig_batch(m, a.data(), e0.data());
      act.eig_batch(m, a.data(), e1.data());
      for (std::size_t i = 0; i < e0.size(); ++i)
        rep.max_abs_error = std::max(rep.max_abs_error, std::abs(e0[i] - e1[i]));
      ref.inv_iaa_batch(m, a.data(), g0.data());
      act.inv_iaa_batch(m, a.data(), g1.data());
      for (std::size_t i = 0; i < g0.size(); ++i)
        rep.max_abs_error = std::max(rep.max_abs_error, std::abs(g0[i] - g1[i]));
      ++rep.batches;
    }
  }
  rep.pass = rep.max_abs_error <= tol;
  return rep;
}

bool stencil_weight_check() {
  const int off3[] = {-1, 0, 1};
  const std::vector<double> d2 = fd_weights(off3, 2);
  const int off5[] = {-2, -1, 0, 1, 2};
  const std::vector<double> d1 = fd_weights(off5, 1);
  const double expect2[] = {1.0, -2.0, 1.0};
  const double expect1[] = {1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0};
  double err = 0.0;
  for (int i = 0; i < 3; ++i) err = std::max(err, std::abs(d2[i] - expect2[i]));
  for (int i = 0; i < 5; ++i) err = std::max(err, std::abs(d1[i] - expect1[i]));
  return err <= 1e-12;
}

}  // namespace

int cmd_selftest(const CommandOptions& opt) {
  try {
    select_kernel_or_throw(opt.kernel);
  } catch (const Error& e) {
    return report_config_error("selftest", opt, e);
  }

  bool all_pass = true;
  auto line = [&all_pass](const std::string& name, bool pass, const std::string& detail) {
    all_pass = all_pass && pass;
    std::cout << "selftest: " << name << ": " << (pass ? "pass" : "FAIL")
              << (detail.empty() ? "" : " (" + detail + ")") << "\n";
  };

  const std::vector<int> dims{1, 2, 3, 4};
  const IdentitySweepReport identity = sigma_det_identity_sweep(dims, 200, opt.seed, 1e-10);
  {
    std::ostringstream d;
    d << identity.instances << " instances, max rel " << identity.max_rel_error;
    line("sigma/det identity", identity.pass, d.str());
  }

  const GradientOracleReport gradient = gradient_fd_oracle(100, 4, opt.seed + 1, 1e-6);
  {
    std::ostringstream d;
    d << gradient.instances << " instances, max rel " << gradient.max_rel_error;
    line("gradient oracle", gradient.pass, d.str());
  }

  const std::vector<double> lambda_prime{1.0, 2.0, 3.0};
  const std::vector<double> a_vec{0.6, -1.3, 0.9};
  const std::vector<double> a_values{1e2, 1e3, 1e4};
  const std::vector<double> tau_values{1.0, 0.25};
  const ArrowAsymptoticsReport arrow =
      arrow_asymptotics_check(lambda_prime, a_vec, a_values, tau_values);
  {
    std::ostringstream d;
    d << "deviation slope " << arrow.deviation_slope;
    line("eigenvalue asymptotics", arrow.pass, d.str());
  }

  const EquivalenceReport equiv = kernel_equivalence_check(opt.seed + 2, 1e-11);
  {
    std::ostringstream d;
    d << equiv.compared << ", " << equiv.batches << " batches, max abs " << equiv.max_abs_error;
    line("kernel equivalence", equiv.pass, d.str());
  }

  line("stencil weights", stencil_weight_check(), "");

  return all_pass ? kExitSuccess : kExitVerification;
}

}  // namespace slg

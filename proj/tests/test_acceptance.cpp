// Acceptance gate: one line per criterion, nonzero exit when any fails.
// Library checks run in-process; the gate and determinism criteria drive the
// CLI binary as a subprocess.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "slg/barriers.hpp"
#include "slg/config.hpp"
#include "slg/fields.hpp"
#include "slg/kernels.hpp"
#include "slg/solver.hpp"
#include "slg/spectral.hpp"
#include "slg/verify.hpp"

namespace fs = std::filesystem;
using namespace slg;

namespace {

constexpr double kPi = std::numbers::pi;

int g_failures = 0;

void line(int k, bool pass, const std::string& detail) {
  if (!pass) ++g_failures;
  std::cout << "acceptance " << k << ": " << (pass ? "pass" : "FAIL")
            << (detail.empty() ? "" : " (" + detail + ")") << "\n";
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

BoundaryPair constant_pair(int n, double q) {
  PotentialSpec p;
  p.n = n;
  p.quadratic = SymmetricMatrix(n);
  for (int i = 0; i < n; ++i) p.quadratic.at(i, i) = q;
  return BoundaryPair{p, p};
}

// The shipped perturbed n=1 instance: Q = 3 with opposing 0.05 cosines.
BoundaryPair perturbed_pair() {
  BoundaryPair pair = constant_pair(1, 3.0);
  TrigMode mode;
  mode.k = {1, 0, 0};
  mode.cos_amp = 0.05;
  pair.u0.modes.push_back(mode);
  mode.cos_amp = -0.05;
  pair.u1.modes.push_back(mode);
  return pair;
}

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

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path tmp_dir() {
  const fs::path dir(SLG_TEST_TMP);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args, const std::string& tag) {
  const fs::path sink = tmp_dir() / (tag + ".log");
  const std::string cmd =
      std::string(SLG_BIN_PATH) + " " + args + " > " + sink.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  return (raw >= 0 && WIFEXITED(raw)) ? WEXITSTATUS(raw) : -1;
}

std::string format(double x) {
  std::ostringstream os;
  os.precision(3);
  os << x;
  return os.str();
}

// 1. The two independent operator evaluations agree on random instances.
void criterion_identity() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<int> dims{1, 2, 3, 4};
  const IdentitySweepReport rep = sigma_det_identity_sweep(dims, 1000, 20260814u, 1e-10);
  const double sec = seconds_since(t0);
  const bool pass = rep.pass && rep.instances == 4000 && sec < 10.0;
  line(1, pass,
       std::to_string(rep.instances) + " instances, max rel " + format(rep.max_rel_error) +
           ", " + format(sec) + " s");
}

// 2. Gradient oracle plus a finite-difference probe of the linearization.
void criterion_gradient() {
  const GradientOracleReport grad = gradient_fd_oracle(100, 4, 4242u, 1e-6);

  const CylinderGrid grid{TorusGrid{2, 8}, 9, 0.5};
  const ChiField chi = assemble_chi(constant_pair(2, 2.0), grid);
  const PhaseBranch branch = select_branch(2);
  const BarrierPair barriers = build_barriers(chi, branch);

  std::mt19937 rng(99u);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  CylinderField v = CylinderField::zeros(grid);
  CylinderField w = CylinderField::zeros(grid);
  for (int it = 1; it + 1 < grid.time_points; ++it)
    for (long s = 0; s < grid.space.size(); ++s) {
      v.at(it, s) = 0.05 * unit(rng);
      w.at(it, s) = unit(rng);
    }

  const CylinderField jw = linearize_apply(v, chi, w);
  // Small step: the probe direction is rough, so the cubic remainder term
  // dominates the difference error well before rounding does.
  const double eps = 1e-6;
  CylinderField vp = v;
  CylinderField vm = v;
  for (std::size_t i = 0; i < v.values.size(); ++i) {
    vp.values[i] += eps * w.values[i];
    vm.values[i] -= eps * w.values[i];
  }
  const CylinderField rp = residual_field(vp, chi, 1.0, barriers, branch);
  const CylinderField rm = residual_field(vm, chi, 1.0, barriers, branch);
  double scale = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < jw.values.size(); ++i) {
    scale = std::max(scale, std::abs(jw.values[i]));
    const double fd = (rp.values[i] - rm.values[i]) / (2.0 * eps);
    worst = std::max(worst, std::abs(fd - jw.values[i]));
  }
  const double rel = worst / scale;

  const bool pass = grad.pass && rel <= 1e-6;
  line(2, pass,
       "gradient max rel " + format(grad.max_rel_error) + ", linearization FD rel " +
           format(rel));
}

// 3. Arrow-matrix eigenvalue asymptotics table.
void criterion_asymptotics() {
  const std::vector<double> lambda_prime{1.0, 2.0, 3.0};
  const std::vector<double> a_vec{2.0, -1.0, 0.5};
  const std::vector<double> a_values{1e2, 1e3, 1e4};
  const std::vector<double> tau_values{1.0, 0.25};
  const ArrowAsymptoticsReport rep =
      arrow_asymptotics_check(lambda_prime, a_vec, a_values, tau_values);
  line(3, rep.pass,
       "deviation slope " + format(rep.deviation_slope) + ", corner ok " +
           (rep.corner_ok ? "yes" : "no"));
}

// 4. Closed-form constant-Hessian solve on the default grid.
void criterion_closed_form() {
  const CylinderGrid grid{TorusGrid{2, 16}, 33, 1.0};
  const ChiField chi = assemble_chi(constant_pair(2, 2.0), grid);
  const PhaseBranch branch = select_branch(2);
  const BarrierPair barriers = build_barriers(chi, branch);

  // Tight linear solves: the iteration count measures Newton's quadratic
  // contraction from the subsolution, not the inexact-solve trade-off.
  NewtonSettings settings;
  settings.residual_tolerance = 1e-8;
  settings.adaptive_forcing = false;
  settings.linear_reduction = 1e-12;
  CylinderField v = barriers.v_sub;
  const NewtonRecord rec = newton_solve(v, chi, 1.0, barriers, branch, settings);

  const double mu = 4.0 / 3.0;
  double pointwise = 0.0;
  for (int it = 0; it < grid.time_points; ++it) {
    const double t = grid.time_of(it);
    const double want = 0.5 * mu * t * (t - 1.0);
    for (long s = 0; s < grid.space.size(); ++s)
      pointwise = std::max(pointwise, std::abs(v.at(it, s) - want));
  }
  const double angle_gap = std::abs(std::atan(mu) + 2.0 * std::atan(2.0) - kPi);

  const bool pass = rec.status == NewtonStatus::kConverged && rec.iterations <= 3 &&
                    pointwise <= 1e-8 && angle_gap <= 1e-12;
  line(4, pass,
       std::to_string(rec.iterations) + " iterations, pointwise " + format(pointwise) +
           ", angle gap " + format(angle_gap));
}

// 5. Linear-in-tau sup law, factor-4 Cauchy gaps, geodesic extraction bound.
void criterion_tau_sweep() {
  const auto t0 = std::chrono::steady_clock::now();
  ProblemSetup setup;
  setup.space = TorusGrid{2, 16};
  setup.time_points = 33;
  setup.pair = constant_pair(2, 2.0);
  setup.branch = select_branch(2);

  ContinuationSchedule schedule;
  schedule.tau_sequence = {1.0, 0.25, 0.0625, 0.015625};
  const SweepResult sweep = run_tau_sweep(setup, schedule, NewtonSettings{});

  bool sup_ok = sweep.success && sweep.records.size() == 4;
  double worst_sup = 0.0;
  if (sup_ok)
    for (const TauRecord& rec : sweep.records) {
      const double dev = std::abs(rec.sup_vhat - rec.tau / 6.0);
      worst_sup = std::max(worst_sup, dev);
      sup_ok = sup_ok && dev <= 1e-8;
    }

  bool gaps_ok = sweep.cauchy_gaps.size() == 3;
  double worst_ratio = 0.0;
  if (gaps_ok)
    for (std::size_t k = 0; k + 1 < sweep.cauchy_gaps.size(); ++k) {
      const double ratio = sweep.cauchy_gaps[k] / sweep.cauchy_gaps[k + 1];
      worst_ratio = std::max(worst_ratio, std::abs(ratio - 4.0));
      gaps_ok = gaps_ok && std::abs(ratio - 4.0) <= 0.2;
    }

  bool extract_ok = false;
  double variation = 0.0;
  if (sweep.success) {
    const ExtractedGeodesic geo = extract_geodesic(sweep, *setup.pair);
    variation = geo.time_variation;
    extract_ok = variation <= geo.tau_min / 6.0 + 1e-8;
  }

  const double sec = seconds_since(t0);
  const bool pass = sup_ok && gaps_ok && extract_ok && sec < 60.0;
  line(5, pass,
       "sup dev " + format(worst_sup) + ", gap ratio dev " + format(worst_ratio) +
           ", variation " + format(variation) + ", " + format(sec) + " s");
}

// 6. Determinant-oracle refinement order on the perturbed n=1 instance, with
// the barrier sandwich on every accepted iterate and convexity at the target.
void criterion_refinement() {
  const BoundaryPair pair = perturbed_pair();
  const PhaseBranch branch = select_branch(1);
  const std::vector<int> grids{16, 32, 64};
  // One fine time grid for every level so the measured order isolates the
  // spatial discretization.
  const int time_points = 4 * 64 + 1;

  std::vector<double> spacings, deviations;
  bool solves_ok = true;
  bool sandwich_ok = true;
  bool convex_ok = true;
  int transient = 0;
  for (int N : grids) {
    const CylinderGrid grid{TorusGrid{1, N}, time_points, 1.0};
    const ChiField chi = assemble_chi(pair, grid);
    const BarrierPair barriers = build_barriers(chi, branch);
    CylinderField v = barriers.v_sub;
    const ZetaPath path =
        run_zeta_path(v, chi, barriers, branch, ContinuationSchedule{}, NewtonSettings{});
    solves_ok = solves_ok && path.success;
    for (const ZetaStepRecord& step : path.steps) {
      sandwich_ok = sandwich_ok && step.newton.sandwich.ok;
      transient += step.newton.transient_sandwich_violations;
    }
    const MongeAmpereReport oracle = monge_ampere_oracle(v, pair, 1.0);
    spacings.push_back(1.0 / N);
    deviations.push_back(oracle.max_deviation);
    convex_ok = convex_ok && convexity_check(v, chi).pass;
  }

  const double order = loglog_slope(spacings, deviations);
  const bool pass =
      solves_ok && sandwich_ok && convex_ok && std::abs(order - 2.0) <= 0.3;
  line(6, pass,
       "order " + format(order) + ", sandwich " + (sandwich_ok ? "ok" : "violated") +
           ", transient rejections " + std::to_string(transient) + ", convexity " +
           (convex_ok ? "ok" : "failed"));
}

// 7. The C1 norm across each shipped instance's tau schedule stays within
// twice its tau = 1 value.
void criterion_c1_monitor() {
  const std::vector<std::string> names{"constant_hessian_n2.cfg", "trivial_same_endpoints.cfg",
                                       "perturbed_n1.cfg", "negative_branch_n2.cfg",
                                       "example_annotated.cfg"};
  bool pass = true;
  double worst = 0.0;
  std::string worst_name = "none";
  for (const std::string& name : names) {
    const RunConfig cfg = parse_config_file(std::string(SLG_CONFIG_DIR) + "/" + name);
    ProblemSetup setup = cfg.setup();
    if (setup.pair) {
      const PhaseAdmissibilityReport adm =
          phase_admissibility_report(*setup.pair, setup.branch, setup.space);
      if (adm.use_mirror) {
        setup.pair->u0 = negated_potential(setup.pair->u0);
        setup.pair->u1 = negated_potential(setup.pair->u1);
        setup.negated = true;
      }
    }
    const SweepResult sweep = run_tau_sweep(setup, cfg.schedule, cfg.newton);
    if (!sweep.success || sweep.records.empty() || sweep.records.front().tau != 1.0) {
      pass = false;
      worst_name = name;
      break;
    }
    const double base = sweep.records.front().c1_norm;
    for (const TauRecord& rec : sweep.records) {
      const double ratio = rec.c1_norm / base;
      if (ratio > worst) {
        worst = ratio;
        worst_name = name;
      }
      pass = pass && rec.c1_norm <= 2.0 * base + 1e-12;
    }
  }
  line(7, pass, "worst ratio " + format(worst) + " on " + worst_name);
}

// 8. Exit-code gate for the inadmissible and mirrored instances.
void criterion_gate() {
  const std::string dir(SLG_CONFIG_DIR);
  const int bad = run_cli("solve --config " + dir + "/inadmissible_n2.cfg --out " +
                              (tmp_dir() / "gate_bad").string(),
                          "gate_bad");
  const int mirrored = run_cli("solve --config " + dir + "/negative_branch_n2.cfg --out " +
                                   (tmp_dir() / "gate_neg").string(),
                               "gate_neg");
  const bool pass = bad == 3 && mirrored == 0;
  line(8, pass,
       "inadmissible exit " + std::to_string(bad) + ", mirrored exit " +
           std::to_string(mirrored));
}

// 9. Byte-identical CSV artifacts across reruns of cmd_solve.
void criterion_determinism() {
  bool pass = true;
  std::string detail;
  for (const std::string cfg : {"perturbed_n1.cfg", "example_annotated.cfg"}) {
    const fs::path a = tmp_dir() / ("det_a_" + cfg);
    const fs::path b = tmp_dir() / ("det_b_" + cfg);
    const std::string base =
        "solve --config " + std::string(SLG_CONFIG_DIR) + "/" + cfg + " --out ";
    const int ca = run_cli(base + a.string(), "det_a");
    const int cb = run_cli(base + b.string(), "det_b");
    if (ca != 0 || cb != 0) {
      pass = false;
      detail = cfg + " exited " + std::to_string(ca) + "/" + std::to_string(cb);
      break;
    }
    int compared = 0;
    for (const fs::directory_entry& entry : fs::directory_iterator(a)) {
      if (entry.path().extension() != ".csv") continue;
      ++compared;
      const std::string lhs = slurp(entry.path());
      const std::string rhs = slurp(b / entry.path().filename());
      if (lhs.empty() || lhs != rhs) {
        pass = false;
        detail = cfg + ": " + entry.path().filename().string() + " differs";
      }
    }
    if (compared == 0) {
      pass = false;
      detail = cfg + ": no CSV artifacts found";
    }
    if (!pass) break;
    detail += (detail.empty() ? "" : "; ") + cfg + " " + std::to_string(compared) + " files";
  }
  line(9, pass, detail);
}

}  // namespace

int main() {
  criterion_identity();
  criterion_gradient();
  criterion_asymptotics();
  criterion_closed_form();
  criterion_tau_sweep();
  criterion_refinement();
  criterion_c1_monitor();
  criterion_gate();
  criterion_determinism();
  if (g_failures > 0) {
    std::cout << g_failures << " acceptance criteria failed\n";
    return 1;
  }
  std::cout << "all acceptance criteria passed\n";
  return 0;
}

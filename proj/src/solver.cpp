#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <sstream>
#include <utility>
#include <vector>

#include "slg/errors.hpp"
#include "slg/kernels.hpp"
#include "slg/solver.hpp"

namespace slg {
namespace {

constexpr double kEllipticityFloor = 1e-12;
constexpr double kArmijo = 1e-4;

// Interior residual with everything the line search wants to reuse.
struct Eval {
  std::vector<double> r;  // (it-1)*S + s ordering
  double norm = 0.0;
  long worst = 0;  // argmax |r|
  double min_eigenvalue = 0.0;
  double max_abs_eigenvalue = 0.0;
};

Eval evaluate_residual(const CylinderField& v, const ChiField& chi, double zeta,
                       const BarrierPair& barriers, const PhaseBranch& branch) {
  PhaseFieldResult ph = phase_field(v, chi);
  Eval e;
  e.min_eigenvalue = ph.min_eigenvalue;
  e.max_abs_eigenvalue = ph.max_abs_eigenvalue;
  e.r.resize(ph.phase.size());
  const double wz = 1.0 - zeta;
  for (std::size_t k = 0; k < ph.phase.size(); ++k) {
    const double target = wz * barriers.sub_phase[k] + zeta * branch.big_theta;
    const double rk = ph.phase[k] - target;
    e.r[k] = rk;
    if (std::fabs(rk) > e.norm) {
      e.norm = std::fabs(rk);
      e.worst = static_cast<long>(k);
    }
  }
  return e;
}

std::string describe_failure(const char* stage, double value, const NewtonRecord& rec) {
  std::ostringstream os;
  os << stage << " " << value << ": " << to_string(rec.status) << " after " << rec.iterations
     << " iterations, residual " << rec.final_residual;
  return os.str();
}

}  // namespace

void ContinuationSchedule::validate() const {
  if (zeta_steps.empty() || zeta_steps.front() != 0.0 || zeta_steps.back() != 1.0)
    throw ConfigError("zeta path must start at 0 and end at 1");
  for (std::size_t i = 1; i < zeta_steps.size(); ++i)
    if (!(zeta_steps[i] > zeta_steps[i - 1]))
      throw ConfigError("zeta path must be strictly increasing");
  if (tau_sequence.empty()) throw ConfigError("tau sequence is empty");
  for (double tau : tau_sequence)
    if (!(tau > 0.0) || tau > 1.0) throw ConfigError("tau values must lie in (0, 1]");
  for (std::size_t i = 1; i < tau_sequence.size(); ++i)
    if (!(tau_sequence[i] < tau_sequence[i - 1]))
      throw ConfigError("tau sequence must be strictly decreasing");
}

const char* to_string(NewtonStatus s) {
  switch (s) {
    case NewtonStatus::kConverged: return "converged";
    case NewtonStatus::kMaxIterations: return "max_iterations";
    case NewtonStatus::kStepCollapse: return "step_collapse";
    case NewtonStatus::kLinearFailure: return "linear_failure";
    case NewtonStatus::kSandwichViolation: return "sandwich_violation";
    case NewtonStatus::kEllipticityLoss: return "ellipticity_loss";
  }
  return "unknown";
}

double norm_inf_interior(const CylinderField& f) {
  double m = 0.0;
  for (int it = 1; it + 1 < f.grid.time_points; ++it)
    for (long s = 0; s < f.grid.space.size(); ++s) m = std::max(m, std::fabs(f.at(it, s)));
  return m;
}

CylinderField residual_field(const CylinderField& v, const ChiField& chi, double zeta,
                             const BarrierPair& barriers, const PhaseBranch& branch) {
  Eval e = evaluate_residual(v, chi, zeta, barriers, branch);
  CylinderField out = CylinderField::zeros(chi.grid);
  const long S = chi.grid.space.size();
  for (int it = 1; it + 1 < chi.grid.time_points; ++it)
    for (long s = 0; s < S; ++s)
      out.at(it, s) = e.r[static_cast<std::size_t>(it - 1) * S + s];
  return out;
}

CoefficientField gradient_coefficients(const CylinderField& v, const ChiField& chi) {
  const CylinderGrid& grid = chi.grid;
  const int m = chi.m;
  const int plen = m * (m + 1) / 2;
  CoefficientField out;
  out.grid = grid;
  out.m = m;
  out.packed.resize(static_cast<std::size_t>(grid.interior_count()) * plen);

  const kernels::Ops& ops = kernels::active();
  const long S = grid.space.size();
  std::vector<double> a(static_cast<std::size_t>(plen) * kernels::kWidth);
  std::vector<double> g(static_cast<std::size_t>(plen) * kernels::kWidth);
  for (int it = 1; it + 1 < grid.time_points; ++it) {
    for (long s0 = 0; s0 < S; s0 += kernels::kWidth) {
      const int count = static_cast<int>(std::min<long>(kernels::kWidth, S - s0));
      assemble_scaled_hessian_block(v, chi, it, s0, count, a.data());
      ops.inv_iaa_batch(m, a.data(), g.data());
      for (int l = 0; l < count; ++l) {
        double* dst =
            out.packed.data() +
            (static_cast<std::size_t>(it - 1) * S + static_cast<std::size_t>(s0) + l) * plen;
        for (int e = 0; e < plen; ++e) dst[e] = g[static_cast<std::size_t>(e) * kernels::kWidth + l];
      }
    }
  }
  return out;
}

CylinderField apply_linearized(const CoefficientField& coeffs, const ChiField& chi,
                               const CylinderField& w) {
  const CylinderGrid& grid = chi.grid;
  const int m = coeffs.m;
  const int plen = m * (m + 1) / 2;
  const long S = grid.space.size();
  CylinderField out = CylinderField::zeros(grid);
  for (int it = 1; it + 1 < grid.time_points; ++it) {
    for (long s = 0; s < S; ++s) {
      // D^2 w alone: the chi part of the scaled Hessian does not depend on w.
      const SymmetricMatrix full = scaled_hessian_at(w, chi, it, s);
      const SymmetricMatrix base = chi.at(it, s);
      const double* f =
          coeffs.packed.data() + (static_cast<std::size_t>(it - 1) * S + s) * plen;
      double acc = 0.0;
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j <= i; ++j) {
          const double sij = full(i, j) - base(i, j);
          const double wgt = i == j ? 1.0 : 2.0;
          acc += wgt * f[SymmetricMatrix::index(i, j)] * sij;
        }
      }
      out.at(it, s) = acc;
    }
  }
  return out;
}

CylinderField linearize_apply(const CylinderField& v, const ChiField& chi,
                              const CylinderField& w) {
  return apply_linearized(gradient_coefficients(v, chi), chi, w);
}

NewtonRecord newton_solve(CylinderField& v, const ChiField& chi, double zeta,
                          const BarrierPair& barriers, const PhaseBranch& branch,
                          const NewtonSettings& settings) {
  NewtonRecord rec;
  Eval cur = evaluate_residual(v, chi, zeta, barriers, branch);
  rec.initial_residual = cur.norm;

  const auto note_accepted = [&](const Eval& e) {
    const double g = 1.0 / (1.0 + e.max_abs_eigenvalue * e.max_abs_eigenvalue);
    rec.min_gradient_eigenvalue = std::min(rec.min_gradient_eigenvalue, g);
    rec.min_matrix_eigenvalue = std::min(rec.min_matrix_eigenvalue, e.min_eigenvalue);
    return g;
  };
  note_accepted(cur);

  CylinderField dx = CylinderField::zeros(chi.grid);
  CylinderField rhs = CylinderField::zeros(chi.grid);
  CylinderField trial = v;
  const long S = chi.grid.space.size();

  // Forcing-term state (Eisenstat-Walker choice 2 with an oversolve guard).
  constexpr double kEtaMax = 1e-2;
  constexpr double kEtaFloor = 1e-5;
  constexpr double kEtaSafety = 0.9;
  double prev_norm = -1.0;
  double eta_prev = kEtaMax;

  for (;;) {
    if (cur.norm <= settings.residual_tolerance) {
      rec.status = NewtonStatus::kConverged;
      break;
    }
    if (rec.iterations >= settings.max_iterations) {
      rec.status = NewtonStatus::kMaxIterations;
      break;
    }

    double reduction = settings.linear_reduction;
    if (settings.adaptive_forcing) {
      double eta = kEtaMax;
      if (prev_norm > 0.0) {
        const double ratio = cur.norm / prev_norm;
        eta = kEtaSafety * ratio * ratio;
        // Do not tighten faster than the square of the previous term.
        const double carry = kEtaSafety * eta_prev * eta_prev;
        if (carry > 0.1) eta = std::max(eta, carry);
      }
      // The absolute linear residual only needs to sit below the outer
      // convergence test.
      eta = std::max(eta, 0.5 * settings.residual_tolerance / cur.norm);
      reduction = std::min(kEtaMax, std::max(eta, kEtaFloor));
      eta_prev = reduction;
      prev_norm = cur.norm;
    }

    const CoefficientField coeffs = gradient_coefficients(v, chi);
    for (int it = 1; it + 1 < chi.grid.time_points; ++it)
      for (long s = 0; s < S; ++s)
        rhs.at(it, s) = -cur.r[static_cast<std::size_t>(it - 1) * S + s];
    const LinearSolveStats ls = solve_linearized(coeffs, chi, rhs, &dx,
                                                 reduction,
                                                 settings.linear_max_iterations);
    rec.linear_iterations += ls.iterations;
    if (!ls.converged) {
      rec.status = NewtonStatus::kLinearFailure;
      break;
    }

    const auto make_trial = [&](double alpha) {
      for (std::size_t i = 0; i < trial.values.size(); ++i)
        trial.values[i] = v.values[i] + alpha * dx.values[i];
    };

    // Backtracking on the sup norm.
    double alpha = 1.0;
    make_trial(alpha);
    Eval te = evaluate_residual(trial, chi, zeta, barriers, branch);
    bool accepted = te.norm <= (1.0 - kArmijo * alpha) * cur.norm;
    bool have_rejected = false;
    double rejected_alpha = 0.0;
    Eval rejected;
    while (!accepted) {
      rec.damped = true;
      if (!check_sandwich(trial, barriers).ok) ++rec.transient_sandwich_violations;
      rejected = std::move(te);
      rejected_alpha = alpha;
      have_rejected = true;
      alpha *= settings.backtrack_factor;
      if (alpha < settings.min_step) break;
      make_trial(alpha);
      te = evaluate_residual(trial, chi, zeta, barriers, branch);
      accepted = te.norm <= (1.0 - kArmijo * alpha) * cur.norm;
    }
    if (!accepted) {
      rec.status = NewtonStatus::kStepCollapse;
      break;
    }

    double best_alpha = alpha;
    Eval best = std::move(te);

    // Secant polish: with one rejected and one accepted step in hand, the
    // signed residual at the worst node is a cheap 1-d model of the
    // overshoot. A couple of refinements usually land much closer to the
    // curve than plain halving.
    if (have_rejected && settings.polish_evaluations > 0) {
      const long wnode = best.worst;
      double a1 = rejected_alpha, h1 = rejected.r[static_cast<std::size_t>(wnode)];
      double a2 = best_alpha, h2 = best.r[static_cast<std::size_t>(wnode)];
      for (int k = 0; k < settings.polish_evaluations; ++k) {
        const double denom = h2 - h1;
        if (!std::isfinite(denom) || std::fabs(denom) < 1e-300) break;
        const double an = a2 - h2 * (a2 - a1) / denom;
        if (!std::isfinite(an) || !(an > 0.0) || an > 1.0) break;
        if (std::fabs(an - a2) <= 1e-12 * (1.0 + std::fabs(a2))) break;
        make_trial(an);
        Eval pe = evaluate_residual(trial, chi, zeta, barriers, branch);
        const double hn = pe.r[static_cast<std::size_t>(wnode)];
        if (pe.norm < best.norm) {
          best_alpha = an;
          best = std::move(pe);
        }
        a1 = a2;
        h1 = h2;
        a2 = an;
        h2 = hn;
      }
    }

    make_trial(best_alpha);
    std::swap(v.values, trial.values);
    ++rec.iterations;
    cur = std::move(best);

    const double grad_eig = note_accepted(cur);
    if (grad_eig < kEllipticityFloor) {
      rec.status = NewtonStatus::kEllipticityLoss;
      break;
    }
    const SandwichReport sw = check_sandwich(v, barriers);
    if (!sw.ok) {
      rec.sandwich = sw;
      rec.status = NewtonStatus::kSandwichViolation;
      break;
    }
  }

  rec.final_residual = cur.norm;
  rec.sandwich = check_sandwich(v, barriers);
  return rec;
}

ZetaPath run_zeta_path(CylinderField& v, const ChiField& chi, const BarrierPair& barriers,
                       const PhaseBranch& branch, const ContinuationSchedule& schedule,
                       const NewtonSettings& settings) {
  schedule.validate();
  ZetaPath path;
  v = barriers.v_sub;
  CylinderField good = v;
  double prev = 0.0;

  struct Item {
    double zeta;
    int depth;
    bool inserted;
  };
  std::vector<Item> stack;
  for (auto it = schedule.zeta_steps.rbegin(); it != schedule.zeta_steps.rend(); ++it)
    stack.push_back(Item{*it, 0, false});

  while (!stack.empty()) {
    const Item item = stack.back();
    stack.pop_back();
    NewtonRecord rec = newton_solve(v, chi, item.zeta, barriers, branch, settings);
    path.steps.push_back(ZetaStepRecord{item.zeta, rec, item.inserted});
    if (rec.status == NewtonStatus::kConverged) {
      good = v;
      prev = item.zeta;
      continue;
    }
    if (item.depth >= 8) {
      path.failure = describe_failure("zeta", item.zeta, rec) + " (bisection budget exhausted)";
      return path;
    }
    const double mid = 0.5 * (prev + item.zeta);
    if (!(mid > prev) || !(mid < item.zeta)) {
      path.failure = describe_failure("zeta", item.zeta, rec) + " (interval collapsed)";
      return path;
    }
    v = good;
    ++path.bisections;
    stack.push_back(Item{item.zeta, item.depth + 1, true});
    stack.push_back(Item{mid, item.depth + 1, true});
  }
  path.success = true;
  return path;
}

ChiField ProblemSetup::make_chi(double tau) const {
  if (pair.has_value() == chi_matrix.has_value())
    throw ConfigError("problem setup needs exactly one of boundary pair or synthetic chi");
  CylinderGrid grid;
  grid.space = space;
  grid.time_points = time_points;
  grid.tau = tau;
  grid.validate();
  if (pair) return assemble_chi(*pair, grid);
  return synthetic_chi(*chi_matrix, grid);
}

namespace {

TauRecord solve_one_tau(const ProblemSetup& setup, const ContinuationSchedule& schedule,
                        const NewtonSettings& settings, double tau,
                        const CylinderField* warm) {
  TauRecord r;
  r.tau = tau;
  r.attempted = true;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const ChiField chi = setup.make_chi(tau);
    const BarrierPair barriers = build_barriers(chi, setup.branch);
    r.delta = barriers.delta;
    r.lambda_sub = barriers.lambda_sub;
    r.lambda_super = barriers.lambda_super;

    CylinderField v = CylinderField::zeros(chi.grid);
    bool solved = false;
    if (warm != nullptr) {
      v = *warm;
      v.grid = chi.grid;  // same lattice, different tau stamp
      NewtonRecord nr = newton_solve(v, chi, 1.0, barriers, setup.branch, settings);
      r.path.steps.push_back(ZetaStepRecord{1.0, nr, false});
      solved = nr.status == NewtonStatus::kConverged;
      r.path.success = solved;
    }
    if (!solved) {
      ZetaPath p = run_zeta_path(v, chi, barriers, setup.branch, schedule, settings);
      for (auto& s : p.steps) r.path.steps.push_back(std::move(s));
      r.path.success = p.success;
      r.path.bisections += p.bisections;
      r.path.failure = p.failure;
    }

    if (r.path.success) {
      r.vhat = std::move(v);
      r.sup_vhat = norm_inf_interior(r.vhat);
      r.sup_gradient = r.vhat.max_abs_gradient();
      r.c1_norm = r.sup_vhat + r.sup_gradient;
      r.final_sandwich = check_sandwich(r.vhat, barriers);
      r.normal_derivatives = check_normal_derivatives(r.vhat, barriers);
      r.min_matrix_eigenvalue = phase_field(r.vhat, chi).min_eigenvalue;
      r.success = r.final_sandwich.ok;
      if (!r.success) r.failure = "solution left the barrier sandwich";
    } else {
      r.failure = r.path.failure.empty() ? "continuation failed" : r.path.failure;
    }
  } catch (const BarrierError& e) {
    r.failure = e.what();
  } catch (const SolverError& e) {
    r.failure = e.what();
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace

SweepResult run_tau_sweep(const ProblemSetup& setup, const ContinuationSchedule& schedule,
                          const NewtonSettings& settings, int jobs) {
  schedule.validate();
  const std::vector<double>& taus = schedule.tau_sequence;
  SweepResult out;
  out.records.resize(taus.size());
  for (std::size_t k = 0; k < taus.size(); ++k) out.records[k].tau = taus[k];

  const int effective_jobs =
      schedule.warm_start ? 1 : std::clamp<int>(jobs, 1, static_cast<int>(taus.size()));

  if (effective_jobs <= 1) {
    const CylinderField* warm = nullptr;
    for (std::size_t k = 0; k < taus.size(); ++k) {
      out.records[k] = solve_one_tau(setup, schedule, settings, taus[k],
                                     schedule.warm_start ? warm : nullptr);
      if (!out.records[k].success) break;
      warm = &out.records[k].vhat;
    }
  } else {
    // Waves of independent solves; merge preserves schedule order, and the
    // sequential gate is re-applied afterwards so output matches jobs = 1.
    std::size_t k0 = 0;
    bool stop = false;
    while (k0 < taus.size() && !stop) {
      const std::size_t k1 = std::min(taus.size(), k0 + static_cast<std::size_t>(effective_jobs));
      std::vector<std::future<TauRecord>> futs;
      for (std::size_t k = k0; k < k1; ++k) {
        futs.push_back(std::async(std::launch::async, [&, k] {
          return solve_one_tau(setup, schedule, settings, taus[k], nullptr);
        }));
      }
      std::exception_ptr first_error;
      for (std::size_t i = 0; i < futs.size(); ++i) {
        try {
          out.records[k0 + i] = futs[i].get();
        } catch (...) {
          if (!first_error) first_error = std::current_exception();
        }
      }
      if (first_error) std::rethrow_exception(first_error);
      for (std::size_t k = k0; k < k1; ++k) {
        if (!out.records[k].success) {
          stop = true;
          // Discard results past the first failure: the sequential gate
          // would never have attempted them.
          for (std::size_t j = k + 1; j < taus.size(); ++j) {
            out.records[j] = TauRecord{};
            out.records[j].tau = taus[j];
          }
          break;
        }
      }
      k0 = k1;
    }
  }

  for (std::size_t k = 0; k + 1 < out.records.size(); ++k) {
    const TauRecord& a = out.records[k];
    const TauRecord& b = out.records[k + 1];
    if (!a.success || !b.success) break;
    double gap = 0.0;
    for (std::size_t i = 0; i < a.vhat.values.size(); ++i)
      gap = std::max(gap, std::fabs(a.vhat.values[i] - b.vhat.values[i]));
    out.cauchy_gaps.push_back(gap);
  }

  out.success = true;
  for (const TauRecord& r : out.records) {
    if (!r.attempted || !r.success) {
      out.success = false;
      if (out.failure_reason.empty())
        out.failure_reason = r.attempted ? r.failure : "not attempted";
      if (r.attempted && !r.success) break;
    }
  }
  return out;
}

ExtractedGeodesic extract_geodesic(const SweepResult& sweep, const BoundaryPair& pair) {
  const TauRecord* last = nullptr;
  for (const TauRecord& r : sweep.records)
    if (r.success) last = &r;
  if (last == nullptr) throw SolverError("no successful tau solve to extract a geodesic from");

  const CylinderGrid& grid = last->vhat.grid;
  const SampledPotential s0 = sample_potential(pair.u0, grid.space);
  const SampledPotential s1 = sample_potential(pair.u1, grid.space);
  ExtractedGeodesic out;
  out.tau_min = last->tau;
  out.u = CylinderField::zeros(grid);
  for (int it = 0; it < grid.time_points; ++it) {
    const double t = grid.time_of(it);
    for (long s = 0; s < grid.space.size(); ++s)
      out.u.at(it, s) = (1.0 - t) * s0.value[static_cast<std::size_t>(s)] +
                        t * s1.value[static_cast<std::size_t>(s)] + last->vhat.at(it, s);
  }
  for (long s = 0; s < grid.space.size(); ++s) {
    double lo = out.u.at(0, s), hi = lo;
    for (int it = 1; it < grid.time_points; ++it) {
      lo = std::min(lo, out.u.at(it, s));
      hi = std::max(hi, out.u.at(it, s));
    }
    out.time_variation = std::max(out.time_variation, hi - lo);
  }
  return out;
}

}  // namespace slg

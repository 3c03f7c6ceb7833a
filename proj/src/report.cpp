#include <cstdio>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "slg/errors.hpp"
#include "slg/kernels.hpp"
#include "slg/report.hpp"

namespace slg {
namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open output file: " + path);
  return out;
}

json json_sandwich(const SandwichReport& s) {
  return json{{"ok", s.ok},
              {"lower_clearance", s.lower_clearance},
              {"upper_clearance", s.upper_clearance},
              {"worst_node", s.worst_node}};
}

json json_newton(const NewtonRecord& r) {
  return json{{"status", to_string(r.status)},
              {"iterations", r.iterations},
              {"initial_residual", r.initial_residual},
              {"final_residual", r.final_residual},
              {"min_gradient_eigenvalue", r.min_gradient_eigenvalue},
              {"min_matrix_eigenvalue", r.min_matrix_eigenvalue},
              {"linear_iterations", r.linear_iterations},
              {"damped", r.damped},
              {"transient_sandwich_violations", r.transient_sandwich_violations}};
}

json json_tau_record(const TauRecord& r) {
  json steps = json::array();
  for (const ZetaStepRecord& s : r.path.steps) {
    json j = json_newton(s.newton);
    j["zeta"] = s.zeta;
    j["inserted_by_bisection"] = s.inserted_by_bisection;
    steps.push_back(std::move(j));
  }
  json out{{"tau", r.tau},
           {"attempted", r.attempted},
           {"success", r.success},
           {"wall_seconds", r.wall_seconds}};
  if (r.attempted) {
    out["delta"] = r.delta;
    out["lambda_sub"] = r.lambda_sub;
    out["lambda_super"] = r.lambda_super;
    out["zeta_steps"] = std::move(steps);
    out["bisections"] = r.path.bisections;
  }
  if (r.success) {
    out["sup_vhat"] = r.sup_vhat;
    out["sup_gradient"] = r.sup_gradient;
    out["c1_norm"] = r.c1_norm;
    out["min_matrix_eigenvalue"] = r.min_matrix_eigenvalue;
    out["sandwich"] = json_sandwich(r.final_sandwich);
    out["normal_derivatives"] = json{{"within_bounds", r.normal_derivatives.within_bounds},
                                     {"worst_excess", r.normal_derivatives.worst_excess}};
  }
  if (!r.failure.empty()) out["failure"] = r.failure;
  return out;
}

json json_verification(const VerificationBundle& v) {
  json out = json::object();
  if (v.admissibility) {
    const AdmissibilityReport& a = v.admissibility->raw;
    out["admissibility"] = json{{"delta", a.delta},
                                {"admissible", a.admissible},
                                {"mirror_admissible", a.mirror_admissible},
                                {"min_phase", a.min_phase},
                                {"max_phase", a.max_phase},
                                {"instruction", v.admissibility->instruction}};
  }
  if (v.convexity)
    out["convexity"] =
        json{{"min_eigenvalue", v.convexity->min_eigenvalue}, {"pass", v.convexity->pass}};
  if (v.monge_ampere)
    out["monge_ampere"] = json{{"max_deviation", v.monge_ampere->max_deviation},
                               {"worst_node", v.monge_ampere->worst_node},
                               {"bound", v.monge_ampere->bound},
                               {"pass", v.monge_ampere->pass}};
  if (v.energy)
    out["energy"] = json{{"value", v.energy->value},
                         {"min_weight", v.energy->min_weight},
                         {"weight_warning", v.energy->weight_warning}};
  if (v.residual_trend)
    out["residual_trend"] = json{{"taus", v.residual_trend->taus},
                                 {"residual_norms", v.residual_trend->residual_norms},
                                 {"nonincreasing", v.residual_trend->nonincreasing},
                                 {"slope", v.residual_trend->slope},
                                 {"insufficient_data", v.residual_trend->insufficient_data}};
  if (v.arrow)
    out["arrow_asymptotics"] = json{{"a_values", v.arrow->a_values},
                                    {"tau_values", v.arrow->tau_values},
                                    {"small_deviation", v.arrow->small_deviation},
                                    {"corner_rel_error", v.arrow->corner_rel_error},
                                    {"deviation_slope", v.arrow->deviation_slope},
                                    {"slope_ok", v.arrow->slope_ok},
                                    {"corner_ok", v.arrow->corner_ok},
                                    {"pass", v.arrow->pass}};
  if (v.identity_sweep)
    out["sigma_det_identity"] = json{{"instances", v.identity_sweep->instances},
                                     {"max_rel_error", v.identity_sweep->max_rel_error},
                                     {"pass", v.identity_sweep->pass}};
  if (v.gradient_oracle)
    out["gradient_oracle"] = json{{"instances", v.gradient_oracle->instances},
                                  {"max_rel_error", v.gradient_oracle->max_rel_error},
                                  {"pass", v.gradient_oracle->pass}};
  if (!v.notes.empty()) out["notes"] = v.notes;
  return out;
}

json json_config(const RunConfig& cfg) {
  json out{{"source", cfg.source},
           {"n", cfg.n},
           {"grid", cfg.grid_points},
           {"time_grid", cfg.time_points},
           {"zeta_steps", cfg.schedule.zeta_steps},
           {"tau_sequence", cfg.schedule.tau_sequence},
           {"warm_start", cfg.schedule.warm_start},
           {"tolerance", cfg.newton.residual_tolerance},
           {"max_iterations", cfg.newton.max_iterations},
           {"synthetic_chi", cfg.chi_matrix.has_value()}};
  if (cfg.theta_override) out["theta"] = *cfg.theta_override;
  if (cfg.big_theta_override) out["big_theta"] = *cfg.big_theta_override;
  return out;
}

}  // namespace

std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

bool VerificationBundle::any_hard_failure() const {
  if (admissibility && !admissibility->raw.admissible && !admissibility->use_mirror)
    return true;
  if (convexity && !convexity->pass) return true;
  if (monge_ampere && !monge_ampere->pass) return true;
  if (residual_trend && !residual_trend->insufficient_data && !residual_trend->nonincreasing)
    return true;
  if (arrow && !arrow->pass) return true;
  if (identity_sweep && !identity_sweep->pass) return true;
  if (gradient_oracle && !gradient_oracle->pass) return true;
  // Energy positivity is advisory (warn only).
  return false;
}

void write_fields_csv(const std::string& path, const TauRecord& rec,
                      const ProblemSetup& setup) {
  const CylinderField& v = rec.vhat;
  const CylinderGrid& grid = v.grid;
  const TorusGrid& space = grid.space;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  // Reconstructed u and the degenerate residual exist only for endpoint
  // pairs; synthetic-chi runs emit nan there.
  CylinderField u = CylinderField::zeros(grid);
  CylinderField degen = CylinderField::zeros(grid);
  bool have_u = false;
  if (setup.pair) {
    have_u = true;
    const SampledPotential s0 = sample_potential(setup.pair->u0, space);
    const SampledPotential s1 = sample_potential(setup.pair->u1, space);
    for (int it = 0; it < grid.time_points; ++it) {
      const double t = grid.time_of(it);
      for (long s = 0; s < space.size(); ++s)
        u.at(it, s) = (1.0 - t) * s0.value[static_cast<std::size_t>(s)] +
                      t * s1.value[static_cast<std::size_t>(s)] + v.at(it, s);
    }
    degen = degenerate_residual_field(v, *setup.pair, setup.branch);
  }

  const ChiField chi = setup.make_chi(grid.tau);
  std::ofstream out = open_out(path);
  out << "t";
  for (int a = 0; a < space.n; ++a) out << ",x" << a;
  out << ",vhat,u,phase,min_eigenvalue,degenerate_residual\n";

  int ix[3];
  for (int it = 0; it < grid.time_points; ++it) {
    const double t = grid.time_of(it);
    const bool interior = it > 0 && it + 1 < grid.time_points;
    for (long s = 0; s < space.size(); ++s) {
      space.unpack(s, ix);
      out << format_g17(t);
      for (int a = 0; a < space.n; ++a) out << ',' << format_g17(space.coord(ix[a]));
      out << ',' << format_g17(v.at(it, s));
      out << ',' << format_g17(have_u ? u.at(it, s) : nan);
      double phase = nan, min_eig = nan;
      if (interior) {
        const SymmetricMatrix m = scaled_hessian_at(v, chi, it, s);
        const std::vector<double> ev = eigenvalues(m);
        min_eig = ev.front();
        phase = 0.0;
        for (double lam : ev) phase += std::atan(lam);
      }
      out << ',' << format_g17(phase);
      out << ',' << format_g17(min_eig);
      out << ',' << format_g17(have_u ? degen.at(it, s) : nan);
      out << '\n';
    }
  }
}

void write_trend_tau_csv(const std::string& path, const SweepResult& sweep,
                         const ResidualTrendReport* trend) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::ofstream out = open_out(path);
  out << "tau,sup_vhat,sup_gradient,c1_norm,cauchy_gap_to_next,degenerate_residual_norm,"
         "delta,lambda_sub,lambda_super,newton_iterations\n";
  for (std::size_t k = 0; k < sweep.records.size(); ++k) {
    const TauRecord& r = sweep.records[k];
    if (!r.attempted || !r.success) break;
    const double gap = k < sweep.cauchy_gaps.size() ? sweep.cauchy_gaps[k] : nan;
    double residual = nan;
    if (trend != nullptr) {
      for (std::size_t i = 0; i < trend->taus.size(); ++i)
        if (trend->taus[i] == r.tau) residual = trend->residual_norms[i];
    }
    long newton_total = 0;
    for (const ZetaStepRecord& s : r.path.steps) newton_total += s.newton.iterations;
    out << format_g17(r.tau) << ',' << format_g17(r.sup_vhat) << ','
        << format_g17(r.sup_gradient) << ',' << format_g17(r.c1_norm) << ','
        << format_g17(gap) << ',' << format_g17(residual) << ',' << format_g17(r.delta)
        << ',' << format_g17(r.lambda_sub) << ',' << format_g17(r.lambda_super) << ','
        << newton_total << '\n';
  }
}

void write_trend_grid_csv(const std::string& path, std::span<const int> grids,
                          std::span<const double> deviations) {
  if (grids.size() != deviations.size())
    throw InputError("grid sweep rows and deviation rows differ");
  std::ofstream out = open_out(path);
  out << "grid,spacing,max_det_deviation\n";
  for (std::size_t i = 0; i < grids.size(); ++i) {
    out << grids[i] << ',' << format_g17(1.0 / grids[i]) << ',' << format_g17(deviations[i])
        << '\n';
  }
}

void write_report_json(const std::string& path, const ReportInputs& in) {
  json out;
  out["version"] = 1;
  out["command"] = in.command;
  out["status"] = in.status;
  out["exit_code"] = in.exit_code;
  if (!in.failure_reason.empty()) out["failure_reason"] = in.failure_reason;
  out["kernel"] = kernels::active_name();
  out["negated"] = in.negated;
  out["wall_seconds"] = in.wall_seconds;
  if (in.config != nullptr) out["config"] = json_config(*in.config);
  if (in.setup != nullptr)
    out["branch"] = json{{"n", in.setup->branch.n},
                         {"theta", in.setup->branch.theta},
                         {"big_theta", in.setup->branch.big_theta}};
  if (in.sweep != nullptr) {
    json taus = json::array();
    for (const TauRecord& r : in.sweep->records) taus.push_back(json_tau_record(r));
    out["taus"] = std::move(taus);
    out["cauchy_gaps"] = in.sweep->cauchy_gaps;
    out["sweep_success"] = in.sweep->success;
  }
  if (in.verification != nullptr) out["verification"] = json_verification(*in.verification);
  if (!in.artifact_files.empty()) out["artifacts"] = in.artifact_files;
  if (in.extracted_tau_min) out["extracted_tau_min"] = *in.extracted_tau_min;
  if (in.extracted_time_variation)
    out["extracted_time_variation"] = *in.extracted_time_variation;
  if (!in.grid_levels.empty()) {
    json gs;
    gs["grids"] = in.grid_levels;
    gs["max_det_deviation"] = in.grid_deviations;
    if (in.grid_order) gs["order"] = *in.grid_order;
    out["grid_sweep"] = gs;
  }

  std::ofstream f = open_out(path);
  f << out.dump(2) << '\n';
}

}  // namespace slg

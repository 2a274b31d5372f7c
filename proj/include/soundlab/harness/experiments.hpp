#ifndef SOUNDLAB_HARNESS_EXPERIMENTS_HPP
#define SOUNDLAB_HARNESS_EXPERIMENTS_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "soundlab/bogolyubov.hpp"
#include "soundlab/harness/analysis.hpp"
#include "soundlab/harness/config.hpp"
#include "soundlab/harness/table.hpp"
#include "soundlab/manybody.hpp"
#include "soundlab/meanfield.hpp"

namespace soundlab::harness {

struct ExperimentResult {
  std::vector<ResultTable> tables;
  Json summary;
};

namespace detail {

inline PairPotential make_potential(const ExperimentConfig& c, const TorusGrid& g,
                                    double strength) {
  if (c.potential.kind == "zero") return zero_potential(g);
  return bump_potential(g, strength, c.potential.range, c.potential.sign);
}

inline StepPlan make_plan(const ExperimentConfig& c, const PairPotential& u) {
  const double dt = c.dt ? *c.dt : default_time_step(u, c.kinetic);
  return plan_steps(c.t_end, c.sample_interval, dt);
}

inline double sample_time(const ExperimentConfig& c, long s) {
  return static_cast<double>(s) * c.sample_interval;
}

inline std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1])) return false;
  }
  return true;
}

inline bool non_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] <= v[i - 1])) return false;
  }
  return true;
}

inline double drift_per_time(const std::vector<double>& series, double duration) {
  if (series.empty() || duration <= 0.0) return 0.0;
  const double ref = std::abs(series.front());
  double worst = 0.0;
  for (double v : series) worst = std::max(worst, std::abs(v - series.front()));
  return (ref > 0.0 ? worst / ref : worst) / duration;
}

}  // namespace detail

/// Dispersion law from the step-integrated linearized equation.
inline ExperimentResult run_dispersion(const ExperimentConfig& c) {
  const TorusGrid g = c.grid.grid(c.grid.lengths.front());
  const PairPotential u = detail::make_potential(c, g, c.potential.strengths.front());
  const std::vector<std::size_t> modes = lowest_modes(g, static_cast<std::size_t>(c.modes));
  const StepPlan plan = detail::make_plan(c, u);
  const std::vector<FrequencyMeasurement> fm = measure_frequencies(u, modes, plan, c.kinetic);

  ResultTable t("dispersion",
                {{"k", "wavenumber |k| of the mode (representative of the {k,-k} pair)"},
                 {"omega_measured_re", "real part of the fitted frequency"},
                 {"omega_measured_im", "imaginary part (growth rate) of the fitted frequency"},
                 {"omega_theory_re", "real part of sqrt(w0 (w0 + 2 U^(k)))"},
                 {"omega_theory_im", "imaginary part of the closed-form frequency"},
                 {"rel_error", "|measured - theory| / |theory| (absolute when theory is 0)"},
                 {"fit_ok", "false when the mode is static or under-sampled; measured is nan then"}});
  double max_err = 0.0;
  long fitted = 0;
  for (const FrequencyMeasurement& r : fm) {
    const double err = r.fit_ok ? relative_error(r.measured, r.theory) : kNaN;
    if (r.fit_ok) {
      max_err = std::max(max_err, err);
      ++fitted;
    }
    t.add_row({r.k, r.measured.real(), r.measured.imag(), r.theory.real(), r.theory.imag(), err,
               r.fit_ok});
  }
  Json s;
  s["modes_requested"] = c.modes;
  s["modes_fitted"] = fitted;
  s["max_rel_error"] = max_err;
  s["dt"] = plan.dt;
  s["u_hat_zero"] = u.hat_zero();
  return {{std::move(t)}, s};
}

/// Small-k sound speed: intercept of a polynomial fit (degree <= 2) of
/// omega/|k| against |k| over the lowest modes.
inline ExperimentResult run_soundspeed(const ExperimentConfig& c) {
  struct Row {
    double length, v_fit, v_theory, rel_error;
    bool ok;
  };
  std::vector<double> lengths = c.grid.lengths;
  std::sort(lengths.begin(), lengths.end());
  for (double l : lengths) {
    const PairPotential u = detail::make_potential(c, c.grid.grid(l), c.potential.strengths.front());
    if (u.hat_zero() < 0.0) throw ConfigError("soundspeed needs U^(0) >= 0 (repulsive or zero potential)");
  }
  const std::vector<Row> rows = parallel_map(lengths.size(), [&](std::size_t i) {
    const TorusGrid g = c.grid.grid(lengths[i]);
    const PairPotential u = detail::make_potential(c, g, c.potential.strengths.front());
    const std::vector<std::size_t> modes = lowest_modes(g, static_cast<std::size_t>(c.modes));
    const std::vector<FrequencyMeasurement> fm =
        measure_frequencies(u, modes, detail::make_plan(c, u), c.kinetic);
    std::vector<double> x, y;
    bool ok = !fm.empty();
    for (const FrequencyMeasurement& r : fm) {
      ok = ok && r.fit_ok;
      x.push_back(r.k);
      y.push_back(r.measured.real() / r.k);
    }
    const double v_theory = u.hat_zero() > 0.0 ? sound_speed(u) : 0.0;
    double v_fit = kNaN;
    if (ok) {
      const std::vector<double> coef =
          fit_polynomial(x, y, std::min<int>(2, static_cast<int>(x.size()) - 1));
      v_fit = coef.empty() ? kNaN : coef[0];
    }
    const double err = v_theory > 0.0 ? std::abs(v_fit - v_theory) / v_theory : std::abs(v_fit);
    return Row{lengths[i], v_fit, v_theory, err, ok && std::isfinite(v_fit)};
  });

  ResultTable t("soundspeed", {{"L", "box side length"},
                               {"v_fit", "intercept of the fit of omega/|k| vs |k| (lowest modes)"},
                               {"v_theory", "sqrt(U^(0)), 0 for the free case"},
                               {"rel_error", "|v_fit - v_theory| / v_theory (absolute when v_theory = 0)"},
                               {"fit_ok", "false when a mode could not be fitted"}});
  std::vector<double> errs;
  for (const Row& r : rows) {
    t.add_row({r.length, r.v_fit, r.v_theory, r.rel_error, r.ok});
    errs.push_back(r.rel_error);
  }
  Json s;
  s["fit_modes"] = c.modes;
  s["max_rel_error"] = *std::max_element(errs.begin(), errs.end());
  s["rel_error_decreasing_in_L"] = detail::strictly_decreasing(errs);
  return {{std::move(t)}, s};
}

/// Nonlinear excitation vs closed-form linear propagation, amplitude and
/// volume sweep.
inline ExperimentResult run_linearize(const ExperimentConfig& c) {
  std::vector<double> lengths = c.grid.lengths;
  std::sort(lengths.begin(), lengths.end());
  std::vector<double> amps = c.excitation.amplitudes;
  std::sort(amps.begin(), amps.end());
  struct Point {
    double length, amplitude, eps0, sup, gap, mass_drift, energy_drift;
  };
  std::vector<std::pair<double, double>> grid_points;
  for (double l : lengths) {
    for (double a : amps) grid_points.emplace_back(l, a);
  }
  for (double l : lengths) {  // validate before computing
    const TorusGrid g = c.grid.grid(l);
    const PairPotential u = detail::make_potential(c, g, c.potential.strengths.front());
    for (double a : amps) initial_state(g, u, c.excitation.spec(a, c.seed), ReferenceMode::torus);
  }
  const std::vector<Point> pts = parallel_map(grid_points.size(), [&](std::size_t i) {
    const auto [l, a] = grid_points[i];
    const TorusGrid g = c.grid.grid(l);
    const PairPotential u = detail::make_potential(c, g, c.potential.strengths.front());
    const MeanFieldState s0 = initial_state(g, u, c.excitation.spec(a, c.seed), ReferenceMode::torus);
    const ComplexField eps0 = extract_excitation(s0);
    const double dt = c.dt ? *c.dt : default_time_step(u);
    const LinearizationComparison cmp = compare_linearization(eps0, u, c.t_end, dt);
    return Point{l, a, eps0.l2_norm(), cmp.eps_sup, cmp.l2_gap, cmp.mass_drift / c.t_end,
                 cmp.energy_drift / c.t_end};
  });

  ResultTable t("linearize", {{"L", "box side length"},
                              {"amplitude", "sup norm of the initial excitation"},
                              {"eps0_l2", "||eps_0||_2"},
                              {"eps_l2_sup", "sup over s <= t of ||eps_s||_2 (nonlinear run)"},
                              {"gap_l2", "||eta_t - eps_t||_2 at t = t_end"}});
  for (const Point& p : pts) t.add_row({p.length, p.amplitude, p.eps0, p.sup, p.gap});

  Json s;
  s["t"] = c.t_end;
  double mass_drift = 0.0, energy_drift = 0.0;
  for (const Point& p : pts) {
    mass_drift = std::max(mass_drift, p.mass_drift);
    energy_drift = std::max(energy_drift, p.energy_drift);
  }
  s["max_mass_drift_per_time"] = mass_drift;
  s["max_energy_drift_per_time"] = energy_drift;
  Json per_l = Json::array();
  for (double l : lengths) {
    std::vector<double> x, y;
    for (const Point& p : pts) {
      if (p.length == l) {
        x.push_back(p.eps0);
        y.push_back(p.gap);
      }
    }
    std::vector<double> inc(y.rbegin(), y.rend());
    per_l.push_back({{"L", l},
                     {"loglog_slope", detail::finite_or_null(loglog_slope(x, y))},
                     {"gap_monotone_in_amplitude", detail::strictly_decreasing(inc)}});
  }
  s["per_L"] = per_l;
  Json per_a = Json::array();
  for (double a : amps) {
    std::vector<double> gaps;
    for (const Point& p : pts) {
      if (p.amplitude == a) gaps.push_back(p.gap);
    }
    per_a.push_back({{"amplitude", a}, {"gap_nonincreasing_in_L", detail::non_increasing(gaps)}});
  }
  s["per_amplitude"] = per_a;
  return {{std::move(t)}, s};
}

/// Exact many-body dynamics vs mean field on a ring, density sweep.
inline ExperimentResult run_manybody_converge(const ExperimentConfig& c) {
  const double length = c.grid.lengths.front();
  const TorusGrid g = c.grid.grid(length);
  const PairPotential u = detail::make_potential(c, g, c.potential.strengths.front());
  const ExcitationSpec spec = c.excitation.spec(c.excitation.amplitudes.front(), c.seed);
  const MeanFieldState s0 = initial_state(g, u, spec, ReferenceMode::torus);
  const RingLattice lat = ring_lattice(u);
  const double lambda = g.volume();
  std::vector<double> rhos = c.rhos;
  std::sort(rhos.begin(), rhos.end());
  std::vector<int> counts;
  for (double rho : rhos) {
    const double n = rho * lambda;
    const long long ni = std::llround(n);
    if (std::abs(n - static_cast<double>(ni)) > 1e-9 * std::max(1.0, n) || ni < 1) {
      throw ConfigError("rho * Lambda must be a positive integer (rho=" + detail::label(rho) +
                        ", Lambda=" + detail::label(lambda) + ")");
    }
    counts.push_back(static_cast<int>(ni));
    FockBasis probe(g.points_per_dim(), static_cast<int>(ni));  // dimension guard
  }
  const StepPlan plan = detail::make_plan(c, u);

  struct Sample {
    double t;
    DensityComparison d;
    double mass, energy;
  };
  const auto runs = parallel_map(rhos.size(), [&](std::size_t r) {
    const double rho = rhos[r];
    const LatticeHamiltonian h = build_hamiltonian(lat, counts[r], rho);
    const FockVector psi0 = product_state(to_site_vector(s0.varphi), counts[r]);
    std::optional<EigenPropagator> dense;
    if (h.basis->dimension() <= kDenseEvolveLimit) dense.emplace(h);
    SplitStepSolver solver(u, KineticModel::lattice);
    MeanFieldState s = s0;
    FockVector psi = psi0;
    std::vector<Sample> out;
    for (long k = 0; k <= plan.samples; ++k) {
      const double t = detail::sample_time(c, k);
      if (k > 0) {
        for (long j = 0; j < plan.steps_per_sample; ++j) s = step(std::move(s), solver, plan.dt);
        psi = dense ? dense->evolve(psi0, t) : krylov_evolve(h, psi, c.sample_interval);
      }
      const DensityComparison d = density_comparisons(psi, s, rho);
      if (!(d.psi_gap_sq <= d.m_expect + 1e-12)) {
        std::ostringstream msg;
        msg << "truncation inequality ||Psi - Psi~||^2 <= <m> violated at t=" << t
            << " (rho=" << rho << "): " << d.psi_gap_sq << " > " << d.m_expect;
        throw NumericalError(msg.str());
      }
      out.push_back({t, d, s.varphi.l2_norm_sq(), hartree_energy(s.varphi, u, solver.kinetic())});
    }
    return out;
  });

  ResultTable t("manybody", {{"t", "time"},
                             {"L", "ring length"},
                             {"rho", "density N / Lambda"},
                             {"N", "particle number"},
                             {"m_expect", "<Psi_t, m^ Psi_t> relative to the Hartree orbital"},
                             {"psi_gap_sq", "||Psi_t - Psi~_t||^2"},
                             {"d_micro", "||rho_micro - rho_macro|| (operator norm)"},
                             {"d_tilde", "||rho~_micro - rho_macro|| (operator norm)"}});
  bool triangle = true;
  double m_t0 = 0.0;
  for (std::size_t r = 0; r < rhos.size(); ++r) {
    for (const Sample& smp : runs[r]) {
      t.add_row({smp.t, length, rhos[r], static_cast<long long>(counts[r]), smp.d.m_expect,
                 smp.d.psi_gap_sq, smp.d.d_micro, smp.d.d_tilde});
      triangle = triangle &&
                 smp.d.d_tilde <= smp.d.d_micro + 2.0 * lambda * std::sqrt(smp.d.psi_gap_sq) + 1e-12;
      if (smp.t == 0.0) m_t0 = std::max(m_t0, smp.d.m_expect);
    }
  }
  std::vector<double> m_end, dm_end, dt_end;
  Json finals = Json::array();
  for (std::size_t r = 0; r < rhos.size(); ++r) {
    const DensityComparison& d = runs[r].back().d;
    m_end.push_back(d.m_expect);
    dm_end.push_back(d.d_micro);
    dt_end.push_back(d.d_tilde);
    finals.push_back({{"rho", rhos[r]}, {"N", counts[r]}, {"m_expect", d.m_expect},
                      {"d_micro", d.d_micro}, {"d_tilde", d.d_tilde}, {"psi_gap_sq", d.psi_gap_sq}});
  }
  Json s;
  s["t_final"] = c.t_end;
  s["final"] = finals;
  s["m_expect_decreasing_in_rho"] = detail::strictly_decreasing(m_end);
  s["d_micro_decreasing_in_rho"] = detail::strictly_decreasing(dm_end);
  s["d_tilde_decreasing_in_rho"] = detail::strictly_decreasing(dt_end);
  s["max_m_expect_at_t0"] = m_t0;
  s["truncation_inequality_holds"] = true;
  s["triangle_consistency_holds"] = triangle;
  s["mean_field_dt"] = plan.dt;
  std::vector<double> mass, energy;
  for (const Sample& smp : runs.front()) {
    mass.push_back(smp.mass);
    energy.push_back(smp.energy);
  }
  s["mean_field_mass_drift_per_time"] = detail::drift_per_time(mass, c.t_end);
  s["mean_field_energy_drift_per_time"] = detail::drift_per_time(energy, c.t_end);
  return {{std::move(t)}, s};
}

/// Nonlinear excitation with an attractive potential: growth of the fastest
/// unstable mode and onset of large excitations.
inline ExperimentResult run_instability(const ExperimentConfig& c) {
  const double length = c.grid.lengths.front();
  const TorusGrid g = c.grid.grid(length);
  std::vector<double> strengths = c.potential.strengths;
  std::sort(strengths.begin(), strengths.end());
  for (double a : strengths) {
    initial_state(g, detail::make_potential(c, g, a),
                  c.excitation.spec(c.excitation.amplitudes.front(), c.seed), ReferenceMode::torus);
  }

  struct Sample {
    double t, eps_l2, eps_inf, mode_amp, mass, energy;
  };
  struct Run {
    double strength = 0.0;
    double growth_theory = 0.0;
    double k_star = kNaN;
    std::vector<Sample> samples;
    std::optional<double> onset, blowup;
  };
  const std::vector<Run> runs = parallel_map(strengths.size(), [&](std::size_t r) {
    Run run;
    run.strength = strengths[r];
    const PairPotential u = detail::make_potential(c, g, strengths[r]);
    std::optional<BogolyubovMode> fastest;
    for (std::size_t i = 1; i < g.size(); ++i) {
      if (!(i < g.negated_index(i) || i == g.negated_index(i))) continue;
      const BogolyubovMode m = make_mode(u, i, c.kinetic);
      if (m.classification == ModeClass::unstable &&
          (!fastest || m.growth_rate() > fastest->growth_rate())) {
        fastest = m;
      }
    }
    if (fastest) {
      run.growth_theory = fastest->growth_rate();
      run.k_star = std::sqrt(g.wavenumber_sq(fastest->index));
    }
    const MeanFieldState s0 =
        initial_state(g, u, c.excitation.spec(c.excitation.amplitudes.front(), c.seed),
                      ReferenceMode::torus);
    SplitStepSolver solver(u, c.kinetic);
    MeanFieldState st = s0;
    const StepPlan plan = detail::make_plan(c, u);
    for (long k = 0; k <= plan.samples; ++k) {
      const double t = detail::sample_time(c, k);
      if (k > 0) {
        bool finite = true;
        for (long j = 0; j < plan.steps_per_sample && finite; ++j) {
          try {
            st = step(std::move(st), solver, plan.dt);
          } catch (const NumericalError&) {
            finite = false;
          }
        }
        if (!finite) {
          run.blowup = t;
          break;
        }
      }
      const ComplexField eps = extract_excitation(st);
      const ComplexField& ref = st.phi_ref;
      // Gauge-fix by the global phase of the reference orbital, so that the
      // projection sees the linearized variable eps * conj(phase).
      const Complex overlap = inner(constant_field(g, 1.0), ref);
      const Complex gauge = std::abs(overlap) > 0.0 ? std::conj(overlap) / std::abs(overlap) : 1.0;
      double amp = kNaN;
      if (fastest) {
        const SpectralField eh = dft_forward(gauge * eps);
        const std::size_t i = fastest->index;
        const auto cf = eigen_coefficients(*fastest, {eh[i], std::conj(eh[g.negated_index(i)])});
        if (cf) amp = std::abs((*cf)[0]);
      }
      Sample smp{t, eps.l2_norm(), eps.sup_norm(), amp, st.varphi.l2_norm_sq(),
                 hartree_energy(st.varphi, u, solver.kinetic())};
      run.samples.push_back(smp);
      if (!run.onset && smp.eps_inf >= c.onset_threshold) run.onset = t;
      if (!std::isfinite(smp.eps_inf) || smp.eps_inf > c.blowup_threshold) {
        run.blowup = t;
        break;
      }
    }
    return run;
  });

  ResultTable t("instability",
                {{"strength", "potential strength a (sign from the config)"},
                 {"t", "time"},
                 {"eps_l2", "||eps_t||_2"},
                 {"eps_inf", "||eps_t||_inf"},
                 {"fastest_mode_amp", "|c+| of the fastest unstable mode (nan if none)"},
                 {"max_k_growth", "largest linear growth rate sqrt(-omega^2) on the grid"},
                 {"mass", "||varphi_t||_2^2, varphi_t = phi_ref_t + eps_t"},
                 {"energy", "Hartree energy of varphi_t"}});
  Json per = Json::array();
  std::vector<double> onsets;
  bool all_onset = true;
  for (const Run& run : runs) {
    for (const Sample& smp : run.samples) {
      t.add_row({run.strength, smp.t, smp.eps_l2, smp.eps_inf, smp.mode_amp, run.growth_theory,
                 smp.mass, smp.energy});
    }
    // Windowed fit of log|c+| up to the first doubling of ||eps||_2.
    std::vector<double> tt, la, mass, energy;
    double t_double = kNaN;
    const double e0 = run.samples.front().eps_l2;
    for (const Sample& smp : run.samples) {
      mass.push_back(smp.mass);
      energy.push_back(smp.energy);
      if (std::isnan(t_double) && smp.eps_l2 >= 2.0 * e0) t_double = smp.t;
      if (std::isnan(t_double) && smp.mode_amp > 0.0) {
        tt.push_back(smp.t);
        la.push_back(std::log(smp.mode_amp));
      }
    }
    const double measured = run.growth_theory > 0.0 ? fit_line(tt, la).slope : kNaN;
    const double duration = run.samples.back().t;
    Json e{{"strength", run.strength},
           {"k_star", detail::finite_or_null(run.k_star)},
           {"growth_theory", run.growth_theory},
           {"growth_measured", detail::finite_or_null(measured)},
           {"growth_rel_error",
            detail::finite_or_null(std::abs(measured - run.growth_theory) / run.growth_theory)},
           {"fit_window_end", detail::finite_or_null(std::isnan(t_double) ? duration : t_double)},
           {"fit_samples", tt.size()},
           {"onset_time", run.onset ? Json(*run.onset) : Json(nullptr)},
           {"blowup", run.blowup.has_value()},
           {"blowup_time", run.blowup ? Json(*run.blowup) : Json(nullptr)},
           {"mass_drift_per_time", detail::drift_per_time(mass, duration)},
           {"energy_drift_per_time", detail::drift_per_time(energy, duration)}};
    per.push_back(e);
    if (run.onset) {
      onsets.push_back(*run.onset);
    } else {
      all_onset = false;
    }
  }
  Json s;
  s["onset_threshold"] = c.onset_threshold;
  s["blowup_threshold"] = c.blowup_threshold;
  s["per_strength"] = per;
  s["onset_earlier_with_strength"] = all_onset && detail::strictly_decreasing(onsets);
  return {{std::move(t)}, s};
}

/// Mean-field trajectories with diagnostics, volume sweep, plus the
/// dual-route excitation consistency.
inline ExperimentResult run_evolve(const ExperimentConfig& c) {
  std::vector<double> lengths = c.grid.lengths;
  std::sort(lengths.begin(), lengths.end());
  const ExcitationSpec spec = c.excitation.spec(c.excitation.amplitudes.front(), c.seed);
  for (double l : lengths) {
    const TorusGrid g = c.grid.grid(l);
    initial_state(g, detail::make_potential(c, g, c.potential.strengths.front()), spec,
                  c.excitation.mode);
  }
  struct Run {
    double length;
    std::vector<DiagnosticsRecord> diag;
    std::vector<double> route_gap;
  };
  const std::vector<Run> runs = parallel_map(lengths.size(), [&](std::size_t r) {
    const TorusGrid g = c.grid.grid(lengths[r]);
    const PairPotential u = detail::make_potential(c, g, c.potential.strengths.front());
    SplitStepSolver solver(u, c.kinetic);
    std::vector<CutoffFunction> cut;
    for (double rr : c.cutoffs) cut.push_back(make_cutoff(g, rr));
    MeanFieldState s = initial_state(g, u, spec, c.excitation.mode);
    ComplexField direct = extract_excitation(s);
    const StepPlan plan = detail::make_plan(c, u);
    Run run{lengths[r], {}, {}};
    for (long k = 0; k <= plan.samples; ++k) {
      if (k > 0) {
        for (long j = 0; j < plan.steps_per_sample; ++j) {
          try {
            direct = epsilon_direct_step(direct, s.phi_ref, solver, plan.dt);
          } catch (const NumericalError& e) {
            throw NumericalError(std::string(e.what()) + " (t=" + detail::label(s.time) + ")");
          }
          s = step(std::move(s), solver, plan.dt);
        }
        s.time = s.ref_time = detail::sample_time(c, k);
      }
      run.diag.push_back(diagnostics(s, solver, cut));
      run.route_gap.push_back((extract_excitation(s) - direct).l2_norm());
    }
    return run;
  });

  std::vector<Column> cols{{"L", "box side length"},
                           {"t", "time"},
                           {"mass", "||varphi_t||_2^2"},
                           {"eps_l2", "||eps_t||_2"},
                           {"eps_inf", "||eps_t||_inf"},
                           {"eps_grad_l2", "||grad eps_t||_2"},
                           {"p_ref_eps", "||p_ref eps_t||_2"}};
  for (double rr : c.cutoffs) {
    cols.push_back({"chi_eps_r" + detail::label(rr), "||chi_r eps_t||_2 with r = " + detail::label(rr)});
  }
  cols.push_back({"energy", "Hartree energy 1/2||grad varphi||^2 + 1/2<|varphi|^2, U*|varphi|^2>"});
  cols.push_back({"phi_hat_l1", "l1 norm of the transform of varphi_t"});
  cols.push_back({"eps_route_gap", "||eps (Hartree minus reference) - eps (direct)||_2"});
  ResultTable t("evolve", cols);

  Json per = Json::array();
  std::vector<std::vector<double>> chi_scaled(c.cutoffs.size());
  std::vector<double> p_scaled;
  for (const Run& run : runs) {
    std::vector<double> mass, energy;
    double max_p = 0.0, max_gap = 0.0;
    std::vector<double> max_chi(c.cutoffs.size(), 0.0);
    for (std::size_t k = 0; k < run.diag.size(); ++k) {
      const DiagnosticsRecord& d = run.diag[k];
      std::vector<Cell> row{run.length, d.t, d.mass, d.eps_l2, d.eps_inf, d.eps_grad_l2, d.p_ref_eps};
      for (std::size_t q = 0; q < d.chi_eps.size(); ++q) {
        row.emplace_back(d.chi_eps[q]);
        max_chi[q] = std::max(max_chi[q], d.chi_eps[q]);
      }
      row.emplace_back(d.energy);
      row.emplace_back(d.phi_hat_l1);
      row.emplace_back(run.route_gap[k]);
      t.add_row(std::move(row));
      mass.push_back(d.mass);
      energy.push_back(d.energy);
      max_p = std::max(max_p, d.p_ref_eps);
      max_gap = std::max(max_gap, run.route_gap[k]);
    }
    const double lambda = std::pow(run.length, c.grid.dim);
    Json chi_j = Json::object();
    for (std::size_t q = 0; q < c.cutoffs.size(); ++q) {
      const double v = max_chi[q] * std::cbrt(lambda);
      chi_scaled[q].push_back(v);
      chi_j[detail::label(c.cutoffs[q])] = v;
    }
    p_scaled.push_back(max_p * std::sqrt(lambda));
    per.push_back({{"L", run.length},
                   {"mass_drift_per_time", detail::drift_per_time(mass, c.t_end)},
                   {"energy_drift_per_time", detail::drift_per_time(energy, c.t_end)},
                   {"max_chi_eps_times_lambda_1_3", chi_j},
                   {"max_p_ref_eps_times_lambda_1_2", p_scaled.back()},
                   {"max_route_gap", max_gap}});
  }
  Json s;
  s["per_L"] = per;
  Json ratios = Json::object();
  for (std::size_t q = 0; q < c.cutoffs.size(); ++q) {
    ratios[detail::label(c.cutoffs[q])] = detail::finite_or_null(max_over_min(chi_scaled[q]));
  }
  s["chi_collapse_ratio"] = ratios;
  s["p_ref_collapse_ratio"] = detail::finite_or_null(max_over_min(p_scaled));

  if (!c.route_dts.empty()) {
    const TorusGrid g = c.grid.grid(lengths.front());
    const PairPotential u = detail::make_potential(c, g, c.potential.strengths.front());
    std::vector<double> dts = c.route_dts;
    std::sort(dts.begin(), dts.end());
    const std::vector<double> gaps = parallel_map(dts.size(), [&](std::size_t i) {
      SplitStepSolver solver(u, c.kinetic);
      MeanFieldState st = initial_state(g, u, spec, c.excitation.mode);
      ComplexField direct = extract_excitation(st);
      const long steps = std::max(1L, std::lround(c.t_end / dts[i]));
      const double h = c.t_end / static_cast<double>(steps);
      for (long j = 0; j < steps; ++j) {
        direct = epsilon_direct_step(direct, st.phi_ref, solver, h);
        st = step(std::move(st), solver, h);
      }
      st.time = st.ref_time = c.t_end;
      return (extract_excitation(st) - direct).l2_norm();
    });
    Json rows = Json::array();
    for (std::size_t i = 0; i < dts.size(); ++i) rows.push_back({{"dt", dts[i]}, {"gap", gaps[i]}});
    s["route_convergence"] = {{"L", lengths.front()},
                              {"t", c.t_end},
                              {"samples", rows},
                              {"order", detail::finite_or_null(loglog_slope(dts, gaps))}};
  }
  return {{std::move(t)}, s};
}

inline ExperimentResult run_experiment(const ExperimentConfig& c) {
  switch (c.experiment) {
    case Experiment::dispersion: return run_dispersion(c);
    case Experiment::soundspeed: return run_soundspeed(c);
    case Experiment::linearize: return run_linearize(c);
    case Experiment::manybody_converge: return run_manybody_converge(c);
    case Experiment::instability: return run_instability(c);
    case Experiment::evolve: return run_evolve(c);
  }
  throw ConfigError("unknown experiment");
}

}  // namespace soundlab::harness

#endif  // SOUNDLAB_HARNESS_EXPERIMENTS_HPP

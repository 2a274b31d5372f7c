#ifndef SOUNDLAB_MEANFIELD_HPP
#define SOUNDLAB_MEANFIELD_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "soundlab/errors.hpp"
#include "soundlab/pair_potential.hpp"
#include "soundlab/torus_grid.hpp"

namespace soundlab {

/// C^2 ramp: 0 for s <= 0, 1 for s >= 1, 6s^5 - 15s^4 + 10s^3 in between.
inline double smooth_ramp(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return s * s * s * (s * (6.0 * s - 15.0) + 10.0);
}

/// Cutoff chi_r: 0 within distance r*R of the box centre, 1 beyond R, with a
/// C^2 ramp in between. R = Lambda^{1/dim}/2 = L/2, so ||grad chi_r||_inf
/// scales as 1/L.
struct CutoffFunction {
  double r = 0.0;
  std::vector<double> samples;
};

inline CutoffFunction make_cutoff(const TorusGrid& grid, double r) {
  if (!(r > 0.0 && r < 1.0)) throw InvalidArgument("cutoff radius fraction must lie in (0,1)");
  const double outer = 0.5 * grid.side_length();
  const double inner = r * outer;
  CutoffFunction chi{r, std::vector<double>(grid.size())};
  const Vec3 c = grid.center();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    chi.samples[i] = smooth_ramp((grid.min_image_distance(i, c) - inner) / (outer - inner));
  }
  return chi;
}

enum class ExcitationShape { gaussian_bump, smooth_bump };
enum class ReferenceMode { torus, plateau };

struct ExcitationSpec {
  double amplitude = 0.0;
  double width = 1.0;
  ExcitationShape shape = ExcitationShape::smooth_bump;
  double noise = 0.0;  // relative Gaussian perturbation of the profile
  std::uint64_t seed = 0;
};

/// Fraction of L/2 over which the plateau reference decays to zero.
inline constexpr double kPlateauMargin = 1.0 / 8.0;

/// Hartree orbital, reference orbital and their clocks. The excitation is
/// derived: epsilon = varphi e^{i||U||_1 t} - phi_ref.
struct MeanFieldState {
  double time = 0.0;
  double ref_time = 0.0;
  ComplexField varphi;
  ComplexField phi_ref;
  double u_l1 = 0.0;

  bool consistent() const { return time == ref_time; }
};

/// epsilon_t = varphi_t e^{i||U||_1 t} - phi_ref_t.
inline ComplexField extract_excitation(const MeanFieldState& s) {
  if (!s.consistent()) {
    throw InvalidArgument("extract_excitation: Hartree and reference clocks differ");
  }
  const Complex phase = std::polar(1.0, s.u_l1 * s.time);
  ComplexField eps(s.varphi.grid());
  for (std::size_t i = 0; i < eps.size(); ++i) {
    eps[i] = s.varphi[i] * phase - s.phi_ref[i];
  }
  return eps;
}

inline ComplexField plateau_reference(const TorusGrid& grid) {
  const double outer = 0.5 * grid.side_length();
  const double inner = (1.0 - kPlateauMargin) * outer;
  const Vec3 c = grid.center();
  ComplexField phi(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    phi[i] = 1.0 - smooth_ramp((grid.min_image_distance(i, c) - inner) / (outer - inner));
  }
  return phi;
}

/// Real excitation profile centred in the box with peak value 1.
inline std::vector<double> excitation_profile(const TorusGrid& grid, double width,
                                              ExcitationShape shape) {
  std::vector<double> g(grid.size());
  const Vec3 c = grid.center();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double d = grid.min_image_distance(i, c);
    g[i] = shape == ExcitationShape::gaussian_bump
               ? std::exp(-0.5 * d * d / (width * width))
               : mollifier(d / width);
  }
  return g;
}

/// Builds (varphi_0, phi_ref_0) with varphi_0 = phi_ref_0 + eps_0.
///
/// eps_0 = a e^{i theta} g with g the unit-peak profile, so ||eps_0||_inf = a
/// (without noise; noise multiplies g pointwise by 1 + noise*xi).
/// theta is fixed by ||phi_ref + eps_0||_2 = ||phi_ref||_2; in torus mode this
/// gives ||varphi_0||_2^2 = Lambda.
inline MeanFieldState initial_state(const TorusGrid& grid, const PairPotential& u,
                                    const ExcitationSpec& spec, ReferenceMode mode) {
  if (!(u.grid() == grid)) throw InvalidArgument("potential grid mismatch");
  if (!(spec.width > 0.0) || spec.width >= grid.side_length() / 8.0) {
    throw InvalidArgument("excitation width must lie in (0, L/8)");
  }
  if (!(spec.amplitude >= 0.0)) throw InvalidArgument("excitation amplitude must be >= 0");

  ComplexField phi_ref = mode == ReferenceMode::torus ? constant_field(grid, 1.0)
                                                      : plateau_reference(grid);
  if (!(spec.noise >= 0.0)) throw InvalidArgument("excitation noise must be >= 0");
  std::vector<double> g = excitation_profile(grid, spec.width, spec.shape);
  if (spec.noise > 0.0) {
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& v : g) v *= 1.0 + spec.noise * gauss(rng);
  }
  double overlap = 0.0;
  double g_sq = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    overlap += phi_ref[i].real() * g[i];
    g_sq += g[i] * g[i];
  }
  const double cos_theta = -spec.amplitude * g_sq / (2.0 * overlap);
  if (cos_theta < -1.0) {
    throw InvalidArgument("excitation amplitude too large to keep ||varphi_0|| fixed");
  }
  const Complex dir = std::polar(spec.amplitude, std::acos(cos_theta));
  ComplexField varphi = phi_ref;
  for (std::size_t i = 0; i < grid.size(); ++i) varphi[i] += dir * g[i];
  return MeanFieldState{0.0, 0.0, std::move(varphi), std::move(phi_ref), u.l1_norm()};
}

/// 1e-3 of the shortest Bogolyubov period on the grid.
inline double default_time_step(const PairPotential& u,
                                KineticModel model = KineticModel::spectral) {
  const TorusGrid& g = u.grid();
  double wmax = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double w0 = kinetic_symbol(g, i, model);
    wmax = std::max(wmax, std::sqrt(std::abs(w0 * (w0 + 2.0 * u.hat(i).real()))));
  }
  if (wmax == 0.0) return 1e-3;
  return 1e-3 * 2.0 * std::numbers::pi / wmax;
}

/// Strang split-step integrator for the Hartree, reference and excitation
/// equations on one grid. Kinetic half-steps are exact Fourier multipliers;
/// the potential substep is an exact phase for the Hartree and reference
/// equations, and a midpoint rule for the inhomogeneous excitation source.
///
/// Caches the kinetic phases for the last dt used; one solver per thread.
class SplitStepSolver {
 public:
  SplitStepSolver(PairPotential u, KineticModel model = KineticModel::spectral)
      : u_(std::move(u)), model_(model), kinetic_(kinetic_table(u_.grid(), model)) {}

  const PairPotential& potential() const { return u_; }
  KineticModel kinetic_model() const { return model_; }
  std::span<const double> kinetic() const { return kinetic_; }

  /// i d/dt phi = (-Delta/2 + U*|phi|^2 - shift) phi over one step.
  ComplexField nonlinear_step(const ComplexField& phi, double dt, double shift) {
    ComplexField out = kinetic_half(phi, dt);
    const std::vector<double> v = convolve_real(u_, density(out));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= std::polar(1.0, -dt * (v[i] - shift));
    return kinetic_half(out, dt);
  }

  /// One step of the excitation equation driven by the reference orbital
  /// `phi_ref` at the start of the step.
  ComplexField excitation_step(const ComplexField& eps, const ComplexField& phi_ref, double dt) {
    ComplexField e = kinetic_half(eps, dt);
    const ComplexField r = kinetic_half(phi_ref, dt);
    std::vector<double> coupling(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
      coupling[i] = std::norm(e[i]) + 2.0 * (std::conj(e[i]) * r[i]).real();
    }
    const std::vector<double> w = convolve_real(u_, coupling);
    const std::vector<double> vr = convolve_real(u_, density(r));
    const double shift = u_.l1_norm();
    for (std::size_t i = 0; i < e.size(); ++i) {
      const double vref = vr[i] - shift;
      const double a = vref + w[i];
      const Complex r_mid = r[i] * std::polar(1.0, -0.5 * dt * vref);
      e[i] = std::polar(1.0, -a * dt) * e[i] -
             Complex(0.0, dt) * std::polar(1.0, -0.5 * a * dt) * w[i] * r_mid;
    }
    return kinetic_half(e, dt);
  }

  ComplexField kinetic_half(const ComplexField& f, double dt) {
    refresh_phases(dt);
    SpectralField fh = dft_forward(f);
    for (std::size_t i = 0; i < fh.size(); ++i) fh[i] *= half_phase_[i];
    return dft_inverse(fh);
  }

 private:
  static std::vector<double> density(const ComplexField& f) {
    std::vector<double> rho(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) rho[i] = std::norm(f[i]);
    return rho;
  }

  void refresh_phases(double dt) {
    if (cached_dt_ && *cached_dt_ == dt) return;
    half_phase_.resize(kinetic_.size());
    for (std::size_t i = 0; i < kinetic_.size(); ++i) {
      half_phase_[i] = std::polar(1.0, -0.5 * dt * kinetic_[i]);
    }
    cached_dt_ = dt;
  }

  PairPotential u_;
  KineticModel model_;
  std::vector<double> kinetic_;
  std::vector<Complex> half_phase_;
  std::optional<double> cached_dt_;
};

namespace detail {

inline void require_step(double dt) {
  if (dt == 0.0 || !std::isfinite(dt)) throw InvalidArgument("time step must be finite and nonzero");
}

inline void require_finite(const ComplexField& f, double t, const char* what) {
  if (!f.all_finite()) {
    std::ostringstream msg;
    msg << what << ": nonfinite value at t=" << t;
    throw NumericalError(msg.str());
  }
}

}  // namespace detail

/// Advances varphi (Hartree equation) and its clock by dt. Negative dt
/// integrates backwards; the scheme is exactly time-reversible.
inline MeanFieldState hartree_step(MeanFieldState s, SplitStepSolver& solver, double dt) {
  detail::require_step(dt);
  s.varphi = solver.nonlinear_step(s.varphi, dt, 0.0);
  s.time += dt;
  detail::require_finite(s.varphi, s.time, "hartree_step");
  return s;
}

/// Advances phi_ref (reference equation, potential shifted by ||U||_1).
inline MeanFieldState reference_step(MeanFieldState s, SplitStepSolver& solver, double dt) {
  detail::require_step(dt);
  s.phi_ref = solver.nonlinear_step(s.phi_ref, dt, solver.potential().l1_norm());
  s.ref_time += dt;
  detail::require_finite(s.phi_ref, s.ref_time, "reference_step");
  return s;
}

/// Advances both orbitals by dt.
inline MeanFieldState step(MeanFieldState s, SplitStepSolver& solver, double dt) {
  return reference_step(hartree_step(std::move(s), solver, dt), solver, dt);
}

inline MeanFieldState hartree_step(MeanFieldState s, const PairPotential& u, double dt) {
  SplitStepSolver solver(u);
  return hartree_step(std::move(s), solver, dt);
}

inline MeanFieldState reference_step(MeanFieldState s, const PairPotential& u, double dt) {
  SplitStepSolver solver(u);
  return reference_step(std::move(s), solver, dt);
}

/// Integrates the excitation equation directly for one step, given the
/// reference orbital at the start of the step. Independent of the
/// Hartree-minus-reference route of extract_excitation.
inline ComplexField epsilon_direct_step(const ComplexField& eps, const ComplexField& phi_ref,
                                        SplitStepSolver& solver, double dt) {
  detail::require_step(dt);
  ComplexField out = solver.excitation_step(eps, phi_ref, dt);
  if (!out.all_finite()) {
    std::ostringstream msg;
    msg << "epsilon_direct_step: nonfinite value after a step of size " << dt;
    throw NumericalError(msg.str());
  }
  return out;
}

inline ComplexField epsilon_direct_step(const ComplexField& eps, const ComplexField& phi_ref,
                                        const PairPotential& u, double dt) {
  SplitStepSolver solver(u);
  return epsilon_direct_step(eps, phi_ref, solver, dt);
}

struct DiagnosticsRecord {
  double t = 0.0;
  double mass = 0.0;  // ||varphi||_2^2
  double eps_l2 = 0.0;
  double eps_inf = 0.0;
  double eps_grad_l2 = 0.0;
  double p_ref_eps = 0.0;  // |<phi_ref, eps>| / ||phi_ref||_2
  std::vector<double> chi_eps;  // ||chi_r eps||_2, one per cutoff
  double energy = 0.0;  // 1/2||grad varphi||^2 + 1/2 <|varphi|^2, U*|varphi|^2>
  double phi_hat_l1 = 0.0;
};

/// Energy functional conserved by the Hartree flow, with the kinetic part
/// taken from the solver's kinetic symbol.
inline double hartree_energy(const ComplexField& phi, const PairPotential& u,
                             std::span<const double> kinetic) {
  const SpectralField ph = dft_forward(phi);
  double kin = 0.0;
  for (std::size_t i = 0; i < ph.size(); ++i) kin += kinetic[i] * std::norm(ph[i]);
  kin *= ph.measure();
  std::vector<double> rho(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) rho[i] = std::norm(phi[i]);
  const std::vector<double> v = convolve_real(u, rho);
  double pot = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) pot += rho[i] * v[i];
  return kin + 0.5 * phi.measure() * pot;
}

inline DiagnosticsRecord diagnostics(const MeanFieldState& s, const SplitStepSolver& solver,
                                     std::span<const CutoffFunction> cutoffs) {
  const ComplexField eps = extract_excitation(s);
  DiagnosticsRecord d;
  d.t = s.time;
  d.mass = s.varphi.l2_norm_sq();
  d.eps_l2 = eps.l2_norm();
  d.eps_inf = eps.sup_norm();
  const std::span<const double> kin = solver.kinetic();
  const SpectralField eh = dft_forward(eps);
  double grad = 0.0;
  for (std::size_t i = 0; i < eh.size(); ++i) grad += 2.0 * kin[i] * std::norm(eh[i]);
  d.eps_grad_l2 = std::sqrt(eh.measure() * grad);
  const double ref_norm = s.phi_ref.l2_norm();
  d.p_ref_eps = ref_norm > 0.0 ? std::abs(inner(s.phi_ref, eps)) / ref_norm : 0.0;
  for (const CutoffFunction& chi : cutoffs) {
    double acc = 0.0;
    for (std::size_t i = 0; i < eps.size(); ++i) acc += std::norm(chi.samples[i] * eps[i]);
    d.chi_eps.push_back(std::sqrt(eps.measure() * acc));
  }
  d.energy = hartree_energy(s.varphi, solver.potential(), kin);
  d.phi_hat_l1 = dft_forward(s.varphi).l1_norm();
  return d;
}

/// Splits [0, t_end] into samples spaced by `sample_interval`, each covering
/// an integer number of steps no longer than `dt_max`.
struct StepPlan {
  double dt = 0.0;
  long steps_per_sample = 0;
  long samples = 0;
};

inline StepPlan plan_steps(double t_end, double sample_interval, double dt_max) {
  if (!(t_end >= 0.0) || !(sample_interval > 0.0) || !(dt_max > 0.0)) {
    throw InvalidArgument("t_end, sample_interval and dt must be positive");
  }
  StepPlan p;
  p.steps_per_sample = std::max(1L, static_cast<long>(std::ceil(sample_interval / dt_max - 1e-9)));
  p.dt = sample_interval / static_cast<double>(p.steps_per_sample);
  p.samples = static_cast<long>(std::llround(t_end / sample_interval));
  return p;
}

}  // namespace soundlab

#endif  // SOUNDLAB_MEANFIELD_HPP

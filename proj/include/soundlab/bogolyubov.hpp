#ifndef SOUNDLAB_BOGOLYUBOV_HPP
#define SOUNDLAB_BOGOLYUBOV_HPP

#include <array>
#include <optional>
#include <cmath>
#include <sstream>
#include <vector>

#include "soundlab/errors.hpp"
#include "soundlab/meanfield.hpp"
#include "soundlab/pair_potential.hpp"
#include "soundlab/torus_grid.hpp"

namespace soundlab {

/// |omega_sq| below this is treated as a static (marginal) mode.
inline constexpr double kMarginalTolerance = 1e-12;

enum class ModeClass { oscillatory, unstable, marginal };

using Mat2 = std::array<std::array<Complex, 2>, 2>;
using Vec2 = std::array<Complex, 2>;

/// One momentum pair {k, -k} of the linearized excitation equation.
///
/// The generator H(k) = [[w0 + U^, U^], [-U^, -w0 - U^]] acts on
/// (eta^(k), conj(eta^(-k))). Its eigenvalues are +-omega with
/// omega^2 = w0 (w0 + 2 U^).
struct BogolyubovMode {
  std::size_t index = 0;
  Vec3 k{0.0, 0.0, 0.0};
  double omega0 = 0.0;
  Complex u_hat{0.0, 0.0};
  double omega_sq = 0.0;
  ModeClass classification = ModeClass::oscillatory;

  Mat2 generator() const {
    const Complex a = omega0 + u_hat;
    return {{{a, u_hat}, {-u_hat, -a}}};
  }

  /// Principal root: real and >= 0 for oscillatory modes, +i*sqrt(-omega_sq)
  /// for unstable ones.
  Complex omega() const {
    if (classification == ModeClass::marginal) return {0.0, 0.0};
    if (omega_sq > 0.0) return {std::sqrt(omega_sq), 0.0};
    return {0.0, std::sqrt(-omega_sq)};
  }

  double growth_rate() const {
    return classification == ModeClass::unstable ? std::sqrt(-omega_sq) : 0.0;
  }
};

inline ModeClass classify(double omega_sq) {
  if (std::abs(omega_sq) < kMarginalTolerance) return ModeClass::marginal;
  return omega_sq < 0.0 ? ModeClass::unstable : ModeClass::oscillatory;
}

/// omega(k) from its square; no matrix diagonalization involved.
inline Complex dispersion(double omega0, double u_hat) {
  const double w2 = omega0 * (omega0 + 2.0 * u_hat);
  switch (classify(w2)) {
    case ModeClass::marginal: return {0.0, 0.0};
    case ModeClass::oscillatory: return {std::sqrt(w2), 0.0};
    case ModeClass::unstable: return {0.0, std::sqrt(-w2)};
  }
  return {0.0, 0.0};
}

inline BogolyubovMode make_mode(const PairPotential& u, std::size_t flat,
                                KineticModel model = KineticModel::spectral) {
  BogolyubovMode m;
  m.index = flat;
  m.k = u.grid().wavevector(flat);
  m.omega0 = kinetic_symbol(u.grid(), flat, model);
  m.u_hat = u.hat(flat);
  m.omega_sq = m.omega0 * (m.omega0 + 2.0 * m.u_hat.real());
  m.classification = classify(m.omega_sq);
  return m;
}

inline Complex dispersion(const PairPotential& u, std::size_t flat,
                          KineticModel model = KineticModel::spectral) {
  return make_mode(u, flat, model).omega();
}

/// Bogolyubov sound speed sqrt(U^(0)).
inline double sound_speed(double u_hat_zero) {
  if (!(u_hat_zero > 0.0)) {
    throw InvalidArgument("sound speed needs U^(0) > 0");
  }
  return std::sqrt(u_hat_zero);
}

inline double sound_speed(const PairPotential& u) { return sound_speed(u.hat_zero()); }

/// exp(-i H t) in closed form: cos(wt) I - i sin(wt)/w H, or I - i t H for a
/// static mode (H nilpotent there).
inline Mat2 mode_propagator(const BogolyubovMode& m, double t) {
  const Mat2 h = m.generator();
  Complex c{1.0, 0.0};
  Complex s_over_w{t, 0.0};
  if (m.classification != ModeClass::marginal) {
    const Complex w = m.omega();
    c = std::cos(w * t);
    s_over_w = std::sin(w * t) / w;
  }
  const Complex f = Complex(0.0, -1.0) * s_over_w;
  return {{{c + f * h[0][0], f * h[0][1]}, {f * h[1][0], c + f * h[1][1]}}};
}

inline Vec2 apply(const Mat2& a, const Vec2& v) {
  return {a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]};
}

/// Exact propagation of i d/dt eta = -Delta/2 eta + U*2Re(eta) for time t.
/// Each unordered pair {k, -k} is evolved once as (eta^(k), conj eta^(-k)).
inline ComplexField linear_propagate(const ComplexField& eta0, const PairPotential& u, double t,
                                     KineticModel model = KineticModel::spectral) {
  if (!(eta0.grid() == u.grid())) throw InvalidArgument("grid mismatch in linear_propagate");
  const TorusGrid& g = eta0.grid();
  SpectralField eh = dft_forward(eta0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::size_t j = g.negated_index(i);
    if (j < i) continue;
    const BogolyubovMode m = make_mode(u, i, model);
    const Vec2 out = apply(mode_propagator(m, t), {eh[i], std::conj(eh[j])});
    eh[i] = out[0];
    if (j != i) eh[j] = std::conj(out[1]);
    const bool finite = std::isfinite(out[0].real()) && std::isfinite(out[0].imag()) &&
                        std::isfinite(out[1].real()) && std::isfinite(out[1].imag());
    if (!finite) {
      std::ostringstream msg;
      msg << "linear_propagate: overflow at k=(" << m.k[0] << "," << m.k[1] << "," << m.k[2]
          << "), t=" << t;
      throw NumericalError(msg.str());
    }
  }
  return dft_inverse(eh);
}

struct ModeGrowth {
  std::size_t index = 0;
  Vec3 k{0.0, 0.0, 0.0};
  double growth_rate = 0.0;
};

/// All grid modes with omega_sq < 0, in grid order.
inline std::vector<ModeGrowth> unstable_modes(const PairPotential& u,
                                              KineticModel model = KineticModel::spectral) {
  std::vector<ModeGrowth> out;
  for (std::size_t i = 0; i < u.grid().size(); ++i) {
    const BogolyubovMode m = make_mode(u, i, model);
    if (m.classification == ModeClass::unstable) out.push_back({i, m.k, m.growth_rate()});
  }
  return out;
}

/// Nonzero grid modes with omega0 = -2 U^ (static modes).
inline std::vector<std::size_t> marginal_modes(const PairPotential& u,
                                               KineticModel model = KineticModel::spectral) {
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i < u.grid().size(); ++i) {
    if (make_mode(u, i, model).classification == ModeClass::marginal) out.push_back(i);
  }
  return out;
}

/// Coefficients (c+, c-) of v in the eigenbasis of H(k), c+ belonging to
/// the principal root +omega. Empty for static modes, where H is not
/// diagonalizable.
inline std::optional<Vec2> eigen_coefficients(const BogolyubovMode& m, const Vec2& v) {
  if (m.classification == ModeClass::marginal) return std::nullopt;
  const Complex a = m.omega0 + m.u_hat;
  const Complex b = m.u_hat;
  const Complex w = m.omega();
  // Two algebraically equivalent eigenvector forms; take the better
  // conditioned one for each root.
  auto eigvec = [&](Complex lam) -> Vec2 {
    const Vec2 r1{b, lam - a};
    const Vec2 r2{lam + a, -b};
    const double n1 = std::norm(r1[0]) + std::norm(r1[1]);
    const double n2 = std::norm(r2[0]) + std::norm(r2[1]);
    return n1 >= n2 ? r1 : r2;
  };
  const Vec2 rp = eigvec(w);
  const Vec2 rm = eigvec(-w);
  const Complex det = rp[0] * rm[1] - rm[0] * rp[1];
  if (std::abs(det) == 0.0) return std::nullopt;
  return Vec2{(v[0] * rm[1] - rm[0] * v[1]) / det, (rp[0] * v[1] - v[0] * rp[1]) / det};
}

/// Strang splitting for the linearized equation, independent of the closed
/// form: exact kinetic half-steps around the exact coupling substep
/// eta -> eta - 2i dt U*Re(eta).
class LinearSplitStepper {
 public:
  LinearSplitStepper(PairPotential u, double dt, KineticModel model = KineticModel::spectral)
      : u_(std::move(u)), dt_(dt) {
    detail::require_step(dt);
    const std::vector<double> kin = kinetic_table(u_.grid(), model);
    half_phase_.resize(kin.size());
    for (std::size_t i = 0; i < kin.size(); ++i) half_phase_[i] = std::polar(1.0, -0.5 * dt * kin[i]);
  }

  SpectralField step(SpectralField eh) const {
    for (std::size_t i = 0; i < eh.size(); ++i) eh[i] *= half_phase_[i];
    ComplexField e = dft_inverse(eh);
    std::vector<double> re(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) re[i] = e[i].real();
    const std::vector<double> v = convolve_real(u_, re);
    for (std::size_t i = 0; i < e.size(); ++i) e[i] -= Complex(0.0, 2.0 * dt_ * v[i]);
    eh = dft_forward(e);
    for (std::size_t i = 0; i < eh.size(); ++i) eh[i] *= half_phase_[i];
    return eh;
  }

  double dt() const { return dt_; }

 private:
  PairPotential u_;
  double dt_;
  std::vector<Complex> half_phase_;
};

struct LinearizationComparison {
  double l2_gap = 0.0;        // ||eta_t - eps_t||_2
  double eps_sup = 0.0;       // sup_s ||eps_s||_2
  std::vector<double> eps_norm_history;  // ||eps_s||_2 after each step, s = 0 first
  double mass_drift = 0.0;    // max_s | ||phi_ref + eps_s||^2 / ||phi_ref + eps_0||^2 - 1 |
  double energy_drift = 0.0;  // same for the Hartree energy of phi_ref + eps_s
  ComplexField eps;
  ComplexField eta;
};

/// Runs the nonlinear excitation equation (reference orbital started at 1,
/// torus setting) and the closed-form linear propagation from the same eps0.
inline LinearizationComparison compare_linearization(const ComplexField& eps0,
                                                     const PairPotential& u, double t,
                                                     double dt) {
  if (!(t >= 0.0) || !(dt > 0.0)) throw InvalidArgument("compare_linearization needs t >= 0, dt > 0");
  const long steps = std::max(1L, static_cast<long>(std::ceil(t / dt - 1e-9)));
  const double h = t / static_cast<double>(steps);
  SplitStepSolver solver(u);
  ComplexField eps = eps0;
  ComplexField ref = constant_field(eps0.grid(), 1.0);
  LinearizationComparison out{0.0, eps.l2_norm(), {eps.l2_norm()}, 0.0, 0.0, eps0, eps0};
  const double mass0 = (ref + eps).l2_norm_sq();
  const double energy0 = hartree_energy(ref + eps, u, solver.kinetic());
  if (t > 0.0) {
    for (long s = 0; s < steps; ++s) {
      try {
        eps = epsilon_direct_step(eps, ref, solver, h);
      } catch (const NumericalError&) {
        std::ostringstream msg;
        msg << "compare_linearization: nonfinite excitation at t=" << static_cast<double>(s + 1) * h;
        throw NumericalError(msg.str());
      }
      ref = solver.nonlinear_step(ref, h, u.l1_norm());
      const double n = eps.l2_norm();
      out.eps_norm_history.push_back(n);
      out.eps_sup = std::max(out.eps_sup, n);
      const ComplexField phi = ref + eps;
      out.mass_drift = std::max(out.mass_drift, std::abs(phi.l2_norm_sq() / mass0 - 1.0));
      out.energy_drift = std::max(
          out.energy_drift,
          std::abs(hartree_energy(phi, u, solver.kinetic()) - energy0) / std::abs(energy0));
    }
  }
  out.eta = linear_propagate(eps0, u, t);
  out.l2_gap = (out.eta - eps).l2_norm();
  out.eps = std::move(eps);
  return out;
}

}  // namespace soundlab

#endif  // SOUNDLAB_BOGOLYUBOV_HPP

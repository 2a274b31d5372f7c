#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "soundlab/bogolyubov.hpp"

using namespace soundlab;

namespace {

ComplexField random_field(const TorusGrid& g, std::uint64_t seed, bool real_only = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  ComplexField f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = Complex(n(rng), real_only ? 0.0 : n(rng));
  return f;
}

// Smooth, band-limited random field (modes with |m| <= 6 only).
ComplexField smooth_field(const TorusGrid& g, std::uint64_t seed) {
  SpectralField fh = dft_forward(random_field(g, seed));
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (std::abs(g.mode_number(static_cast<int>(i))) > 6) fh[i] = 0.0;
  }
  return dft_inverse(fh);
}

// Transform table equal to `value` on modes with |k|^2 < kmax_sq, zero elsewhere.
std::vector<double> low_mode_table(const TorusGrid& g, double value, double kmax_sq) {
  std::vector<double> t(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.wavenumber_sq(i) < kmax_sq) t[i] = value;
  }
  return t;
}

}  // namespace

TEST(Dispersion, ClosedFormValues) {
  EXPECT_NEAR(std::abs(dispersion(0.5, 1.0) - Complex(std::sqrt(1.25), 0.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(dispersion(0.5, -1.0) - Complex(0.0, std::sqrt(0.75))), 0.0, 1e-15);
  EXPECT_EQ(dispersion(2.0, -1.0), Complex(0.0, 0.0));
}

TEST(Dispersion, FreeCaseIsHalfKSquared) {
  const TorusGrid g = make_grid(1, 32, 10.0);
  const PairPotential u = zero_potential(g);
  for (std::size_t i = 1; i < g.size(); ++i) {
    EXPECT_NEAR(dispersion(u, i).real(), 0.5 * g.wavenumber_sq(i), 1e-12);
    EXPECT_EQ(dispersion(u, i).imag(), 0.0);
  }
}

TEST(Dispersion, GeneratorEigenvaluesArePlusMinusOmega) {
  for (int sign : {1, -1}) {
    const TorusGrid g = make_grid(2, 12, 9.0);
    const PairPotential u = bump_potential(g, 1.5, 1.2, sign);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const BogolyubovMode m = make_mode(u, i);
      if (m.classification == ModeClass::marginal) continue;
      const Mat2 h = m.generator();
      EXPECT_EQ(h[0][0] + h[1][1], Complex(0.0, 0.0));
      Eigen::Matrix2cd a;
      a << h[0][0], h[0][1], h[1][0], h[1][1];
      const Eigen::Vector2cd ev = Eigen::ComplexEigenSolver<Eigen::Matrix2cd>(a).eigenvalues();
      const Complex w = m.omega();
      const double d1 = std::abs(ev(0) - w) + std::abs(ev(1) + w);
      const double d2 = std::abs(ev(0) + w) + std::abs(ev(1) - w);
      EXPECT_LT(std::min(d1, d2), 1e-10);
    }
  }
}

TEST(Dispersion, UnstableExactlyWhenKineticBelowMinusTwoUHat) {
  const TorusGrid g = make_grid(1, 64, 16.0);
  const PairPotential u = bump_potential(g, 2.0, 1.0, -1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const BogolyubovMode m = make_mode(u, i);
    if (m.classification == ModeClass::marginal) continue;
    const bool expect = m.omega0 > 0.0 && m.omega0 < -2.0 * m.u_hat.real();
    EXPECT_EQ(m.classification == ModeClass::unstable, expect) << "index " << i;
  }
}

TEST(SoundSpeed, ScaledBumpGivesTwo) {
  const TorusGrid g = make_grid(1, 128, 16.0);
  const double base = bump_potential(g, 1.0, 1.0, 1).hat_zero();
  EXPECT_NEAR(sound_speed(bump_potential(g, 4.0 / base, 1.0, 1)), 2.0, 1e-12);
}

TEST(SoundSpeed, VanishingTransformGivesZero) {
  EXPECT_LT(sound_speed(1e-20), 1e-9);
  EXPECT_THROW(sound_speed(-1.0), InvalidArgument);
  EXPECT_THROW(sound_speed(0.0), InvalidArgument);
}

TEST(SoundSpeed, SmallKSlopeMatches) {
  const TorusGrid g = make_grid(1, 256, 64.0);
  const PairPotential u = bump_potential(g, 1.0, 1.0, 1);
  const double c = sound_speed(u);
  for (std::size_t i = 1; i <= 3; ++i) {
    const double v = dispersion(u, i).real() / std::sqrt(g.wavenumber_sq(i));
    EXPECT_LT(std::abs(v - c) / c, 0.02);
  }
}

TEST(LinearPropagate, FreeEvolutionKeepsModuli) {
  const TorusGrid g = make_grid(1, 32, 8.0);
  const PairPotential u = zero_potential(g);
  const ComplexField eta0 = random_field(g, 1);
  const SpectralField a = dft_forward(eta0), b = dft_forward(linear_propagate(eta0, u, 3.7));
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(std::abs(a[i]), std::abs(b[i]), 1e-12);
}

TEST(LinearPropagate, SemigroupProperty) {
  const TorusGrid g = make_grid(2, 12, 6.0);
  for (int sign : {1, -1}) {
    const PairPotential u = bump_potential(g, 0.8, 1.0, sign);
    const ComplexField eta0 = random_field(g, 2);
    const ComplexField once = linear_propagate(eta0, u, 1.3);
    const ComplexField twice = linear_propagate(linear_propagate(eta0, u, 0.5), u, 0.8);
    EXPECT_LT((once - twice).l2_norm() / once.l2_norm(), 1e-9);
  }
}

TEST(LinearPropagate, RealDataIsTimeReversalSymmetric) {
  // For real eta_0 the flow satisfies eta_{-t} = conj(eta_t).
  const TorusGrid g = make_grid(1, 64, 16.0);
  for (int sign : {1, -1}) {
    const PairPotential u = bump_potential(g, 1.0, 1.0, sign);
    const ComplexField eta0 = random_field(g, 3, true);
    const ComplexField fwd = linear_propagate(eta0, u, 1.5);
    const ComplexField bwd = linear_propagate(eta0, u, -1.5);
    for (std::size_t i = 0; i < g.size(); ++i) {
      EXPECT_LT(std::abs(bwd[i] - std::conj(fwd[i])), 1e-10 * std::max(1.0, std::abs(fwd[i])));
    }
  }
}

TEST(LinearPropagate, MatchesStepIntegrationAtSecondOrder) {
  const TorusGrid g = make_grid(1, 64, 16.0);
  const PairPotential u = bump_potential(g, 1.0, 1.0, 1);
  const ComplexField eta0 = smooth_field(g, 4);
  const ComplexField exact = linear_propagate(eta0, u, 1.0);
  auto error = [&](double dt) {
    const LinearSplitStepper stepper(u, dt);
    SpectralField eh = dft_forward(eta0);
    for (long s = 0; s < std::lround(1.0 / dt); ++s) eh = stepper.step(std::move(eh));
    return (dft_inverse(eh) - exact).l2_norm();
  };
  const double e1 = error(0.02), e2 = error(0.01);
  EXPECT_LT(e2, 1e-3 * eta0.l2_norm());
  EXPECT_NEAR(e1 / e2, 4.0, 0.2);
}

TEST(LinearPropagate, UnstableModeGrowsAtTheRate) {
  const TorusGrid g = make_grid(1, 64, 16.0);
  const PairPotential u = bump_potential(g, 2.0, 1.0, -1);
  const std::vector<ModeGrowth> unstable = unstable_modes(u);
  ASSERT_FALSE(unstable.empty());
  for (const ModeGrowth& mg : unstable) {
    SpectralField eh(g);
    eh[mg.index] = 1.0;
    const ComplexField eta0 = dft_inverse(eh);
    // Late enough that the decaying branch is negligible.
    const double t1 = 5.0 / mg.growth_rate, t2 = 10.0 / mg.growth_rate;
    const double a1 = std::abs(dft_forward(linear_propagate(eta0, u, t1))[mg.index]);
    const double a2 = std::abs(dft_forward(linear_propagate(eta0, u, t2))[mg.index]);
    const double rate = std::log(a2 / a1) / (t2 - t1);
    EXPECT_LT(std::abs(rate - mg.growth_rate) / mg.growth_rate, 0.05);
  }
}

TEST(LinearPropagate, StaticModeGrowsLinearly) {
  // L = 5 pi puts |k| = 2 on the grid (m = 5); U^ = -1 there makes it static.
  const TorusGrid g = make_grid(1, 32, 5.0 * std::numbers::pi);
  const PairPotential u = potential_from_transform(g, low_mode_table(g, -1.0, 4.5));
  const std::vector<std::size_t> marginal = marginal_modes(u);
  ASSERT_EQ(marginal.size(), 2u);
  const std::size_t i = std::min(marginal[0], marginal[1]);
  EXPECT_NEAR(g.wavenumber_sq(i), 4.0, 1e-12);

  SpectralField eh(g);
  eh[i] = 1.0;
  const ComplexField eta0 = dft_inverse(eh);
  // Static modes evolve by I - i t H: the amplitude is affine in t.
  std::vector<Complex> amp;
  for (double t : {1.0, 2.0, 3.0, 4.0}) amp.push_back(dft_forward(linear_propagate(eta0, u, t))[i]);
  for (std::size_t j = 2; j < amp.size(); ++j) {
    EXPECT_LT(std::abs((amp[j] - amp[j - 1]) - (amp[1] - amp[0])), 1e-9);
  }
  EXPECT_GT(std::abs(amp[1] - amp[0]), 0.1);

  // Independent check against the step integrator.
  const LinearSplitStepper stepper(u, 0.001);
  SpectralField sh = dft_forward(eta0);
  for (int s = 0; s < 2000; ++s) sh = stepper.step(std::move(sh));
  EXPECT_LT((dft_inverse(sh) - linear_propagate(eta0, u, 2.0)).l2_norm(), 1e-5);
}

TEST(UnstableModes, RepulsiveHasNone) {
  const TorusGrid g = make_grid(2, 16, 12.0);
  EXPECT_TRUE(unstable_modes(bump_potential(g, 3.0, 1.0, 1)).empty());
}

TEST(UnstableModes, ConstantNegativeTransformOnLowModes) {
  const TorusGrid g = make_grid(1, 64, 16.0);
  const PairPotential u = potential_from_transform(g, low_mode_table(g, -1.0, 16.0));
  std::set<std::size_t> found;
  for (const ModeGrowth& m : unstable_modes(u)) found.insert(m.index);
  std::set<std::size_t> expected;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double w0 = 0.5 * g.wavenumber_sq(i);
    if (w0 > 0.0 && w0 < 2.0) expected.insert(i);
  }
  EXPECT_EQ(found, expected);
  EXPECT_FALSE(expected.empty());
}

TEST(EigenCoefficients, ReconstructTheVector) {
  const TorusGrid g = make_grid(1, 32, 8.0);
  for (int sign : {1, -1}) {
    const PairPotential u = bump_potential(g, 2.0, 1.0, sign);
    for (std::size_t i = 1; i < 6; ++i) {
      const BogolyubovMode m = make_mode(u, i);
      const Vec2 v{Complex(0.3, -0.2), Complex(-1.1, 0.4)};
      const auto c = eigen_coefficients(m, v);
      ASSERT_TRUE(c.has_value());
      // Propagating v for time t multiplies c+ by exp(-i omega t).
      const double t = 0.7;
      const auto ct = eigen_coefficients(m, soundlab::apply(mode_propagator(m, t), v));
      ASSERT_TRUE(ct.has_value());
      const Complex w = m.omega();
      EXPECT_LT(std::abs((*ct)[0] - (*c)[0] * std::exp(Complex(0.0, -1.0) * w * t)), 1e-12);
      EXPECT_LT(std::abs((*ct)[1] - (*c)[1] * std::exp(Complex(0.0, 1.0) * w * t)), 1e-12);
    }
  }
}

TEST(CompareLinearization, ZeroExcitationHasZeroGap) {
  const TorusGrid g = make_grid(1, 64, 16.0);
  const PairPotential u = bump_potential(g, 1.0, 1.0, 1);
  const LinearizationComparison c = compare_linearization(ComplexField(g), u, 1.0, 0.01);
  EXPECT_EQ(c.l2_gap, 0.0);
  EXPECT_EQ(c.eps_sup, 0.0);
  EXPECT_EQ(c.eps_norm_history.size(), 101u);
}

TEST(CompareLinearization, GapIsQuadraticInAmplitude) {
  const TorusGrid g = make_grid(1, 128, 16.0);
  const PairPotential u = bump_potential(g, 1.0, 1.0, 1);
  std::vector<double> lx, ly;
  for (double a : {0.01, 0.02, 0.04, 0.08}) {
    const MeanFieldState s = initial_state(g, u, {a, 1.0}, ReferenceMode::torus);
    const ComplexField eps0 = extract_excitation(s);
    const LinearizationComparison c = compare_linearization(eps0, u, 2.0, 0.005);
    lx.push_back(std::log(eps0.l2_norm()));
    ly.push_back(std::log(c.l2_gap));
  }
  for (std::size_t i = 1; i < ly.size(); ++i) EXPECT_GT(ly[i], ly[i - 1]);
  const double slope = (ly.back() - ly.front()) / (lx.back() - lx.front());
  EXPECT_GT(slope, 1.7);
  EXPECT_LT(slope, 2.3);
}

TEST(CompareLinearization, RejectsBadArguments) {
  const TorusGrid g = make_grid(1, 16, 4.0);
  const PairPotential u = zero_potential(g);
  EXPECT_THROW(compare_linearization(ComplexField(g), u, -1.0, 0.1), InvalidArgument);
  EXPECT_THROW(compare_linearization(ComplexField(g), u, 1.0, 0.0), InvalidArgument);
}

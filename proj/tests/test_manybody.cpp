#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "soundlab/first_quantized.hpp"
#include "soundlab/manybody.hpp"

using namespace soundlab;

namespace {

std::mt19937_64& rng() {
  static std::mt19937_64 r(20240611);
  return r;
}

Eigen::VectorXcd random_orbital(int m) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXcd v(m);
  for (int i = 0; i < m; ++i) v(i) = Complex(n(rng()), n(rng()));
  return v;
}

FockVector random_state(int modes, int particles) {
  auto basis = std::make_shared<const FockBasis>(modes, particles);
  FockVector psi = zero_vector(basis);
  psi.coeffs = random_orbital(static_cast<int>(basis->dimension()));
  psi.coeffs.normalize();
  return psi;
}

RingLattice ring(int sites, double spacing, std::vector<double> u) {
  return RingLattice{sites, spacing, std::move(u)};
}

RingLattice bump_ring(int sites, double length, double strength, double range) {
  const double h = length / sites;
  std::vector<double> u(sites);
  for (int d = 0; d < sites; ++d) u[d] = strength * mollifier(std::min(d, sites - d) * h / range);
  return ring(sites, h, std::move(u));
}

Eigen::MatrixXcd dense(const LatticeHamiltonian& h) {
  return Eigen::MatrixXd(h.matrix).cast<Complex>();
}

}  // namespace

TEST(FockBasis, DimensionAndRanking) {
  const FockBasis b(4, 3);
  EXPECT_EQ(b.dimension(), 20u);
  for (std::size_t i = 0; i < b.dimension(); ++i) EXPECT_EQ(b.rank(b.state(i)), i);
  EXPECT_EQ(b.state(0), (Occupation{3, 0, 0, 0}));
  EXPECT_THROW(FockBasis(20, 20), InvalidArgument);
}

TEST(Hamiltonian, SingleParticleFreeSpectrum) {
  const int m = 8;
  const double h = 0.5;
  const LatticeHamiltonian ham = build_hamiltonian(ring(m, h, std::vector<double>(m, 0.0)), 1, 1.0);
  Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Eigen::MatrixXd(ham.matrix)).eigenvalues();
  std::vector<double> expected;
  for (int j = 0; j < m; ++j) expected.push_back((1.0 - std::cos(2.0 * std::numbers::pi * j / m)) / (h * h));
  std::sort(expected.begin(), expected.end());
  for (int j = 0; j < m; ++j) EXPECT_NEAR(ev(j), expected[j], 1e-12);
}

TEST(Hamiltonian, TwoParticlesTwoSitesByHand) {
  const double h = 0.75, rho = 2.0, u0 = 1.3, u1 = 0.4;
  const LatticeHamiltonian ham = build_hamiltonian(ring(2, h, {u0, u1}), 2, rho);
  ASSERT_EQ(ham.basis->dimension(), 3u);  // (2,0), (1,1), (0,2)
  const double t = 1.0 / (h * h);
  Eigen::Matrix3d expected;
  expected << 2 * t + u0 / rho, -std::sqrt(2.0) * t, 0.0,
              -std::sqrt(2.0) * t, 2 * t + u1 / rho, -std::sqrt(2.0) * t,
              0.0, -std::sqrt(2.0) * t, 2 * t + u0 / rho;
  EXPECT_LT((Eigen::MatrixXd(ham.matrix) - expected).cwiseAbs().maxCoeff(), 1e-14);

  // Same matrix from the first-quantized operator restricted to symmetric states.
  const TensorSpace space(2, 2);
  const Eigen::MatrixXcd hfq = space.hamiltonian(ring(2, h, {u0, u1}), rho);
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) {
      FockVector ea = zero_vector(ham.basis), eb = zero_vector(ham.basis);
      ea.coeffs(a) = 1.0;
      eb.coeffs(b) = 1.0;
      const Complex elem = space.embed(ea).dot(hfq * space.embed(eb));
      EXPECT_NEAR(std::abs(elem - expected(a, b)), 0.0, 1e-12);
    }
  }
}

TEST(Hamiltonian, MatchesFirstQuantizedAndIsHermitian) {
  for (auto [m, n] : {std::pair{3, 3}, std::pair{4, 2}, std::pair{4, 4}}) {
    const RingLattice lat = bump_ring(m, 2.0, 1.7, 0.9);
    const LatticeHamiltonian ham = build_hamiltonian(lat, n, 1.5);
    const Eigen::MatrixXd hm(ham.matrix);
    EXPECT_EQ((hm - hm.transpose()).cwiseAbs().maxCoeff(), 0.0);
    const TensorSpace space(m, n);
    const Eigen::MatrixXcd hfq = space.hamiltonian(lat, 1.5);
    const FockVector psi = random_state(m, n);
    FockVector hpsi = psi;
    hpsi.coeffs = apply_hamiltonian(ham, psi.coeffs);
    EXPECT_LT((space.embed(hpsi) - hfq * space.embed(psi)).norm(), 1e-10);
  }
}

TEST(Evolve, ZeroTimeIsIdentity) {
  const LatticeHamiltonian ham = build_hamiltonian(bump_ring(5, 1.0, 2.0, 0.4), 3, 3.0);
  const FockVector psi = random_state(5, 3);
  EXPECT_LT((evolve(psi, ham, 0.0).coeffs - psi.coeffs).norm(), 1e-14);
  EXPECT_LT((krylov_evolve(ham, psi, 0.0).coeffs - psi.coeffs).norm(), 1e-14);
}

TEST(Evolve, MomentumEigenstatePhases) {
  const int m = 6;
  const double h = 0.4;
  const LatticeHamiltonian ham = build_hamiltonian(ring(m, h, std::vector<double>(m, 0.0)), 1, 1.0);
  for (int j = 0; j < m; ++j) {
    FockVector psi = zero_vector(ham.basis);
    for (int x = 0; x < m; ++x) {
      Occupation occ(m, 0);
      occ[x] = 1;
      psi.coeffs(ham.basis->rank(occ)) = std::polar(1.0 / std::sqrt(m), 2.0 * std::numbers::pi * j * x / m);
    }
    const double e = (1.0 - std::cos(2.0 * std::numbers::pi * j / m)) / (h * h);
    const double t = 0.83;
    const FockVector out = EigenPropagator(ham).evolve(psi, t);
    EXPECT_LT((out.coeffs - std::polar(1.0, -e * t) * psi.coeffs).norm(), 1e-12);
  }
}

TEST(Evolve, DenseAndKrylovAgree) {
  const LatticeHamiltonian ham = build_hamiltonian(bump_ring(6, 1.0, 2.0, 0.45), 4, 4.0);
  const FockVector psi = random_state(6, 4);
  const EigenPropagator prop(ham);
  for (double t : {0.1, 0.7, 2.0}) {
    const FockVector a = prop.evolve(psi, t);
    const FockVector b = krylov_evolve(ham, psi, t);
    EXPECT_LT((a.coeffs - b.coeffs).norm(), 1e-8);
    EXPECT_NEAR(a.norm(), 1.0, 1e-10);
    EXPECT_NEAR(b.norm(), 1.0, 1e-10);
    EXPECT_NEAR(energy(a, ham), energy(psi, ham), 1e-10);
    EXPECT_NEAR(energy(b, ham), energy(psi, ham), 1e-10);
  }
}

TEST(ProductState, SingleParticleIsOrbital) {
  const Eigen::VectorXcd phi = random_orbital(5);
  const FockVector psi = product_state(phi, 1);
  for (int x = 0; x < 5; ++x) {
    Occupation occ(5, 0);
    occ[x] = 1;
    EXPECT_LT(std::abs(psi.coeffs(psi.basis->rank(occ)) - phi(x) / phi.norm()), 1e-14);
  }
}

TEST(ProductState, OccupationAndDensityMatrix) {
  const Eigen::VectorXcd phi = random_orbital(4);
  const FockVector psi = product_state(phi, 3);
  EXPECT_NEAR(psi.norm(), 1.0, 1e-12);
  const SparseComplex n_phi = one_body_operator(*psi.basis, projectors(phi).p);
  EXPECT_NEAR((psi.coeffs.dot(n_phi * psi.coeffs)).real(), 3.0, 1e-12);
  const Eigen::MatrixXcd expected = phi * phi.adjoint() / phi.squaredNorm();
  EXPECT_LT((one_particle_rdm(psi) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DensityMatrix, EqualMixtureOfOrthogonalPieces) {
  auto basis = std::make_shared<const FockBasis>(3, 2);
  FockVector psi = zero_vector(basis);
  psi.coeffs(basis->rank(Occupation{2, 0, 0})) = 1.0 / std::sqrt(2.0);
  psi.coeffs(basis->rank(Occupation{0, 2, 0})) = 1.0 / std::sqrt(2.0);
  Eigen::MatrixXcd expected = Eigen::MatrixXcd::Zero(3, 3);
  expected(0, 0) = expected(1, 1) = 0.5;
  EXPECT_LT((one_particle_rdm(psi) - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(DensityMatrix, TraceHermitianPositiveAndMatchesTensorForm) {
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 2 + trial % 3, n = 1 + trial % 4;
    const FockVector psi = random_state(m, n);
    const Eigen::MatrixXcd g = one_particle_rdm(psi);
    EXPECT_NEAR(g.trace().real(), 1.0, 1e-12);
    EXPECT_LT((g - g.adjoint()).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(g).eigenvalues().minCoeff(), -1e-12);
    const TensorSpace space(m, n);
    EXPECT_LT((g - space.rdm(space.embed(psi))).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Projectors, ActionOnOrbital) {
  const Eigen::VectorXcd phi = random_orbital(5);
  const OneParticleProjectors pq = projectors(phi);
  EXPECT_LT((pq.p * phi - phi).norm(), 1e-13);
  EXPECT_LT((pq.q * phi).norm(), 1e-13);
  const Eigen::VectorXcd v = random_orbital(5);
  EXPECT_LT((pq.p * v + pq.q * v - v).norm(), 1e-14);
  EXPECT_THROW(projectors(Eigen::VectorXcd::Zero(3)), InvalidArgument);
}

TEST(BadParticles, ProductStateIsAllGood) {
  const Eigen::VectorXcd phi = random_orbital(4);
  const FockVector psi = product_state(phi, 3);
  EXPECT_LT((pk_projector(phi, 0, psi).coeffs - psi.coeffs).norm(), 1e-12);
  for (int k = 1; k <= 3; ++k) EXPECT_LT(pk_projector(phi, k, psi).norm(), 1e-12);
}

TEST(BadParticles, CompletenessOrthogonalityAndSpectrum) {
  const Eigen::VectorXcd phi = random_orbital(4);
  const FockVector psi = random_state(4, 4);
  const BadParticleDecomposition dec(phi, psi.basis);
  const std::vector<Eigen::VectorXcd> sec = dec.sectors(psi);
  Eigen::VectorXcd sum = Eigen::VectorXcd::Zero(psi.coeffs.size());
  double norm_sq = 0.0;
  for (int k = 0; k <= 4; ++k) {
    sum += sec[k];
    norm_sq += sec[k].squaredNorm();
    EXPECT_LT((dec.bad_number_operator() * sec[k] - static_cast<double>(k) * sec[k]).norm(), 1e-12);
    EXPECT_LT((dec.project(FockVector{psi.basis, sec[k]}, k).coeffs - sec[k]).norm(), 1e-12);
    for (int j = 0; j < k; ++j) EXPECT_LT(std::abs(sec[j].dot(sec[k])), 1e-12);
  }
  EXPECT_LT((sum - psi.coeffs).norm(), 1e-12);
  EXPECT_NEAR(norm_sq, 1.0, 1e-12);
  EXPECT_EQ(dec.project(psi, 5).norm(), 0.0);
  EXPECT_EQ(dec.project(psi, -1).norm(), 0.0);
}

TEST(BadParticles, MatchesFirstQuantizedSubsetConstruction) {
  for (auto [m, n] : {std::pair{2, 3}, std::pair{3, 3}, std::pair{4, 4}}) {
    const Eigen::VectorXcd phi = random_orbital(m);
    const FockVector psi = random_state(m, n);
    const TensorSpace space(m, n);
    const OneParticleProjectors pq = projectors(phi);
    for (int k = 0; k <= n; ++k) {
      const Eigen::VectorXcd lhs = space.embed(pk_projector(phi, k, psi));
      EXPECT_LT((lhs - space.bad_projector(pq, k) * space.embed(psi)).norm(), 1e-10);
    }
  }
}

TEST(CountingWeights, ValuesAndShifts) {
  const CountingWeight m = m_weight(8, 2.5);
  EXPECT_EQ(m.at(0), 0.0);
  EXPECT_EQ(m.at(static_cast<int>(std::ceil(2.5)) + 1), 1.0);
  EXPECT_NEAR(m.at(2), 0.8, 1e-15);
  EXPECT_EQ(m.at(8), 1.0);
  EXPECT_EQ(m.at(9), 0.0);
  EXPECT_EQ(m.shifted(2).at(1), m.at(3));
  EXPECT_EQ(m.shifted(-1).at(0), 0.0);
  EXPECT_THROW(m_weight(4, 0.0), InvalidArgument);
}

TEST(CountingWeights, LinearWeightVanishesOnProductState) {
  const Eigen::VectorXcd phi = random_orbital(4);
  const FockVector psi = product_state(phi, 4);
  CountingWeight w;
  for (int k = 0; k <= 4; ++k) w.values.push_back(k / 4.0);
  EXPECT_LT(weighted_counting(phi, w, psi).norm(), 1e-12);
}

TEST(CountingWeights, ProductRuleAndCommutation) {
  const Eigen::VectorXcd phi = random_orbital(3);
  const FockVector psi = random_state(3, 4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CountingWeight v, w, vw;
  for (int k = 0; k <= 4; ++k) {
    v.values.push_back(u(rng()));
    w.values.push_back(u(rng()));
    vw.values.push_back(v.values.back() * w.values.back());
  }
  const FockVector a = weighted_counting(phi, v, weighted_counting(phi, w, psi));
  EXPECT_LT((a.coeffs - weighted_counting(phi, vw, psi).coeffs).norm(), 1e-12);
  for (int k = 0; k <= 4; ++k) {
    const FockVector wp = weighted_counting(phi, w, pk_projector(phi, k, psi));
    const FockVector pw = pk_projector(phi, k, weighted_counting(phi, w, psi));
    EXPECT_LT((wp.coeffs - pw.coeffs).norm(), 1e-12);
  }
}

TEST(TildePsi, ProductStateIsUnchanged) {
  const Eigen::VectorXcd phi = random_orbital(4);
  const FockVector psi = product_state(phi, 3);
  EXPECT_LT((tilde_psi(psi, phi, 1.5).coeffs - psi.coeffs).norm(), 1e-12);
}

TEST(TildePsi, HighSectorIsRemoved) {
  const Eigen::VectorXcd phi = random_orbital(4);
  const FockVector psi = pk_projector(phi, 3, random_state(4, 3));
  EXPECT_LT(tilde_psi(psi, phi, 2.0).norm(), 1e-12);
}

TEST(TildePsi, TruncationBoundedByCountingExpectation) {
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::VectorXcd phi = random_orbital(4);
    const FockVector psi = random_state(4, 4);
    const double rho = 0.5 + 0.25 * (trial % 12);
    const FockVector tilde = tilde_psi(psi, phi, rho);
    const double gap = (psi.coeffs - tilde.coeffs).squaredNorm();
    const BadParticleDecomposition dec(phi, psi.basis);
    double high = 0.0;
    const std::vector<Eigen::VectorXcd> sec = dec.sectors(psi);
    for (int k = 0; k <= 4; ++k) {
      if (k > rho) high += sec[k].squaredNorm();
    }
    EXPECT_NEAR(gap, high, 1e-12);
    EXPECT_LE(gap, dec.expectation(psi, m_weight(4, rho)) + 1e-12);
  }
}

TEST(DensityComparisons, ExactProductOfReferenceHasZeroDistances) {
  const TorusGrid g = make_grid(1, 6, 2.0);
  const PairPotential u = bump_potential(g, 1.0, 0.5, 1);
  const MeanFieldState st = initial_state(g, u, {0.0, 0.2}, ReferenceMode::torus);
  const FockVector psi = product_state(to_site_vector(st.varphi), 4);
  const DensityComparison d = density_comparisons(psi, st, 2.0);
  EXPECT_LT(d.d_micro, 1e-12);
  EXPECT_LT(d.d_tilde, 1e-12);
  EXPECT_LT(d.psi_gap_sq, 1e-24);
  EXPECT_LT(d.m_expect, 1e-24);
}

TEST(DensityComparisons, InitialCountingExpectationVanishes) {
  const TorusGrid g = make_grid(1, 6, 1.0);
  const PairPotential u = bump_potential(g, 2.0, 0.45, 1);
  const MeanFieldState st = initial_state(g, u, {0.3, 0.1}, ReferenceMode::torus);
  const FockVector psi = product_state(to_site_vector(st.varphi), 4);
  const DensityComparison d = density_comparisons(psi, st, 4.0);
  EXPECT_LT(d.m_expect, 1e-24);
  EXPECT_GT(d.d_micro, 0.0);
  EXPECT_THROW(density_comparisons(psi, initial_state(make_grid(1, 8, 1.0),
                                                      bump_potential(make_grid(1, 8, 1.0), 1.0, 0.3, 1),
                                                      {0.1, 0.1}, ReferenceMode::torus),
                                   4.0),
               InvalidArgument);
}

TEST(DensityComparisons, TruncationInequalityAlongEvolution) {
  const TorusGrid g = make_grid(1, 6, 1.0);
  const PairPotential u = bump_potential(g, 2.0, 0.45, 1);
  const MeanFieldState s0 = initial_state(g, u, {0.3, 0.1}, ReferenceMode::torus);
  const LatticeHamiltonian ham = build_hamiltonian(ring_lattice(u), 4, 4.0);
  const FockVector psi0 = product_state(to_site_vector(s0.varphi), 4);
  const EigenPropagator prop(ham);
  SplitStepSolver solver(u, KineticModel::lattice);
  MeanFieldState s = s0;
  for (int k = 1; k <= 10; ++k) {
    for (int j = 0; j < 100; ++j) s = step(std::move(s), solver, 0.001);
    const DensityComparison d = density_comparisons(prop.evolve(psi0, 0.1 * k), s, 4.0);
    EXPECT_LE(d.psi_gap_sq, d.m_expect + 1e-12);
    EXPECT_GT(d.m_expect, 0.0);
    EXPECT_LE(d.d_tilde, d.d_micro + 2.0 * g.volume() * std::sqrt(d.psi_gap_sq) + 1e-12);
  }
}

TEST(SecondQuantization, OneBodyOperatorMatchesTensorSum) {
  const int m = 3, n = 3;
  const TensorSpace space(m, n);
  const Eigen::MatrixXcd a = Eigen::MatrixXcd::Random(m, m);
  Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(space.dimension(), space.dimension());
  for (int j = 0; j < n; ++j) sum += space.on_particle(a, j);
  const FockVector psi = random_state(m, n);
  FockVector out = psi;
  out.coeffs = one_body_operator(*psi.basis, a) * psi.coeffs;
  EXPECT_LT((space.embed(out) - sum * space.embed(psi)).norm(), 1e-10);
}

TEST(SecondQuantization, EmbeddingIsIsometricAndSymmetric) {
  const FockVector psi = random_state(3, 4);
  const TensorSpace space(3, 4);
  const Eigen::VectorXcd v = space.embed(psi);
  EXPECT_NEAR(v.norm(), 1.0, 1e-12);
  EXPECT_LT((space.symmetrizer() * v - v).norm(), 1e-12);
}

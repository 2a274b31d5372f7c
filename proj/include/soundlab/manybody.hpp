#ifndef SOUNDLAB_MANYBODY_HPP
#define SOUNDLAB_MANYBODY_HPP

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "soundlab/errors.hpp"
#include "soundlab/fock.hpp"
#include "soundlab/meanfield.hpp"
#include "soundlab/pair_potential.hpp"
#include "soundlab/torus_grid.hpp"

namespace soundlab {

/// Dense eigendecomposition is used up to this dimension; beyond it the
/// Krylov stepper takes over.
inline constexpr std::size_t kDenseEvolveLimit = 3000;

/// Ring of M sites with spacing h and pair potential values U(d*h) for
/// separations d = 0..M-1 (minimum image, so U[d] == U[M-d]).
struct RingLattice {
  int sites = 0;
  double spacing = 1.0;
  std::vector<double> pair_potential;

  double side_length() const { return sites * spacing; }
};

inline RingLattice ring_lattice(const PairPotential& u) {
  const TorusGrid& g = u.grid();
  if (g.dim() != 1) throw InvalidArgument("many-body lattice must be one-dimensional");
  const std::span<const double> s = u.samples();
  return RingLattice{g.points_per_dim(), g.spacing(), std::vector<double>(s.begin(), s.end())};
}

/// Lattice version of H = -1/2 sum_j Delta_j + (1/rho) sum_{j<k} U(x_j - x_k).
///
/// Kinetic part: nearest-neighbour finite-difference Laplacian with periodic
/// wrap. Interaction: (1/2rho) sum_{x,y} U(x-y) a+_x a+_y a_y a_x, which is
/// diagonal with value (1/2rho)(sum_{x,y} U(x-y) n_x n_y - U(0) N).
struct LatticeHamiltonian {
  std::shared_ptr<const FockBasis> basis;
  SparseReal matrix;
  double rho = 1.0;
};

inline LatticeHamiltonian build_hamiltonian(const RingLattice& lat, int particles, double rho) {
  if (!(rho > 0.0)) throw InvalidArgument("density rho must be > 0");
  const int m = lat.sites;
  if (m < 2 || static_cast<int>(lat.pair_potential.size()) != m) {
    throw InvalidArgument("ring lattice needs >= 2 sites and one potential value per separation");
  }
  auto basis = std::make_shared<const FockBasis>(m, particles);
  const double hop = -0.5 / (lat.spacing * lat.spacing);
  const double onsite = 1.0 / (lat.spacing * lat.spacing);
  std::vector<Eigen::Triplet<double>> trip;
  Occupation work;
  for (std::size_t s = 0; s < basis->dimension(); ++s) {
    const Occupation& occ = basis->state(s);
    double diag = onsite * particles;
    double pair = 0.0;
    for (int x = 0; x < m; ++x) {
      if (occ[x] == 0) continue;
      for (int y = 0; y < m; ++y) {
        pair += lat.pair_potential[(x - y + m) % m] * occ[x] * occ[y];
      }
    }
    diag += (pair - lat.pair_potential[0] * particles) / (2.0 * rho);
    trip.emplace_back(static_cast<int>(s), static_cast<int>(s), diag);
    for (int x = 0; x < m; ++x) {
      if (occ[x] == 0) continue;
      for (int step : {1, -1}) {
        const int y = (x + step + m) % m;
        work = occ;
        const double ax = std::sqrt(static_cast<double>(work[x]));
        --work[x];
        const double ay = std::sqrt(static_cast<double>(work[y] + 1));
        ++work[y];
        trip.emplace_back(static_cast<int>(basis->rank(work)), static_cast<int>(s), hop * ax * ay);
      }
    }
  }
  const auto dim = static_cast<Eigen::Index>(basis->dimension());
  SparseReal h(dim, dim);
  h.setFromTriplets(trip.begin(), trip.end());
  return LatticeHamiltonian{std::move(basis), std::move(h), rho};
}

/// H psi for the real Hamiltonian acting on a complex vector.
inline Eigen::VectorXcd apply_hamiltonian(const LatticeHamiltonian& h, const Eigen::VectorXcd& v) {
  const Eigen::VectorXd re = h.matrix * v.real();
  const Eigen::VectorXd im = h.matrix * v.imag();
  Eigen::VectorXcd out(v.size());
  out.real() = re;
  out.imag() = im;
  return out;
}

/// exp(-iHt) through a full eigendecomposition, computed once.
class EigenPropagator {
 public:
  explicit EigenPropagator(const LatticeHamiltonian& h) : basis_(h.basis) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(h.matrix));
    if (es.info() != Eigen::Success) throw NumericalError("Hamiltonian eigendecomposition failed");
    energies_ = es.eigenvalues();
    vectors_ = es.eigenvectors();
  }

  FockVector evolve(const FockVector& psi, double t) const {
    const Eigen::VectorXd re = vectors_.transpose() * psi.coeffs.real();
    const Eigen::VectorXd im = vectors_.transpose() * psi.coeffs.imag();
    Eigen::VectorXd out_re(re.size()), out_im(re.size());
    for (Eigen::Index i = 0; i < re.size(); ++i) {
      const Complex c = Complex(re(i), im(i)) * std::polar(1.0, -energies_(i) * t);
      out_re(i) = c.real();
      out_im(i) = c.imag();
    }
    Eigen::VectorXcd out(re.size());
    out.real() = vectors_ * out_re;
    out.imag() = vectors_ * out_im;
    return FockVector{basis_, std::move(out)};
  }

  const Eigen::VectorXd& energies() const { return energies_; }

 private:
  std::shared_ptr<const FockBasis> basis_;
  Eigen::VectorXd energies_;
  Eigen::MatrixXd vectors_;
};

/// Short-step Lanczos propagation of exp(-iHt) psi. Each step's size is
/// halved until the a-posteriori error estimate
/// ||psi|| beta_m |e_m^T exp(-iT tau) e_1| falls below `tol`.
inline FockVector krylov_evolve(const LatticeHamiltonian& h, const FockVector& psi, double t,
                                double tol = 1e-10, int krylov_dim = 30) {
  const Eigen::Index dim = psi.coeffs.size();
  const int m_max = static_cast<int>(std::min<Eigen::Index>(krylov_dim, dim));
  Eigen::VectorXcd v = psi.coeffs;
  const double direction = t < 0.0 ? -1.0 : 1.0;
  double remaining = std::abs(t);
  int halvings_total = 0;
  while (remaining > 0.0) {
    const double beta0 = v.norm();
    if (beta0 == 0.0) break;
    Eigen::MatrixXcd basis(dim, m_max);
    std::vector<double> alpha, beta;
    basis.col(0) = v / beta0;
    double beta_last = 0.0;
    int m = 0;
    for (int j = 0; j < m_max; ++j) {
      Eigen::VectorXcd w = apply_hamiltonian(h, basis.col(j));
      const double a = basis.col(j).dot(w).real();
      alpha.push_back(a);
      // Full reorthogonalization, twice.
      for (int pass = 0; pass < 2; ++pass) {
        for (int i = 0; i <= j; ++i) w -= basis.col(i).dot(w) * basis.col(i);
      }
      const double b = w.norm();
      m = j + 1;
      beta_last = b;
      if (b < 1e-13 * std::max(1.0, std::abs(a))) {
        beta_last = 0.0;
        break;
      }
      if (j + 1 < m_max) {
        beta.push_back(b);
        basis.col(j + 1) = w / b;
      }
    }
    Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      tri(i, i) = alpha[i];
      if (i + 1 < m) tri(i, i + 1) = tri(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
    double tau = remaining;
    Eigen::VectorXcd coeff;
    for (int attempt = 0;; ++attempt) {
      Eigen::VectorXcd phase(m);
      for (int i = 0; i < m; ++i) {
        phase(i) = std::polar(1.0, -direction * es.eigenvalues()(i) * tau) *
                   es.eigenvectors()(0, i);
      }
      coeff = es.eigenvectors().cast<Complex>() * phase;
      const double err = beta0 * beta_last * std::abs(coeff(m - 1));
      if (err <= tol) break;
      tau *= 0.5;
      if (attempt > 60 || ++halvings_total > 100000) {
        std::ostringstream msg;
        msg << "krylov_evolve: step size collapsed at remaining time " << remaining;
        throw NumericalError(msg.str());
      }
    }
    v = beta0 * (basis.leftCols(m) * coeff);
    remaining -= tau;
    if (remaining < 1e-14 * std::abs(t)) remaining = 0.0;
  }
  return FockVector{psi.basis, v};
}

/// exp(-iHt) psi; dense eigendecomposition for small bases, Krylov beyond.
inline FockVector evolve(const FockVector& psi, const LatticeHamiltonian& h, double t) {
  if (psi.basis->dimension() <= kDenseEvolveLimit) return EigenPropagator(h).evolve(psi, t);
  return krylov_evolve(h, psi, t);
}

inline double energy(const FockVector& psi, const LatticeHamiltonian& h) {
  return psi.coeffs.dot(apply_hamiltonian(h, psi.coeffs)).real();
}

/// One-particle projectors p = |phi><phi|/||phi||^2 and q = 1 - p.
struct OneParticleProjectors {
  Eigen::MatrixXcd p;
  Eigen::MatrixXcd q;
};

inline OneParticleProjectors projectors(const Eigen::VectorXcd& phi) {
  const double n2 = phi.squaredNorm();
  if (!(n2 > 0.0)) throw InvalidArgument("projectors: orbital must be nonzero");
  OneParticleProjectors pq;
  pq.p = phi * phi.adjoint() / n2;
  pq.q = Eigen::MatrixXcd::Identity(phi.size(), phi.size()) - pq.p;
  return pq;
}

/// Weight w on {0..N} with shift d: w_d(k) = w(k + d), zero when k + d
/// falls outside {0..N}.
struct CountingWeight {
  std::vector<double> values;
  int shift = 0;

  double at(int k) const {
    const int j = k + shift;
    if (j < 0 || j >= static_cast<int>(values.size())) return 0.0;
    return values[j];
  }

  CountingWeight shifted(int d) const { return CountingWeight{values, shift + d}; }
};

/// m(k) = k/rho for k <= rho, 1 for k > rho.
inline CountingWeight m_weight(int particles, double rho) {
  if (!(rho > 0.0)) throw InvalidArgument("m_weight needs rho > 0");
  CountingWeight w;
  for (int k = 0; k <= particles; ++k) w.values.push_back(k <= rho ? k / rho : 1.0);
  return w;
}

/// Decomposition of Fock vectors into sectors with exactly k bad particles
/// relative to an orbital phi.
///
/// P_k is the spectral projector of n_bad = dGamma(q) = N - a+_phi a_phi onto
/// eigenvalue k, applied as the Lagrange product
/// prod_{j != k} (n_bad - j)/(k - j) over j in {0..N}.
class BadParticleDecomposition {
 public:
  BadParticleDecomposition(const Eigen::VectorXcd& phi, std::shared_ptr<const FockBasis> basis)
      : basis_(std::move(basis)) {
    if (phi.size() != basis_->modes()) throw InvalidArgument("orbital size does not match modes");
    n_bad_ = one_body_operator(*basis_, projectors(phi).q);
  }

  int particles() const { return basis_->particles(); }

  /// P_k psi for k = 0..N.
  std::vector<Eigen::VectorXcd> sectors(const FockVector& psi) const {
    check(psi);
    const int n = particles();
    std::vector<Eigen::VectorXcd> out;
    out.reserve(n + 1);
    for (int k = 0; k <= n; ++k) out.push_back(project(psi.coeffs, k));
    return out;
  }

  /// P_k psi; the zero vector for k outside {0..N}.
  FockVector project(const FockVector& psi, int k) const {
    check(psi);
    if (k < 0 || k > particles()) return zero_vector(basis_);
    return FockVector{basis_, project(psi.coeffs, k)};
  }

  /// Weighted counting operator sum_k w_d(k) P_k applied to psi.
  FockVector apply(const FockVector& psi, const CountingWeight& w) const {
    const std::vector<Eigen::VectorXcd> sec = sectors(psi);
    FockVector out = zero_vector(basis_);
    for (int k = 0; k <= particles(); ++k) out.coeffs += w.at(k) * sec[k];
    return out;
  }

  double expectation(const FockVector& psi, const CountingWeight& w) const {
    const std::vector<Eigen::VectorXcd> sec = sectors(psi);
    double s = 0.0;
    for (int k = 0; k <= particles(); ++k) s += w.at(k) * sec[k].squaredNorm();
    return s;
  }

  const SparseComplex& bad_number_operator() const { return n_bad_; }

 private:
  void check(const FockVector& psi) const {
    if (psi.basis->modes() != basis_->modes() || psi.basis->particles() != basis_->particles()) {
      throw InvalidArgument("Fock vector basis does not match decomposition");
    }
  }

  Eigen::VectorXcd project(const Eigen::VectorXcd& v, int k) const {
    Eigen::VectorXcd out = v;
    for (int j = 0; j <= particles(); ++j) {
      if (j == k) continue;
      out = (n_bad_ * out - static_cast<double>(j) * out) / static_cast<double>(k - j);
    }
    return out;
  }

  std::shared_ptr<const FockBasis> basis_;
  SparseComplex n_bad_;
};

/// P_k^phi psi.
inline FockVector pk_projector(const Eigen::VectorXcd& phi, int k, const FockVector& psi) {
  return BadParticleDecomposition(phi, psi.basis).project(psi, k);
}

/// sum_k w_d(k) P_k^phi psi.
inline FockVector weighted_counting(const Eigen::VectorXcd& phi, const CountingWeight& w,
                                    const FockVector& psi) {
  return BadParticleDecomposition(phi, psi.basis).apply(psi, w);
}

/// Psi~ = sum_{0 <= k <= rho} P_k^phi Psi.
inline FockVector tilde_psi(const FockVector& psi, const Eigen::VectorXcd& phi, double rho) {
  const BadParticleDecomposition dec(phi, psi.basis);
  const std::vector<Eigen::VectorXcd> sec = dec.sectors(psi);
  FockVector out = zero_vector(psi.basis);
  for (int k = 0; k <= dec.particles() && k <= rho; ++k) out.coeffs += sec[k];
  return out;
}

/// Largest |eigenvalue| of a Hermitian matrix (the operator norm).
inline double spectral_norm_hermitian(const Eigen::MatrixXcd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

struct DensityComparison {
  double d_micro = 0.0;    // ||rho_micro - rho_macro||
  double d_tilde = 0.0;    // ||rho~_micro - rho_macro||
  double psi_gap_sq = 0.0; // ||Psi - Psi~||^2
  double m_expect = 0.0;   // <Psi, m^ Psi>
};

/// Compares the many-body state with the mean-field state on the same ring.
///
/// rho_micro = Lambda q_ref gamma q_ref (gamma the trace-||Psi||^2 reduced
/// density matrix), rho_macro = |eps><eps|, and rho~_micro uses Psi~ in
/// place of Psi. Counting operators use the Hartree orbital varphi_t.
inline DensityComparison density_comparisons(const FockVector& psi, const MeanFieldState& mf,
                                             double rho) {
  const TorusGrid& g = mf.varphi.grid();
  if (g.dim() != 1 || g.points_per_dim() != psi.basis->modes()) {
    throw InvalidArgument("density_comparisons: mean-field grid does not match lattice");
  }
  const Eigen::VectorXcd phi = to_site_vector(mf.varphi);
  const Eigen::VectorXcd ref = to_site_vector(mf.phi_ref);
  const Eigen::VectorXcd eps = to_site_vector(extract_excitation(mf));
  const Eigen::MatrixXcd q_ref = projectors(ref).q;
  const double lambda = g.volume();
  const Eigen::MatrixXcd macro = eps * eps.adjoint();

  const BadParticleDecomposition dec(phi, psi.basis);
  const std::vector<Eigen::VectorXcd> sec = dec.sectors(psi);
  const CountingWeight m = m_weight(dec.particles(), rho);
  DensityComparison out;
  FockVector tilde = zero_vector(psi.basis);
  for (int k = 0; k <= dec.particles(); ++k) {
    const double w = sec[k].squaredNorm();
    out.m_expect += m.at(k) * w;
    if (k <= rho) {
      tilde.coeffs += sec[k];
    } else {
      out.psi_gap_sq += w;
    }
  }
  const Eigen::MatrixXcd micro = lambda * q_ref * one_particle_rdm(psi) * q_ref;
  const Eigen::MatrixXcd micro_tilde = lambda * q_ref * one_particle_rdm(tilde) * q_ref;
  out.d_micro = spectral_norm_hermitian(micro - macro);
  out.d_tilde = spectral_norm_hermitian(micro_tilde - macro);
  return out;
}

}  // namespace soundlab

#endif  // SOUNDLAB_MANYBODY_HPP

#ifndef SOUNDLAB_FOCK_HPP
#define SOUNDLAB_FOCK_HPP

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "soundlab/errors.hpp"
#include "soundlab/torus_grid.hpp"

namespace soundlab {

/// Largest occupation-number basis the many-body lab will build.
inline constexpr std::size_t kMaxFockDimension = 200000;

using Occupation = std::vector<int>;

/// All occupation tuples (n_0, ..., n_{M-1}) with sum N, in lexicographic
/// order of decreasing n_0 (index 0 is (N, 0, ..., 0)). Ranking uses the
/// combinatorial number system, so no lookup table is stored.
class FockBasis {
 public:
  FockBasis(int modes, int particles) : modes_(modes), particles_(particles) {
    if (modes < 1) throw InvalidArgument("Fock basis needs at least one mode");
    if (particles < 0) throw InvalidArgument("particle number must be >= 0");
    // counts_[r][m] = number of ways to put r bosons into m modes.
    counts_.assign(particles + 1, std::vector<double>(modes + 1, 0.0));
    for (int r = 0; r <= particles; ++r) {
      counts_[r][0] = r == 0 ? 1.0 : 0.0;
      for (int m = 1; m <= modes; ++m) {
        counts_[r][m] = counts_[r][m - 1] + (r > 0 ? counts_[r - 1][m] : 0.0);
      }
    }
    const double dim = counts_[particles][modes];
    if (dim > static_cast<double>(kMaxFockDimension)) {
      throw InvalidArgument("Fock dimension " + std::to_string(static_cast<long long>(dim)) +
                            " exceeds guard " + std::to_string(kMaxFockDimension));
    }
    states_.reserve(static_cast<std::size_t>(dim));
    Occupation occ(modes, 0);
    enumerate(0, particles, occ);
  }

  int modes() const { return modes_; }
  int particles() const { return particles_; }
  std::size_t dimension() const { return states_.size(); }
  const Occupation& state(std::size_t i) const { return states_[i]; }

  std::size_t rank(std::span<const int> occ) const {
    std::size_t idx = 0;
    int remaining = particles_;
    for (int j = 0; j + 1 < modes_; ++j) {
      // States with a larger occupation in mode j come first.
      for (int v = remaining; v > occ[j]; --v) {
        idx += static_cast<std::size_t>(counts_[remaining - v][modes_ - j - 1]);
      }
      remaining -= occ[j];
    }
    return idx;
  }

 private:
  void enumerate(int mode, int remaining, Occupation& occ) {
    if (mode == modes_ - 1) {
      occ[mode] = remaining;
      states_.push_back(occ);
      return;
    }
    for (int v = remaining; v >= 0; --v) {
      occ[mode] = v;
      enumerate(mode + 1, remaining - v, occ);
    }
    occ[mode] = 0;
  }

  int modes_;
  int particles_;
  std::vector<std::vector<double>> counts_;
  std::vector<Occupation> states_;
};

/// N-boson state: coefficients in the occupation-number basis.
struct FockVector {
  std::shared_ptr<const FockBasis> basis;
  Eigen::VectorXcd coeffs;

  double norm() const { return coeffs.norm(); }
};

inline FockVector zero_vector(std::shared_ptr<const FockBasis> basis) {
  const auto dim = static_cast<Eigen::Index>(basis->dimension());
  return FockVector{std::move(basis), Eigen::VectorXcd::Zero(dim)};
}

using SparseReal = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using SparseComplex = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

/// Second quantization of a one-particle operator A (M x M, site basis):
/// dGamma(A) = sum_{x,y} A(y,x) a+_y a_x.
inline SparseComplex one_body_operator(const FockBasis& basis, const Eigen::MatrixXcd& a) {
  const int m = basis.modes();
  if (a.rows() != m || a.cols() != m) throw InvalidArgument("one-body operator has wrong size");
  std::vector<Eigen::Triplet<Complex>> trip;
  Occupation work;
  for (std::size_t s = 0; s < basis.dimension(); ++s) {
    const Occupation& occ = basis.state(s);
    for (int x = 0; x < m; ++x) {
      if (occ[x] == 0) continue;
      work = occ;
      const double ax = std::sqrt(static_cast<double>(work[x]));
      --work[x];
      for (int y = 0; y < m; ++y) {
        const Complex elem = a(y, x);
        if (elem == Complex(0.0, 0.0)) continue;
        const double ay = std::sqrt(static_cast<double>(work[y] + 1));
        ++work[y];
        trip.emplace_back(static_cast<int>(basis.rank(work)), static_cast<int>(s), elem * ax * ay);
        --work[y];
      }
    }
  }
  const auto dim = static_cast<Eigen::Index>(basis.dimension());
  SparseComplex op(dim, dim);
  op.setFromTriplets(trip.begin(), trip.end());
  return op;
}

/// gamma(x, y) = <Psi, a+_y a_x Psi> / N in the site basis. Trace equals
/// ||Psi||^2; gamma is the kernel of Tr_{2..N} |Psi><Psi|.
inline Eigen::MatrixXcd one_particle_rdm(const FockVector& psi) {
  const FockBasis& basis = *psi.basis;
  const int m = basis.modes();
  Eigen::MatrixXcd gamma = Eigen::MatrixXcd::Zero(m, m);
  if (basis.particles() == 0) return gamma;
  Occupation work;
  for (std::size_t s = 0; s < basis.dimension(); ++s) {
    const Complex cs = psi.coeffs(static_cast<Eigen::Index>(s));
    if (cs == Complex(0.0, 0.0)) continue;
    const Occupation& occ = basis.state(s);
    for (int x = 0; x < m; ++x) {
      if (occ[x] == 0) continue;
      work = occ;
      const double ax = std::sqrt(static_cast<double>(work[x]));
      --work[x];
      for (int y = 0; y < m; ++y) {
        const double ay = std::sqrt(static_cast<double>(work[y] + 1));
        ++work[y];
        const auto t = static_cast<Eigen::Index>(basis.rank(work));
        gamma(x, y) += std::conj(psi.coeffs(t)) * cs * ax * ay;
        --work[y];
      }
    }
  }
  return gamma / static_cast<double>(basis.particles());
}

/// Site-basis amplitudes sqrt(h) f(x) of a one-particle field, so that the
/// Euclidean inner product equals the L^2 inner product on the grid.
inline Eigen::VectorXcd to_site_vector(const ComplexField& f) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(f.size()));
  const double s = std::sqrt(f.measure());
  for (std::size_t i = 0; i < f.size(); ++i) v(static_cast<Eigen::Index>(i)) = s * f[i];
  return v;
}

/// (a+_phi)^N |vac> / sqrt(N!) with phi normalized: coefficient of |n> is
/// sqrt(N!/prod n_x!) prod phi_x^{n_x}.
inline FockVector product_state(const Eigen::VectorXcd& phi,
                                std::shared_ptr<const FockBasis> basis) {
  const double nrm = phi.norm();
  if (!(nrm > 0.0)) throw InvalidArgument("product_state: orbital must be nonzero");
  if (phi.size() != basis->modes()) throw InvalidArgument("product_state: orbital size != modes");
  const int particles = basis->particles();
  const Eigen::VectorXcd u = phi / nrm;
  FockVector out = zero_vector(basis);
  const double log_nfact = std::lgamma(particles + 1.0);
  for (std::size_t s = 0; s < basis->dimension(); ++s) {
    const Occupation& occ = basis->state(s);
    double log_mult = log_nfact;
    Complex amp{1.0, 0.0};
    for (int x = 0; x < basis->modes(); ++x) {
      log_mult -= std::lgamma(occ[x] + 1.0);
      for (int r = 0; r < occ[x]; ++r) amp *= u(x);
    }
    out.coeffs(static_cast<Eigen::Index>(s)) = std::exp(0.5 * log_mult) * amp;
  }
  return out;
}

inline FockVector product_state(const Eigen::VectorXcd& phi, int particles) {
  return product_state(
      phi, std::make_shared<const FockBasis>(static_cast<int>(phi.size()), particles));
}

}  // namespace soundlab

#endif  // SOUNDLAB_FOCK_HPP

#ifndef SOUNDLAB_FIRST_QUANTIZED_HPP
#define SOUNDLAB_FIRST_QUANTIZED_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "soundlab/errors.hpp"
#include "soundlab/fock.hpp"
#include "soundlab/manybody.hpp"

namespace soundlab {

/// Largest labelled-particle space (M^N) the tensor representation builds.
inline constexpr std::size_t kMaxTensorDimension = 256;

/// Labelled N-particle space (C^M)^{tensor N}. Particle 1 is the most
/// significant digit of the flat index. Operators are dense matrices; this
/// representation exists to check identities that act on labelled particles.
class TensorSpace {
 public:
  TensorSpace(int modes, int particles) : modes_(modes), particles_(particles) {
    if (modes < 1 || particles < 1) throw InvalidArgument("tensor space needs M, N >= 1");
    dim_ = 1;
    for (int i = 0; i < particles; ++i) {
      dim_ *= static_cast<std::size_t>(modes);
      if (dim_ > kMaxTensorDimension) {
        throw InvalidArgument("tensor space M^N exceeds " + std::to_string(kMaxTensorDimension));
      }
    }
  }

  int modes() const { return modes_; }
  int particles() const { return particles_; }
  Eigen::Index dimension() const { return static_cast<Eigen::Index>(dim_); }

  std::vector<int> digits(std::size_t flat) const {
    std::vector<int> d(particles_);
    for (int j = particles_ - 1; j >= 0; --j) {
      d[j] = static_cast<int>(flat % modes_);
      flat /= modes_;
    }
    return d;
  }

  std::size_t flatten(const std::vector<int>& d) const {
    std::size_t f = 0;
    for (int j = 0; j < particles_; ++j) f = f * modes_ + d[j];
    return f;
  }

  /// Tensor product of one M x M factor per particle.
  Eigen::MatrixXcd kron(const std::vector<Eigen::MatrixXcd>& factors) const {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Ones(1, 1);
    for (const Eigen::MatrixXcd& f : factors) {
      Eigen::MatrixXcd next(out.rows() * f.rows(), out.cols() * f.cols());
      for (Eigen::Index i = 0; i < out.rows(); ++i) {
        for (Eigen::Index j = 0; j < out.cols(); ++j) {
          next.block(i * f.rows(), j * f.cols(), f.rows(), f.cols()) = out(i, j) * f;
        }
      }
      out = std::move(next);
    }
    return out;
  }

  /// A acting on particle j (0-based), identity elsewhere.
  Eigen::MatrixXcd on_particle(const Eigen::MatrixXcd& a, int j) const {
    std::vector<Eigen::MatrixXcd> f(particles_, Eigen::MatrixXcd::Identity(modes_, modes_));
    f[j] = a;
    return kron(f);
  }

  /// Multiplication by Y(x_1).
  Eigen::MatrixXcd multiply_one(const Eigen::VectorXcd& y) const {
    Eigen::VectorXcd diag(dimension());
    for (std::size_t s = 0; s < dim_; ++s) diag(static_cast<Eigen::Index>(s)) = y(digits(s)[0]);
    return diag.asDiagonal();
  }

  /// Multiplication by Z(x_1, x_2).
  Eigen::MatrixXcd multiply_two(const Eigen::MatrixXcd& z) const {
    if (particles_ < 2) throw InvalidArgument("two-body multiplication needs N >= 2");
    Eigen::VectorXcd diag(dimension());
    for (std::size_t s = 0; s < dim_; ++s) {
      const std::vector<int> d = digits(s);
      diag(static_cast<Eigen::Index>(s)) = z(d[0], d[1]);
    }
    return diag.asDiagonal();
  }

  /// Orthogonal projector onto symmetric tensors: average over permutations.
  Eigen::MatrixXcd symmetrizer() const {
    std::vector<int> perm(particles_);
    std::iota(perm.begin(), perm.end(), 0);
    Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(dimension(), dimension());
    int count = 0;
    do {
      for (std::size_t f = 0; f < dim_; ++f) {
        const std::vector<int> d = digits(f);
        std::vector<int> pd(particles_);
        for (int j = 0; j < particles_; ++j) pd[j] = d[perm[j]];
        s(static_cast<Eigen::Index>(flatten(pd)), static_cast<Eigen::Index>(f)) += 1.0;
      }
      ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return s / static_cast<double>(count);
  }

  /// P_k = sum over k-subsets S of prod_{j in S} q_j prod_{j not in S} p_j;
  /// zero for k outside {0..N}.
  Eigen::MatrixXcd bad_projector(const OneParticleProjectors& pq, int k) const {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dimension(), dimension());
    if (k < 0 || k > particles_) return out;
    for (unsigned mask = 0; mask < (1u << particles_); ++mask) {
      if (std::popcount(mask) != k) continue;
      std::vector<Eigen::MatrixXcd> f;
      for (int j = 0; j < particles_; ++j) f.push_back((mask >> j) & 1u ? pq.q : pq.p);
      out += kron(f);
    }
    return out;
  }

  /// sum_k w_d(k) P_k.
  Eigen::MatrixXcd counting(const std::vector<Eigen::MatrixXcd>& pk, const CountingWeight& w) const {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dimension(), dimension());
    for (int k = 0; k <= particles_; ++k) out += w.at(k) * pk[k];
    return out;
  }

  /// Symmetric tensor of a Fock vector: the component on each ordered tuple
  /// with occupations n is c_n sqrt(prod n_x! / N!).
  Eigen::VectorXcd embed(const FockVector& psi) const {
    const FockBasis& b = *psi.basis;
    if (b.modes() != modes_ || b.particles() != particles_) throw InvalidArgument("basis mismatch");
    Eigen::VectorXcd out(dimension());
    Occupation occ(modes_);
    for (std::size_t f = 0; f < dim_; ++f) {
      std::fill(occ.begin(), occ.end(), 0);
      for (int d : digits(f)) ++occ[d];
      double log_w = -std::lgamma(particles_ + 1.0);
      for (int n : occ) log_w += std::lgamma(n + 1.0);
      out(static_cast<Eigen::Index>(f)) = psi.coeffs(static_cast<Eigen::Index>(b.rank(occ))) *
                                          std::exp(0.5 * log_w);
    }
    return out;
  }

  /// First-quantized lattice Hamiltonian, same discretization as
  /// build_hamiltonian.
  Eigen::MatrixXcd hamiltonian(const RingLattice& lat, double rho) const {
    const int m = modes_;
    Eigen::MatrixXcd kin = Eigen::MatrixXcd::Zero(m, m);
    const double h2 = lat.spacing * lat.spacing;
    for (int x = 0; x < m; ++x) {
      kin(x, x) += 1.0 / h2;
      kin((x + 1) % m, x) += -0.5 / h2;
      kin((x - 1 + m) % m, x) += -0.5 / h2;
    }
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dimension(), dimension());
    for (int j = 0; j < particles_; ++j) h += on_particle(kin, j);
    for (std::size_t f = 0; f < dim_; ++f) {
      const std::vector<int> d = digits(f);
      double v = 0.0;
      for (int a = 0; a < particles_; ++a) {
        for (int b = a + 1; b < particles_; ++b) v += lat.pair_potential[(d[a] - d[b] + m) % m];
      }
      h(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(f)) += v / rho;
    }
    return h;
  }

  /// gamma(x, y) = sum_rest Psi(x, rest) conj Psi(y, rest).
  Eigen::MatrixXcd rdm(const Eigen::VectorXcd& psi) const {
    const Eigen::Index rest = dimension() / modes_;
    Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(modes_, modes_);
    for (int x = 0; x < modes_; ++x) {
      for (int y = 0; y < modes_; ++y) {
        g(x, y) = psi.segment(y * rest, rest).dot(psi.segment(x * rest, rest));
      }
    }
    return g;
  }

 private:
  int modes_;
  int particles_;
  std::size_t dim_ = 1;
};

struct IdentityCheck {
  std::string name;
  int instances = 0;
  double max_violation = 0.0;  // largest residual (or inequality excess)
  bool passed = true;
};

struct Lemma1Report {
  std::vector<IdentityCheck> checks;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const IdentityCheck& c) { return c.passed; });
  }
};

namespace detail {

inline Eigen::VectorXcd random_vector(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = Complex(g(rng), g(rng));
  return v;
}

inline CountingWeight random_weight(std::mt19937_64& rng, int particles) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CountingWeight w;
  for (int k = 0; k <= particles; ++k) w.values.push_back(u(rng));
  return w;
}

inline void record(IdentityCheck& c, double violation, double tol) {
  ++c.instances;
  c.max_violation = std::max(c.max_violation, violation);
  if (!(violation <= tol)) c.passed = false;
}

}  // namespace detail

/// Checks the counting-operator algebra on random symmetric states, random
/// orbitals, weights and multiplication operators, for one (N, M).
///
/// Items: product rule v^w^ = (vw)^ = w^v^; [w^, p_j] = [w^, q_j] = 0;
/// [w^, P_k] = 0; (n^)^2 = (1/N) sum_j q_j for n(k) = sqrt(k/N);
/// ||w^ q_1 Psi|| = ||w^ n^ Psi||; ||w^ q_1 q_2 Psi|| <= sqrt(N/(N-1)) ||w^ n^2 Psi||;
/// the one- and two-body pull-through formulas with shifted weights.
inline Lemma1Report lemma1_suite(int particles, int modes, int trials, std::uint64_t seed,
                                 double tol = 1e-10) {
  const TensorSpace space(modes, particles);
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXcd sym = space.symmetrizer();
  const int n = particles;

  Lemma1Report rep;
  rep.checks = {{"hat-multiplication"}, {"hat-pq-commutation"}, {"hat-Pk-commutation"},
                {"n-squared-identity"}, {"q1-n-norm-equality"}, {"q1q2-n2-norm-inequality"},
                {"pull-through"}};
  for (int trial = 0; trial < trials; ++trial) {
    const OneParticleProjectors pq = projectors(detail::random_vector(rng, modes));
    std::vector<Eigen::MatrixXcd> pk;
    for (int k = 0; k <= n; ++k) pk.push_back(space.bad_projector(pq, k));
    Eigen::VectorXcd psi = sym * detail::random_vector(rng, space.dimension());
    psi.normalize();
    const CountingWeight w = detail::random_weight(rng, n);
    const CountingWeight v = detail::random_weight(rng, n);
    CountingWeight vw;
    for (int k = 0; k <= n; ++k) vw.values.push_back(v.values[k] * w.values[k]);
    const Eigen::MatrixXcd what = space.counting(pk, w);
    const Eigen::MatrixXcd vhat = space.counting(pk, v);
    const Eigen::MatrixXcd vwhat = space.counting(pk, vw);

    detail::record(rep.checks[0],
                   std::max((vhat * (what * psi) - vwhat * psi).norm(),
                            (what * (vhat * psi) - vwhat * psi).norm()),
                   tol);

    double comm = 0.0;
    for (int j = 0; j < n; ++j) {
      const Eigen::MatrixXcd pj = space.on_particle(pq.p, j);
      const Eigen::MatrixXcd qj = space.on_particle(pq.q, j);
      comm = std::max(comm, (what * (pj * psi) - pj * (what * psi)).norm());
      comm = std::max(comm, (what * (qj * psi) - qj * (what * psi)).norm());
    }
    detail::record(rep.checks[1], comm, tol);

    double comm_pk = 0.0;
    for (int k = 0; k <= n; ++k) {
      comm_pk = std::max(comm_pk, (what * (pk[k] * psi) - pk[k] * (what * psi)).norm());
    }
    detail::record(rep.checks[2], comm_pk, tol);

    CountingWeight nw;
    for (int k = 0; k <= n; ++k) nw.values.push_back(std::sqrt(static_cast<double>(k) / n));
    const Eigen::MatrixXcd nhat = space.counting(pk, nw);
    Eigen::MatrixXcd qsum = Eigen::MatrixXcd::Zero(space.dimension(), space.dimension());
    for (int j = 0; j < n; ++j) qsum += space.on_particle(pq.q, j);
    const Eigen::MatrixXcd n2 = nhat * nhat;
    detail::record(rep.checks[3], (n2 - qsum / static_cast<double>(n)).norm(), tol);

    const Eigen::MatrixXcd q1 = space.on_particle(pq.q, 0);
    detail::record(rep.checks[4],
                   std::abs((what * (q1 * psi)).norm() - (what * (nhat * psi)).norm()), tol);

    if (n >= 2) {
      const Eigen::MatrixXcd q2 = space.on_particle(pq.q, 1);
      const double lhs = (what * (q1 * (q2 * psi))).norm();
      const double rhs = std::sqrt(static_cast<double>(n) / (n - 1)) * (what * (n2 * psi)).norm();
      detail::record(rep.checks[5], std::max(0.0, lhs - rhs), tol);
    }

    // Operators are applied right to left on vectors; no dense products.
    double pull = 0.0;
    const Eigen::MatrixXcd y = space.multiply_one(detail::random_vector(rng, modes));
    const Eigen::MatrixXcd p1 = space.on_particle(pq.p, 0);
    const std::array<const Eigen::MatrixXcd*, 2> a{&p1, &q1};
    for (int j = 0; j < 2; ++j) {
      for (int l = 0; l < 2; ++l) {
        const Eigen::MatrixXcd wd = space.counting(pk, w.shifted(j - l));
        const Eigen::VectorXcd lhs = what * (*a[j] * (y * (*a[l] * psi)));
        const Eigen::VectorXcd rhs = *a[j] * (y * (*a[l] * (wd * psi)));
        pull = std::max(pull, (lhs - rhs).norm());
      }
    }
    if (n >= 2) {
      Eigen::MatrixXcd zmat(modes, modes);
      for (int r = 0; r < modes; ++r) zmat.row(r) = detail::random_vector(rng, modes).transpose();
      const Eigen::MatrixXcd z = space.multiply_two(zmat);
      const Eigen::MatrixXcd p2 = space.on_particle(pq.p, 1);
      const Eigen::MatrixXcd q2 = space.on_particle(pq.q, 1);
      // b_0 = p1 p2, b_1 = p1 q2, b_2 = q1 q2
      const std::array<std::pair<const Eigen::MatrixXcd*, const Eigen::MatrixXcd*>, 3> b{
          {{&p1, &p2}, {&p1, &q2}, {&q1, &q2}}};
      auto apply_b = [&](int j, const Eigen::VectorXcd& x) -> Eigen::VectorXcd {
        return *b[j].first * (*b[j].second * x);
      };
      for (int j = 0; j < 3; ++j) {
        for (int l = 0; l < 3; ++l) {
          const Eigen::MatrixXcd wd = space.counting(pk, w.shifted(j - l));
          const Eigen::VectorXcd lhs = what * apply_b(j, z * apply_b(l, psi));
          const Eigen::VectorXcd rhs = apply_b(j, z * apply_b(l, wd * psi));
          pull = std::max(pull, (lhs - rhs).norm());
        }
      }
    }
    detail::record(rep.checks[6], pull, tol);
  }
  return rep;
}

}  // namespace soundlab

#endif  // SOUNDLAB_FIRST_QUANTIZED_HPP

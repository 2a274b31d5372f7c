#ifndef SOUNDLAB_PAIR_POTENTIAL_HPP
#define SOUNDLAB_PAIR_POTENTIAL_HPP

#include <cmath>
#include <vector>

#include "soundlab/errors.hpp"
#include "soundlab/torus_grid.hpp"

namespace soundlab {

/// Real pair potential U sampled on a torus, together with its
/// unnormalized transform U^(k) = h^dim sum_x U(x) e^{-ik.x}.
///
/// U^ carries no (2*pi)^{-dim/2}: it is the multiplier of the convolution,
/// (U*f)^ = U^ f^, and the coupling in the linearized excitation equation.
class PairPotential {
 public:
  PairPotential(TorusGrid grid, std::vector<double> samples, double range,
                double strength)
      : grid_(std::move(grid)),
        samples_(std::move(samples)),
        range_(range),
        strength_(strength) {
    if (samples_.size() != grid_.size()) {
      throw InvalidArgument("potential samples do not match grid");
    }
    double l1 = 0.0;
    for (double u : samples_) l1 += std::abs(u);
    l1_norm_ = grid_.cell_volume() * l1;

    std::vector<Complex> data(samples_.begin(), samples_.end());
    detail::transform_axes(grid_, data, -1);
    for (Complex& v : data) v *= grid_.cell_volume();
    hat_ = std::move(data);
  }

  const TorusGrid& grid() const { return grid_; }
  std::span<const double> samples() const { return samples_; }
  std::span<const Complex> hat_table() const { return hat_; }
  Complex hat(std::size_t flat) const { return hat_[flat]; }
  /// U^(0) = h^dim sum_x U(x).
  double hat_zero() const { return hat_[0].real(); }
  double range() const { return range_; }
  double strength() const { return strength_; }
  /// ||U||_1 = h^dim sum_x |U(x)|.
  double l1_norm() const { return l1_norm_; }

 private:
  TorusGrid grid_;
  std::vector<double> samples_;
  double range_;
  double strength_;
  double l1_norm_ = 0.0;
  std::vector<Complex> hat_;
};

/// Standard mollifier profile exp(1 - 1/(1 - s^2)) on |s| < 1, zero outside.
/// Peak value 1 at s = 0.
inline double mollifier(double s) {
  const double s2 = s * s;
  if (s2 >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s2));
}

/// U(x) = sign * a * mollifier(|x|/D), distances taken by minimum image from
/// the origin.
inline PairPotential bump_potential(const TorusGrid& grid, double strength,
                                    double range, int sign) {
  if (!(strength > 0.0)) throw InvalidArgument("bump strength must be > 0");
  if (!(range > 0.0)) throw InvalidArgument("bump range must be > 0");
  if (range >= 0.5 * grid.side_length()) {
    throw InvalidArgument("bump range must be < L/2 so periodic images do not overlap");
  }
  if (sign != 1 && sign != -1) throw InvalidArgument("bump sign must be +1 or -1");
  std::vector<double> samples(grid.size());
  const Vec3 origin{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    samples[i] = sign * strength * mollifier(grid.min_image_distance(i, origin) / range);
  }
  return PairPotential(grid, std::move(samples), range, sign * strength);
}

/// The zero potential on `grid`.
inline PairPotential zero_potential(const TorusGrid& grid) {
  return PairPotential(grid, std::vector<double>(grid.size(), 0.0), 0.0, 0.0);
}

/// Potential whose transform is the given real table. The table must be
/// even under k -> -k so that U is real.
inline PairPotential potential_from_transform(const TorusGrid& grid,
                                              std::span<const double> hat) {
  if (hat.size() != grid.size()) throw InvalidArgument("transform table does not match grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (hat[i] != hat[grid.negated_index(i)]) {
      throw InvalidArgument("transform table must be even for a real potential");
    }
  }
  std::vector<Complex> data(hat.begin(), hat.end());
  detail::transform_axes(grid, data, +1);
  std::vector<double> samples(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) samples[i] = data[i].real() / grid.volume();
  return PairPotential(grid, std::move(samples), 0.5 * grid.side_length(), 0.0);
}

/// Periodic convolution (U*f)(x) = h^dim sum_y U(x-y) f(y), evaluated as
/// the inverse transform of U^(k) f^(k).
inline ComplexField convolve(const PairPotential& u, const ComplexField& f) {
  if (!(u.grid() == f.grid())) throw InvalidArgument("grid mismatch in convolve");
  SpectralField fh = dft_forward(f);
  for (std::size_t i = 0; i < fh.size(); ++i) fh[i] *= u.hat(i);
  return dft_inverse(fh);
}

/// Convolution of U with a real density, returned as real samples.
inline std::vector<double> convolve_real(const PairPotential& u,
                                         std::span<const double> density) {
  const TorusGrid& g = u.grid();
  if (density.size() != g.size()) throw InvalidArgument("grid mismatch in convolve");
  std::vector<Complex> data(density.begin(), density.end());
  ComplexField out = convolve(u, ComplexField(g, std::move(data)));
  std::vector<double> result(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) result[i] = out[i].real();
  return result;
}

}  // namespace soundlab

#endif  // SOUNDLAB_PAIR_POTENTIAL_HPP

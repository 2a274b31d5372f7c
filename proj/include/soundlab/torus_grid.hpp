#ifndef SOUNDLAB_TORUS_GRID_HPP
#define SOUNDLAB_TORUS_GRID_HPP

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <algorithm>
#include <numbers>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "soundlab/errors.hpp"

namespace soundlab {

using Complex = std::complex<double>;
using Index3 = std::array<int, 3>;
using Vec3 = std::array<double, 3>;

/// Periodic box [0, L)^dim sampled on n points per axis.
///
/// Positions are x_j = j*h. Momentum arrays use FFT ordering: index j holds
/// the integer mode m = j for j < n/2 and m = j - n otherwise, so that
/// k = 2*pi*m/L with m in {-n/2, ..., n/2 - 1}. The Nyquist index n/2 is its
/// own partner under k -> -k.
class TorusGrid {
 public:
  TorusGrid(int dim, int n, double side_length)
      : dim_(dim), n_(n), side_length_(side_length) {
    if (dim < 1 || dim > 3) {
      throw InvalidArgument("grid dimension must be 1, 2 or 3, got " +
                            std::to_string(dim));
    }
    if (n < 4 || n % 2 != 0) {
      throw InvalidArgument("points per axis must be even and >= 4, got " +
                            std::to_string(n));
    }
    if (!(side_length > 0.0) || !std::isfinite(side_length)) {
      throw InvalidArgument("side length must be positive and finite");
    }
    spacing_ = side_length_ / n_;
    size_ = 1;
    for (int a = 0; a < dim_; ++a) size_ *= static_cast<std::size_t>(n_);
    wavenumbers_.resize(n_);
    positions_.resize(n_);
    const double dk = 2.0 * std::numbers::pi / side_length_;
    for (int j = 0; j < n_; ++j) {
      wavenumbers_[j] = dk * mode_number(j);
      positions_[j] = j * spacing_;
    }
  }

  int dim() const { return dim_; }
  int points_per_dim() const { return n_; }
  double side_length() const { return side_length_; }
  double spacing() const { return spacing_; }
  std::size_t size() const { return size_; }

  /// Lambda = L^dim.
  double volume() const { return std::pow(side_length_, dim_); }
  /// h^dim, the quadrature weight of one sample.
  double cell_volume() const { return std::pow(spacing_, dim_); }
  /// Momentum lattice spacing 2*pi/L.
  double dk() const { return 2.0 * std::numbers::pi / side_length_; }
  /// (2*pi/L)^dim, the quadrature weight of one momentum sample.
  double momentum_cell_volume() const { return std::pow(dk(), dim_); }

  int mode_number(int j) const { return j < n_ / 2 ? j : j - n_; }

  std::span<const double> axis_wavenumbers() const { return wavenumbers_; }
  std::span<const double> axis_positions() const { return positions_; }

  Index3 unflatten(std::size_t flat) const {
    Index3 idx{0, 0, 0};
    for (int a = dim_ - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(flat % n_);
      flat /= n_;
    }
    return idx;
  }

  std::size_t flatten(const Index3& idx) const {
    std::size_t flat = 0;
    for (int a = 0; a < dim_; ++a) {
      flat = flat * n_ + static_cast<std::size_t>(((idx[a] % n_) + n_) % n_);
    }
    return flat;
  }

  Vec3 wavevector(std::size_t flat) const {
    const Index3 idx = unflatten(flat);
    Vec3 k{0.0, 0.0, 0.0};
    for (int a = 0; a < dim_; ++a) k[a] = wavenumbers_[idx[a]];
    return k;
  }

  double wavenumber_sq(std::size_t flat) const {
    const Vec3 k = wavevector(flat);
    return k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
  }

  /// Flat index of -k.
  std::size_t negated_index(std::size_t flat) const {
    Index3 idx = unflatten(flat);
    for (int a = 0; a < dim_; ++a) idx[a] = (n_ - idx[a]) % n_;
    return flatten(idx);
  }

  Vec3 position(std::size_t flat) const {
    const Index3 idx = unflatten(flat);
    Vec3 x{0.0, 0.0, 0.0};
    for (int a = 0; a < dim_; ++a) x[a] = positions_[idx[a]];
    return x;
  }

  Vec3 center() const {
    Vec3 c{0.0, 0.0, 0.0};
    for (int a = 0; a < dim_; ++a) c[a] = 0.5 * side_length_;
    return c;
  }

  /// Euclidean distance from sample `flat` to `origin` under the
  /// minimum-image convention.
  double min_image_distance(std::size_t flat, const Vec3& origin) const {
    const Vec3 x = position(flat);
    double r2 = 0.0;
    for (int a = 0; a < dim_; ++a) {
      double d = x[a] - origin[a];
      d -= side_length_ * std::round(d / side_length_);
      r2 += d * d;
    }
    return std::sqrt(r2);
  }

  friend bool operator==(const TorusGrid& a, const TorusGrid& b) {
    return a.dim_ == b.dim_ && a.n_ == b.n_ &&
           a.side_length_ == b.side_length_;
  }

 private:
  int dim_;
  int n_;
  double side_length_;
  double spacing_ = 0.0;
  std::size_t size_ = 0;
  std::vector<double> wavenumbers_;
  std::vector<double> positions_;
};

inline TorusGrid make_grid(int dim, int n, double side_length) {
  return TorusGrid(dim, n, side_length);
}

struct PositionSpace {};
struct MomentumSpace {};

/// Complex samples on a TorusGrid. The Space tag distinguishes position
/// samples f(x) from transform samples f^(k); the two carry different
/// quadrature weights (h^dim versus (2*pi/L)^dim).
template <typename Space>
class Field {
 public:
  explicit Field(TorusGrid grid)
      : grid_(std::move(grid)), values_(grid_.size(), Complex{0.0, 0.0}) {}

  Field(TorusGrid grid, std::vector<Complex> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      throw InvalidArgument("field size does not match grid");
    }
  }

  const TorusGrid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<Complex> values() { return values_; }
  std::span<const Complex> values() const { return values_; }
  Complex& operator[](std::size_t i) { return values_[i]; }
  const Complex& operator[](std::size_t i) const { return values_[i]; }

  double measure() const {
    if constexpr (std::is_same_v<Space, PositionSpace>) {
      return grid_.cell_volume();
    } else {
      return grid_.momentum_cell_volume();
    }
  }

  double l2_norm_sq() const {
    double s = 0.0;
    for (const Complex& v : values_) s += std::norm(v);
    return measure() * s;
  }
  double l2_norm() const { return std::sqrt(l2_norm_sq()); }

  double sup_norm() const {
    double m = 0.0;
    for (const Complex& v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  double l1_norm() const {
    double s = 0.0;
    for (const Complex& v : values_) s += std::abs(v);
    return measure() * s;
  }

  bool all_finite() const {
    for (const Complex& v : values_) {
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    }
    return true;
  }

  Field& operator+=(const Field& o) {
    require_same_grid(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  Field& operator-=(const Field& o) {
    require_same_grid(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  Field& operator*=(Complex c) {
    for (Complex& v : values_) v *= c;
    return *this;
  }

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(Complex c, Field a) { return a *= c; }

  void require_same_grid(const Field& o) const {
    if (!(grid_ == o.grid_)) throw InvalidArgument("grid mismatch");
  }

 private:
  TorusGrid grid_;
  std::vector<Complex> values_;
};

using ComplexField = Field<PositionSpace>;
using SpectralField = Field<MomentumSpace>;

/// <f, g> = h^dim * sum conj(f) g.
inline Complex inner(const ComplexField& f, const ComplexField& g) {
  f.require_same_grid(g);
  Complex s{0.0, 0.0};
  for (std::size_t i = 0; i < f.size(); ++i) s += std::conj(f[i]) * g[i];
  return f.measure() * s;
}

inline ComplexField constant_field(const TorusGrid& grid, Complex c) {
  return ComplexField(grid, std::vector<Complex>(grid.size(), c));
}

namespace detail {

inline Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> engine = [] {
    Eigen::FFT<double> e;
    e.SetFlag(Eigen::FFT<double>::Unscaled);
    return e;
  }();
  return engine;
}

// Applies an unscaled 1-D transform along every axis. sign = -1 is
// sum_x e^{-ikx}, sign = +1 is sum_k e^{+ikx}.
inline void transform_axes(const TorusGrid& grid, std::vector<Complex>& data,
                           int sign) {
  const int n = grid.points_per_dim();
  const int dim = grid.dim();
  auto& fft = fft_engine();
  std::vector<Complex> in(n), out(n);
  for (int axis = 0; axis < dim; ++axis) {
    std::size_t stride = 1;
    for (int a = axis + 1; a < dim; ++a) stride *= n;
    const std::size_t block = stride * n;
    for (std::size_t base = 0; base < data.size(); base += block) {
      for (std::size_t off = 0; off < stride; ++off) {
        for (int j = 0; j < n; ++j) in[j] = data[base + off + j * stride];
        if (sign < 0) {
          fft.fwd(out.data(), in.data(), n);
        } else {
          fft.inv(out.data(), in.data(), n);
        }
        for (int j = 0; j < n; ++j) data[base + off + j * stride] = out[j];
      }
    }
  }
}

}  // namespace detail

/// f^(k) = (2*pi)^{-dim/2} h^dim sum_x e^{-ik.x} f(x).
///
/// With this constant and the momentum weight (2*pi/L)^dim,
/// sum_k |f^(k)|^2 (2*pi/L)^dim = h^dim sum_x |f(x)|^2 exactly.
inline SpectralField dft_forward(const ComplexField& f) {
  const TorusGrid& g = f.grid();
  std::vector<Complex> data(f.values().begin(), f.values().end());
  detail::transform_axes(g, data, -1);
  const double scale =
      std::pow(2.0 * std::numbers::pi, -0.5 * g.dim()) * g.cell_volume();
  for (Complex& v : data) v *= scale;
  return SpectralField(g, std::move(data));
}

/// f(x) = (2*pi)^{-dim/2} (2*pi/L)^dim sum_k e^{ik.x} f^(k).
inline ComplexField dft_inverse(const SpectralField& fh) {
  const TorusGrid& g = fh.grid();
  std::vector<Complex> data(fh.values().begin(), fh.values().end());
  detail::transform_axes(g, data, +1);
  const double scale = std::pow(2.0 * std::numbers::pi, -0.5 * g.dim()) *
                       g.momentum_cell_volume();
  for (Complex& v : data) v *= scale;
  return ComplexField(g, std::move(data));
}

/// Symbol of the one-particle kinetic operator.
///
/// `spectral` is the continuum symbol k^2/2. `lattice` is the symbol of the
/// nearest-neighbour finite-difference -Laplacian/2 with periodic wrap,
/// sum_axes (1 - cos(k_a h))/h^2, used when comparing against the exact
/// lattice many-body dynamics.
enum class KineticModel { spectral, lattice };

inline double kinetic_symbol(const TorusGrid& grid, std::size_t flat,
                             KineticModel model) {
  if (model == KineticModel::spectral) return 0.5 * grid.wavenumber_sq(flat);
  const double h = grid.spacing();
  const Vec3 k = grid.wavevector(flat);
  double s = 0.0;
  for (int a = 0; a < grid.dim(); ++a) s += (1.0 - std::cos(k[a] * h)) / (h * h);
  return s;
}

inline std::vector<double> kinetic_table(const TorusGrid& grid,
                                         KineticModel model) {
  std::vector<double> table(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    table[i] = kinetic_symbol(grid, i, model);
  }
  return table;
}

}  // namespace soundlab

#endif  // SOUNDLAB_TORUS_GRID_HPP

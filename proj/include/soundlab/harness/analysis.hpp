#ifndef SOUNDLAB_HARNESS_ANALYSIS_HPP
#define SOUNDLAB_HARNESS_ANALYSIS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "soundlab/bogolyubov.hpp"
#include "soundlab/errors.hpp"

namespace soundlab::harness {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct LineFit {
  double slope = kNaN;
  double intercept = kNaN;
};

/// Ordinary least squares y = slope x + intercept.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) return {};
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) return {};
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

/// Slope of log y against log x over entries with x, y > 0.
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  return fit_line(lx, ly).slope;
}

/// Least-squares polynomial coefficients c_0..c_deg (constant term first).
inline std::vector<double> fit_polynomial(std::span<const double> x, std::span<const double> y,
                                          int degree) {
  const auto n = static_cast<Eigen::Index>(x.size());
  if (n == 0 || degree < 0 || n <= degree) return {};
  Eigen::MatrixXd a(n, degree + 1);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double p = 1.0;
    for (int d = 0; d <= degree; ++d) {
      a(i, d) = p;
      p *= x[i];
    }
    b(i) = y[i];
  }
  const Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
  return {c.data(), c.data() + c.size()};
}

/// Removes 2*pi jumps so consecutive phases differ by less than pi.
inline std::vector<double> unwrap(std::span<const double> phase) {
  std::vector<double> out(phase.begin(), phase.end());
  double offset = 0.0;
  for (std::size_t i = 1; i < out.size(); ++i) {
    const double d = phase[i] - phase[i - 1];
    if (d > std::numbers::pi) offset -= 2.0 * std::numbers::pi;
    if (d < -std::numbers::pi) offset += 2.0 * std::numbers::pi;
    out[i] = phase[i] + offset;
  }
  return out;
}

inline double max_over_min(std::span<const double> v) {
  if (v.empty()) return kNaN;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *lo > 0.0 ? *hi / *lo : kNaN;
}

/// Runs f(0..n-1) on a small worker pool and returns results in index
/// order, so the output does not depend on the number of workers. The first
/// exception (by index) is rethrown.
template <typename F>
auto parallel_map(std::size_t n, F f) -> std::vector<decltype(f(std::size_t{0}))> {
  using R = decltype(f(std::size_t{0}));
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i].emplace(f(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers =
      std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<R> out;
  out.reserve(n);
  for (std::optional<R>& s : slots) out.push_back(std::move(*s));
  return out;
}

/// Nonzero modes that represent their {k, -k} pair (flat index below that of
/// -k), ordered by |k| then index. Self-paired Nyquist modes are skipped.
inline std::vector<std::size_t> lowest_modes(const TorusGrid& g, std::size_t count) {
  std::vector<std::size_t> reps;
  for (std::size_t i = 1; i < g.size(); ++i) {
    if (i < g.negated_index(i)) reps.push_back(i);
  }
  std::stable_sort(reps.begin(), reps.end(), [&](std::size_t a, std::size_t b) {
    return g.wavenumber_sq(a) < g.wavenumber_sq(b);
  });
  if (reps.size() > count) reps.resize(count);
  return reps;
}

struct FrequencyMeasurement {
  std::size_t index = 0;
  double k = 0.0;  // |k|
  Complex measured{kNaN, kNaN};
  Complex theory{0.0, 0.0};
  bool fit_ok = false;
};

/// Measures omega(k) for the given representative modes by integrating the
/// linearized equation with LinearSplitStepper, projecting each pair onto
/// the eigenvectors of H(k) and regressing the principal coefficient:
/// arg c+ = const - Re(omega) t, log|c+| = const + Im(omega) t.
///
/// A row is marked unfit when the mode is static, when there are fewer than
/// 8 samples per period, or when fewer than 3 samples exist.
inline std::vector<FrequencyMeasurement> measure_frequencies(const PairPotential& u,
                                                             std::span<const std::size_t> modes,
                                                             const StepPlan& plan,
                                                             KineticModel model) {
  const TorusGrid& g = u.grid();
  SpectralField eh(g);
  for (std::size_t i : modes) eh[i] = 1.0;
  const LinearSplitStepper stepper(u, plan.dt, model);

  std::vector<BogolyubovMode> bm;
  for (std::size_t i : modes) bm.push_back(make_mode(u, i, model));
  std::vector<std::vector<double>> phase(modes.size()), logamp(modes.size());
  std::vector<double> times;
  std::vector<bool> usable(modes.size(), true);
  const double sample_interval = plan.dt * static_cast<double>(plan.steps_per_sample);

  for (long s = 0; s <= plan.samples; ++s) {
    if (s > 0) {
      for (long j = 0; j < plan.steps_per_sample; ++j) eh = stepper.step(std::move(eh));
      if (!eh.all_finite()) {
        throw NumericalError("linear integration overflow at t=" +
                             std::to_string(static_cast<double>(s) * sample_interval));
      }
    }
    times.push_back(static_cast<double>(s) * sample_interval);
    for (std::size_t m = 0; m < modes.size(); ++m) {
      const std::size_t i = modes[m];
      const auto c = eigen_coefficients(bm[m], {eh[i], std::conj(eh[g.negated_index(i)])});
      if (!c || std::abs((*c)[0]) == 0.0) {
        usable[m] = false;
        continue;
      }
      phase[m].push_back(std::arg((*c)[0]));
      logamp[m].push_back(std::log(std::abs((*c)[0])));
    }
  }

  std::vector<FrequencyMeasurement> out;
  for (std::size_t m = 0; m < modes.size(); ++m) {
    FrequencyMeasurement r;
    r.index = modes[m];
    r.k = std::sqrt(g.wavenumber_sq(modes[m]));
    r.theory = bm[m].omega();
    const double period_samples =
        r.theory.real() > 0.0 ? 2.0 * std::numbers::pi / (r.theory.real() * sample_interval)
                              : std::numeric_limits<double>::infinity();
    r.fit_ok = usable[m] && times.size() >= 3 && period_samples >= 8.0;
    if (r.fit_ok) {
      const std::vector<double> ph = unwrap(phase[m]);
      r.measured = {-fit_line(times, ph).slope, fit_line(times, logamp[m]).slope};
    }
    out.push_back(r);
  }
  return out;
}

/// |omega_measured - omega_theory| / |omega_theory| (absolute error when the
/// theory value is zero).
inline double relative_error(Complex measured, Complex theory) {
  const double scale = std::abs(theory);
  const double diff = std::abs(measured - theory);
  return scale > 0.0 ? diff / scale : diff;
}

}  // namespace soundlab::harness

#endif  // SOUNDLAB_HARNESS_ANALYSIS_HPP

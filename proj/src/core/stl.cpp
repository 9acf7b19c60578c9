// SPDX-License-Identifier: Apache-2.0
#include "stl.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "error.hpp"

namespace bgpad::stl {

namespace {

std::size_t smallest_odd_at_least(double x) {
  auto v = static_cast<std::size_t>(std::ceil(x));
  if (v % 2 == 0) ++v;
  return v;
}

/// Local linear loess estimate at abscissa `xs` (1-based positions) using
/// points [left, right]. Returns false when every weight vanished.
bool loess_estimate(std::span<const double> y, std::size_t len, int degree, double xs, std::size_t left,
                    std::size_t right, std::span<double> w, const double* rw, double& ys) {
  const auto n = static_cast<double>(y.size());
  const double range = n - 1.0;
  double h = std::max(xs - static_cast<double>(left), static_cast<double>(right) - xs);
  if (len > y.size()) h += static_cast<double>((len - y.size()) / 2);
  const double h9 = 0.999 * h;
  const double h1 = 0.001 * h;

  double a = 0.0;
  for (std::size_t j = left; j <= right; ++j) {
    w[j - 1] = 0.0;
    const double r = std::abs(static_cast<double>(j) - xs);
    if (r <= h9) {
      if (r <= h1) {
        w[j - 1] = 1.0;
      } else {
        const double q = r / h;
        const double t = 1.0 - q * q * q;
        w[j - 1] = t * t * t;
      }
      if (rw) w[j - 1] *= rw[j - 1];
      a += w[j - 1];
    }
  }
  if (a <= 0.0) return false;

  for (std::size_t j = left; j <= right; ++j) w[j - 1] /= a;
  if (h > 0.0 && degree > 0) {
    a = 0.0;
    for (std::size_t j = left; j <= right; ++j) a += w[j - 1] * static_cast<double>(j);
    double b = xs - a;
    double c = 0.0;
    for (std::size_t j = left; j <= right; ++j) {
      const double d = static_cast<double>(j) - a;
      c += w[j - 1] * d * d;
    }
    if (std::sqrt(c) > 0.001 * range) {
      b /= c;
      for (std::size_t j = left; j <= right; ++j) w[j - 1] *= b * (static_cast<double>(j) - a) + 1.0;
    }
  }
  ys = 0.0;
  for (std::size_t j = left; j <= right; ++j) ys += w[j - 1] * y[j - 1];
  return true;
}

/// Loess smooth of every point (no jumping).
void loess_smooth(std::span<const double> y, std::size_t len, int degree, const double* rw, std::span<double> out) {
  const std::size_t n = y.size();
  if (n < 2) {
    std::copy(y.begin(), y.end(), out.begin());
    return;
  }
  std::vector<double> w(n);
  std::size_t left = 1, right = std::min(len, n);
  const std::size_t half = (len + 1) / 2;
  for (std::size_t i = 1; i <= n; ++i) {
    if (len < n && i > half && right != n) {
      ++left;
      ++right;
    }
    double ys = 0.0;
    if (!loess_estimate(y, len, degree, static_cast<double>(i), left, right, w, rw, ys)) ys = y[i - 1];
    out[i - 1] = ys;
  }
}

/// Smooths each cycle-subseries and extends it by one period on both
/// ends; output has n + 2p entries.
void cycle_subseries(std::span<const double> y, std::size_t period, std::size_t span, const double* rw,
                     std::vector<double>& season) {
  const std::size_t n = y.size();
  season.assign(n + 2 * period, 0.0);
  std::vector<double> sub, sub_rw, smooth, w;
  for (std::size_t j = 1; j <= period; ++j) {
    const std::size_t k = (n - j) / period + 1;
    sub.resize(k);
    sub_rw.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
      sub[i] = y[i * period + j - 1];
      if (rw) sub_rw[i] = rw[i * period + j - 1];
    }
    const double* srw = rw ? sub_rw.data() : nullptr;
    smooth.assign(k + 2, 0.0);
    loess_smooth(sub, span, 1, srw, std::span<double>(smooth).subspan(1, k));
    w.assign(k, 0.0);
    double ys = 0.0;
    if (loess_estimate(sub, span, 1, 0.0, 1, std::min(span, k), w, srw, ys)) smooth[0] = ys;
    else smooth[0] = smooth[1];
    const std::size_t left = k >= span ? k - span + 1 : 1;
    if (loess_estimate(sub, span, 1, static_cast<double>(k + 1), left, k, w, srw, ys)) smooth[k + 1] = ys;
    else smooth[k + 1] = smooth[k];
    for (std::size_t m = 0; m < k + 2; ++m) season[m * period + j - 1] = smooth[m];
  }
}

std::vector<double> moving_average(std::span<const double> x, std::size_t len) {
  const std::size_t out_n = x.size() - len + 1;
  std::vector<double> ave(out_n);
  double v = 0.0;
  for (std::size_t i = 0; i < len; ++i) v += x[i];
  const double flen = static_cast<double>(len);
  ave[0] = v / flen;
  for (std::size_t j = 1; j < out_n; ++j) {
    v = v - x[j - 1] + x[j + len - 1];
    ave[j] = v / flen;
  }
  return ave;
}

void inner_loop(std::span<const double> y, const StlConfig& cfg, const double* rw, std::vector<double>& season,
                std::vector<double>& trend) {
  const std::size_t n = y.size();
  const std::size_t p = cfg.period;
  std::vector<double> detrended(n), extended, lowpass(n), deseasoned(n);
  for (std::size_t it = 0; it < cfg.inner_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) detrended[i] = y[i] - trend[i];
    cycle_subseries(detrended, p, cfg.seasonal_span, rw, extended);
    auto ma = moving_average(moving_average(moving_average(extended, p), p), 3);
    loess_smooth(ma, cfg.lowpass_span, 1, nullptr, lowpass);
    for (std::size_t i = 0; i < n; ++i) season[i] = extended[p + i] - lowpass[i];
    for (std::size_t i = 0; i < n; ++i) deseasoned[i] = y[i] - season[i];
    loess_smooth(deseasoned, cfg.trend_span, 1, rw, trend);
  }
}

}  // namespace

StlConfig StlConfig::resolved() const {
  StlConfig c = *this;
  if (c.lowpass_span == 0) c.lowpass_span = smallest_odd_at_least(static_cast<double>(c.period));
  if (c.trend_span == 0 && c.seasonal_span > 0)
    c.trend_span = smallest_odd_at_least(1.5 * static_cast<double>(c.period) / (1.0 - 1.5 / static_cast<double>(c.seasonal_span)));
  return c;
}

void StlConfig::validate() const {
  if (period < 2) throw InvalidArgument("STL period must be >= 2");
  for (auto [name, span] : {std::pair{"seasonal", seasonal_span}, {"trend", trend_span}, {"low-pass", lowpass_span}}) {
    if (span < 3 || span % 2 == 0) throw InvalidArgument(std::string("STL ") + name + " span must be odd and >= 3");
  }
  if (inner_iterations < 1) throw InvalidArgument("STL needs at least one inner iteration");
}

std::vector<double> robustness_weights(std::span<const double> residual, double scale_hint) {
  const std::size_t n = residual.size();
  std::vector<double> abs_r(n);
  for (std::size_t i = 0; i < n; ++i) abs_r[i] = std::abs(residual[i]);
  std::vector<double> w(n, 1.0);
  if (n == 0) return w;
  auto sorted = abs_r;
  const std::size_t mid = n / 2;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid), sorted.end());
  double median = sorted[mid];
  if (n % 2 == 0) {
    const double lower = *std::max_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  // Residuals at rounding level of the data are treated as an exact fit.
  if (median <= 1e-12 * std::max(1.0, scale_hint)) return w;
  const double h = 6.0 * median;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = abs_r[i] / h;
    w[i] = u < 1.0 ? (1.0 - u * u) * (1.0 - u * u) : 0.0;
  }
  return w;
}

Decomposition decompose(std::span<const double> y, const StlConfig& config) {
  const auto cfg = config.resolved();
  cfg.validate();
  const std::size_t n = y.size();
  if (n < 2 * cfg.period) throw InvalidArgument("series too short for period");
  double scale = 0.0;
  for (double v : y) {
    if (!std::isfinite(v)) throw InvalidArgument("STL input contains NaN or infinite values");
    scale = std::max(scale, std::abs(v));
  }

  Decomposition d;
  d.observed.assign(y.begin(), y.end());
  d.trend.assign(n, 0.0);
  d.seasonal.assign(n, 0.0);
  d.residual.assign(n, 0.0);
  std::vector<double> rw;
  for (std::size_t pass = 0;; ++pass) {
    inner_loop(y, cfg, rw.empty() ? nullptr : rw.data(), d.seasonal, d.trend);
    if (pass >= cfg.outer_iterations) break;
    for (std::size_t i = 0; i < n; ++i) d.residual[i] = y[i] - d.trend[i] - d.seasonal[i];
    rw = robustness_weights(d.residual, scale);
  }
  for (std::size_t i = 0; i < n; ++i) d.residual[i] = y[i] - (d.trend[i] + d.seasonal[i]);
  d.weight = robustness_weights(d.residual, scale);
  return d;
}

}  // namespace bgpad::stl

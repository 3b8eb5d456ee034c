#include "anc/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

#include "anc/errors.hpp"

namespace anc::dsp {

double FirFilter::norm2() const {
  double acc = 0.0;
  for (double v : c) acc += v * v;
  return std::sqrt(acc);
}

void FirFilter::zero() { std::fill(c.begin(), c.end(), 0.0); }

double fir_apply(const FirFilter& h, std::span<const double> window) {
  if (window.size() != h.size())
    throw contract_error("fir_apply: window length " + std::to_string(window.size()) +
                         " != filter length " + std::to_string(h.size()));
  double acc = 0.0;
  const double* hc = h.c.data();
  const double* wd = window.data();
  for (std::size_t i = 0; i < h.c.size(); ++i) acc += hc[i] * wd[i];
  return acc;
}

std::vector<double> fir_filter_all(const FirFilter& h, std::span<const double> x) {
  std::vector<double> y(x.size(), 0.0);
  const std::size_t L = h.size();
  for (std::size_t n = 0; n < x.size(); ++n) {
    const std::size_t kmax = std::min(L - 1, n);
    double acc = 0.0;
    for (std::size_t k = 0; k <= kmax; ++k) acc += h.c[k] * x[n - k];
    y[n] = acc;
  }
  return y;
}

DelayLine::DelayLine(std::size_t capacity) : buf_(capacity, 0.0) {
  if (capacity == 0) throw contract_error("DelayLine: capacity must be >= 1");
}

void DelayLine::push(double z) {
  // Shift-insert keeps the window contiguous and most-recent-first.
  std::memmove(buf_.data() + 1, buf_.data(), (buf_.size() - 1) * sizeof(double));
  buf_[0] = z;
}

std::span<const double> DelayLine::window(std::size_t len) const {
  if (len > buf_.size())
    throw contract_error("DelayLine: window length " + std::to_string(len) +
                         " exceeds capacity " + std::to_string(buf_.size()));
  return {buf_.data(), len};
}

std::span<const double> DelayLine::window_at(std::size_t delay, std::size_t len) const {
  if (delay + len > buf_.size())
    throw contract_error("DelayLine: delayed window exceeds capacity");
  return {buf_.data() + delay, len};
}

void DelayLine::clear() { std::fill(buf_.begin(), buf_.end(), 0.0); }

std::span<const double> push_and_window(DelayLine& line, double z, std::size_t len) {
  line.push(z);
  return line.window(len);
}

EmaPower ema_update(EmaPower p, double z) {
  p.value = p.alpha * p.value + (1.0 - p.alpha) * z * z;
  return p;
}

double NoiseGen::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = static_cast<double>((rng_() >> 11) + 1) * 0x1.0p-53;  // (0,1]
  const double u2 = static_cast<double>(rng_() >> 11) * 0x1.0p-53;        // [0,1)
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

std::size_t NoiseGen::next_index(std::size_t n) {
  if (n == 0) throw contract_error("NoiseGen::next_index: n must be >= 1");
  return static_cast<std::size_t>(rng_() % n);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t root, std::uint64_t stream) {
  return splitmix64(splitmix64(root) + stream);
}

SignalBuffer white_noise(std::uint64_t seed, std::size_t n, double sample_rate) {
  SignalBuffer out;
  out.sample_rate = sample_rate;
  out.samples.resize(n);
  NoiseGen gen(seed);
  for (std::size_t i = 0; i < n; ++i) out.samples[i] = gen.next();
  return out;
}

FirFilter design_band_pass(double f_lo, double f_hi, double sample_rate,
                           std::size_t taps) {
  if (taps < 2) throw contract_error("design_band_pass: taps must be >= 2");
  FirFilter h(taps);
  const double center = 0.5 * static_cast<double>(taps - 1);
  const double w1 = 2.0 * std::numbers::pi * f_lo / sample_rate;
  const double w2 = 2.0 * std::numbers::pi * f_hi / sample_rate;
  for (std::size_t k = 0; k < taps; ++k) {
    const double t = static_cast<double>(k) - center;
    const double ideal = (t == 0.0)
                             ? (w2 - w1) / std::numbers::pi
                             : (std::sin(w2 * t) - std::sin(w1 * t)) /
                                   (std::numbers::pi * t);
    const double win =
        0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) /
                               static_cast<double>(taps - 1));
    h[k] = ideal * win;
  }
  return h;
}

SignalBuffer band_limit(const SignalBuffer& x, double f_lo, double f_hi) {
  if (!(0.0 < f_lo && f_lo < f_hi && f_hi < x.sample_rate / 2.0))
    throw contract_error("band_limit: need 0 < f_lo < f_hi < sample_rate/2");
  const FirFilter h = design_band_pass(f_lo, f_hi, x.sample_rate);
  SignalBuffer out;
  out.sample_rate = x.sample_rate;
  out.samples = fir_filter_all(h, x.samples);
  return out;
}

double rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

}  // namespace anc::dsp

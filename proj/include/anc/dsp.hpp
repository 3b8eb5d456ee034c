#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace anc::dsp {

inline constexpr double kDefaultSampleRate = 16000.0;

// A real-valued sample sequence with its rate. Amplitudes are dimensionless.
struct SignalBuffer {
  std::vector<double> samples;
  double sample_rate = kDefaultSampleRate;

  std::size_t size() const { return samples.size(); }
};

// Causal FIR coefficient vector. Tap 0 multiplies the newest sample.
struct FirFilter {
  std::vector<double> c;

  FirFilter() = default;
  explicit FirFilter(std::size_t n) : c(n, 0.0) {}
  explicit FirFilter(std::vector<double> taps) : c(std::move(taps)) {}

  std::size_t size() const { return c.size(); }
  double& operator[](std::size_t i) { return c[i]; }
  double operator[](std::size_t i) const { return c[i]; }
  bool operator==(const FirFilter&) const = default;

  double norm2() const;
  void zero();
};

// h' * window where window[k] = z(n-k). Lengths must match.
double fir_apply(const FirFilter& h, std::span<const double> window);

// Causal FIR filtering of a whole buffer: y[n] = sum_k h[k] x[n-k], zero history.
std::vector<double> fir_filter_all(const FirFilter& h, std::span<const double> x);

// Most-recent-first tap window over a pushed sample stream.
// Taps that were never written read as zero.
class DelayLine {
 public:
  explicit DelayLine(std::size_t capacity);

  void push(double z);
  // [z(n), z(n-1), ..., z(n-len+1)]; valid until the next push.
  std::span<const double> window(std::size_t len) const;
  // [z(n-delay), ..., z(n-delay-len+1)]
  std::span<const double> window_at(std::size_t delay, std::size_t len) const;
  std::size_t capacity() const { return buf_.size(); }
  void clear();

 private:
  std::vector<double> buf_;
};

// push() followed by window(); the spec'd single-call form.
std::span<const double> push_and_window(DelayLine& line, double z, std::size_t len);

// One-pole mean-square power tracker: value' = alpha*value + (1-alpha)*z^2.
struct EmaPower {
  double value = 0.0;
  double alpha = 0.999;
};

EmaPower ema_update(EmaPower p, double z);

// Deterministic standard-normal stream: mt19937_64 + Box-Muller.
// u1 = ((next()>>11)+1) * 2^-53 in (0,1], u2 = (next()>>11) * 2^-53 in [0,1),
// r = sqrt(-2 ln u1); yields r*cos(2*pi*u2) then r*sin(2*pi*u2).
class NoiseGen {
 public:
  explicit NoiseGen(std::uint64_t seed) : rng_(seed) {}
  double next();
  // Uniform index in [0, n); defined as next_u64() % n (documented, reproducible).
  std::size_t next_index(std::size_t n);

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// splitmix64(splitmix64(root) + stream): one derived seed per stream tag.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t mix_seed(std::uint64_t root, std::uint64_t stream);

// n i.i.d. N(0,1) samples from NoiseGen(seed).
SignalBuffer white_noise(std::uint64_t seed, std::size_t n,
                         double sample_rate = kDefaultSampleRate);

// Linear-phase windowed-sinc band-pass (Hamming, `taps` coefficients).
FirFilter design_band_pass(double f_lo, double f_hi, double sample_rate,
                           std::size_t taps = 256);

// Band-pass filtering of x to [f_lo, f_hi]; same length, causal (group delay
// (taps-1)/2 samples). Requires 0 < f_lo < f_hi < sample_rate/2.
SignalBuffer band_limit(const SignalBuffer& x, double f_lo, double f_hi);

double rms(std::span<const double> x);

}  // namespace anc::dsp

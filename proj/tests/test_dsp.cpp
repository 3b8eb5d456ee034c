#include <doctest.h>

#include <cmath>
#include <numbers>

#include "anc/dsp.hpp"
#include "anc/errors.hpp"
#include "helpers.hpp"

using namespace anc;

TEST_SUITE_BEGIN("dsp");

TEST_CASE("fir_apply: delta filter picks the newest sample") {
  dsp::FirFilter h(std::vector<double>{1.0, 0.0, 0.0});
  const double window[] = {42.0, -1.0, 7.0};
  CHECK(dsp::fir_apply(h, window) == 42.0);
}

TEST_CASE("fir_apply: averaging filter") {
  dsp::FirFilter h(std::vector<double>{0.5, 0.5});
  const double window[] = {1.0, 1.0};
  CHECK(dsp::fir_apply(h, window) == 1.0);
}

TEST_CASE("fir_apply: matches the naive sum-of-products oracle") {
  TestRng rng(101);
  for (int rep = 0; rep < 50; ++rep) {
    const auto taps = random_vector(rng, 32);
    const auto window = random_vector(rng, 32);
    double oracle = 0.0;
    for (std::size_t i = 0; i < 32; ++i) oracle += taps[i] * window[i];
    const double got = dsp::fir_apply(dsp::FirFilter(taps), window);
    CHECK(std::fabs(got - oracle) < 1e-12);
  }
}

TEST_CASE("fir_apply: length mismatch is a contract violation") {
  dsp::FirFilter h(4);
  const double window[] = {1.0, 2.0};
  CHECK_THROWS_AS((void)dsp::fir_apply(h, window), contract_error);
}

TEST_CASE("fir_apply: linear in the window") {
  TestRng rng(102);
  for (int rep = 0; rep < 20; ++rep) {
    const auto taps = random_vector(rng, 16);
    const auto w1 = random_vector(rng, 16);
    const auto w2 = random_vector(rng, 16);
    const double a = rng.uniform(-2.0, 2.0), b = rng.uniform(-2.0, 2.0);
    std::vector<double> mix(16);
    for (std::size_t i = 0; i < 16; ++i) mix[i] = a * w1[i] + b * w2[i];
    const dsp::FirFilter h(taps);
    const double lhs = dsp::fir_apply(h, mix);
    const double rhs = a * dsp::fir_apply(h, w1) + b * dsp::fir_apply(h, w2);
    CHECK(std::fabs(lhs - rhs) < 1e-10);
  }
}

TEST_CASE("DelayLine: zero fill before warm-up") {
  dsp::DelayLine line(8);
  const auto w = dsp::push_and_window(line, 5.0, 3);
  CHECK(w[0] == 5.0);
  CHECK(w[1] == 0.0);
  CHECK(w[2] == 0.0);
}

TEST_CASE("DelayLine: most-recent-first ordering") {
  dsp::DelayLine line(3);
  line.push(1.0);
  line.push(2.0);
  const auto w = dsp::push_and_window(line, 3.0, 3);
  CHECK(w[0] == 3.0);
  CHECK(w[1] == 2.0);
  CHECK(w[2] == 1.0);
}

TEST_CASE("DelayLine: window equals the reversed tail of the pushed stream") {
  TestRng rng(103);
  const std::size_t cap = 16;
  dsp::DelayLine line(cap);
  const auto stream = random_vector(rng, 100);
  for (double z : stream) line.push(z);
  const auto w = line.window(cap);
  for (std::size_t k = 0; k < cap; ++k)
    CHECK(w[k] == stream[stream.size() - 1 - k]);
}

TEST_CASE("DelayLine: windows of increasing length are prefixes") {
  TestRng rng(104);
  dsp::DelayLine line(12);
  for (double z : random_vector(rng, 30)) line.push(z);
  const auto w12 = line.window(12);
  for (std::size_t len = 1; len <= 12; ++len) {
    const auto w = line.window(len);
    for (std::size_t k = 0; k < len; ++k) CHECK(w[k] == w12[k]);
  }
}

TEST_CASE("DelayLine: oversized window is a contract violation") {
  dsp::DelayLine line(4);
  CHECK_THROWS_AS((void)line.window(5), contract_error);
  CHECK_THROWS_AS((void)line.window_at(2, 3), contract_error);
}

TEST_CASE("white_noise: n=0 gives an empty buffer") {
  CHECK(dsp::white_noise(7, 0).samples.empty());
}

TEST_CASE("white_noise: identical seeds give identical buffers") {
  const auto a = dsp::white_noise(7, 1000);
  const auto b = dsp::white_noise(7, 1000);
  CHECK(a.samples == b.samples);
}

TEST_CASE("white_noise: sample moments near N(0,1)") {
  const auto x = dsp::white_noise(7, 100000);
  double mean = 0.0;
  for (double v : x.samples) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x.samples) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size());
  CHECK(std::fabs(mean) < 0.02);
  CHECK(var > 0.97);
  CHECK(var < 1.03);
}

namespace {

double tone_rms(const std::vector<double>& x, std::size_t from) {
  double acc = 0.0;
  for (std::size_t i = from; i < x.size(); ++i) acc += x[i] * x[i];
  return std::sqrt(acc / static_cast<double>(x.size() - from));
}

dsp::SignalBuffer tone(double freq, std::size_t n, double fs = 16000.0) {
  dsp::SignalBuffer out;
  out.sample_rate = fs;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.samples[i] =
        std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / fs);
  return out;
}

}  // namespace

TEST_CASE("band_limit: in-band tone passes within 1 dB") {
  const auto in = tone(1000.0, 8000);
  const auto out = dsp::band_limit(in, 200.0, 2000.0);
  REQUIRE(out.size() == in.size());
  const double gain_db =
      20.0 * std::log10(tone_rms(out.samples, 512) / tone_rms(in.samples, 512));
  CHECK(std::fabs(gain_db) < 1.0);
}

TEST_CASE("band_limit: 50 Hz tone is attenuated by at least 40 dB") {
  const auto in = tone(50.0, 16000);
  const auto out = dsp::band_limit(in, 200.0, 2000.0);
  const double gain_db =
      20.0 * std::log10(tone_rms(out.samples, 512) / tone_rms(in.samples, 512));
  CHECK(gain_db < -40.0);
}

TEST_CASE("band_limit: zero input stays zero") {
  dsp::SignalBuffer in;
  in.samples.assign(4000, 0.0);
  const auto out = dsp::band_limit(in, 200.0, 2000.0);
  for (double v : out.samples) CHECK(v == 0.0);
}

TEST_CASE("band_limit: invalid band is a contract violation") {
  dsp::SignalBuffer in;
  in.samples.assign(100, 0.0);
  CHECK_THROWS_AS((void)dsp::band_limit(in, 0.0, 2000.0), contract_error);
  CHECK_THROWS_AS((void)dsp::band_limit(in, 2000.0, 200.0), contract_error);
  CHECK_THROWS_AS((void)dsp::band_limit(in, 200.0, 9000.0), contract_error);
}

TEST_CASE("ema_update: near-unity alpha barely moves") {
  dsp::EmaPower p{4.0, 0.999999};
  const double next = dsp::ema_update(p, 100.0).value;
  CHECK(std::fabs(next - 4.0) <= (1.0 - p.alpha) * 100.0 * 100.0 + 1e-12);
}

TEST_CASE("ema_update: alpha=0 jumps straight to z^2") {
  dsp::EmaPower p{4.0, 0.0};
  CHECK(dsp::ema_update(p, 3.0).value == 9.0);
}

TEST_CASE("ema_update: constant input follows the geometric closed form") {
  dsp::EmaPower p{0.0, 0.9};
  for (int k = 1; k <= 200; ++k) {
    p = dsp::ema_update(p, 2.0);
    const double expected = 4.0 * (1.0 - std::pow(0.9, k));
    CHECK(std::fabs(p.value - expected) < 1e-12);
  }
  CHECK(std::fabs(p.value - 4.0) < 1e-6);
}

TEST_CASE("ema_update: convex combination bounds") {
  TestRng rng(105);
  for (int rep = 0; rep < 200; ++rep) {
    dsp::EmaPower p{rng.uniform(0.0, 10.0), rng.uniform(0.01, 0.99)};
    const double z = rng.uniform(-3.0, 3.0);
    const double next = dsp::ema_update(p, z).value;
    CHECK(next >= std::min(p.value, z * z) - 1e-15);
    CHECK(next <= std::max(p.value, z * z) + 1e-15);
    CHECK(next >= 0.0);
  }
}

TEST_CASE("mix_seed: distinct streams from one root") {
  CHECK(dsp::mix_seed(1, 0) != dsp::mix_seed(1, 1));
  CHECK(dsp::mix_seed(1, 0) != dsp::mix_seed(2, 0));
  CHECK(dsp::mix_seed(1, 5) == dsp::mix_seed(1, 5));
}

TEST_SUITE_END();

#include <doctest.h>

#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>

#include "anc/errors.hpp"
#include "anc/paths.hpp"
#include "helpers.hpp"

using namespace anc;

TEST_SUITE_BEGIN("paths");

namespace {

const std::filesystem::path& tmp_dir() {
  static const auto dir = test_tmp_dir("paths");
  return dir;
}

void write_text(const std::filesystem::path& f, const std::string& content) {
  std::ofstream out(f, std::ios::binary);
  out << content;
}

// Independent magnitude oracle: DFT-bin evaluation with integer twiddles.
double dft_bin_mag_db(const std::vector<double>& ir, std::size_t bin, std::size_t nfft) {
  double re = 0.0, im = 0.0;
  for (std::size_t k = 0; k < ir.size(); ++k) {
    const double ang = -2.0 * std::numbers::pi * static_cast<double>(bin * k % nfft) /
                       static_cast<double>(nfft);
    re += ir[k] * std::cos(ang);
    im += ir[k] * std::sin(ang);
  }
  return 20.0 * std::log10(std::sqrt(re * re + im * im));
}

}  // namespace

TEST_CASE("load_ir: plain text coefficients") {
  const auto f = tmp_dir() / "two_taps.txt";
  write_text(f, "1.0\n0.5\n");
  const auto p = paths::load_ir(f);
  REQUIRE(p.ir.size() == 2);
  CHECK(p.ir[0] == 1.0);
  CHECK(p.ir[1] == 0.5);
  CHECK(p.sample_rate == 16000.0);
}

TEST_CASE("load_ir: comments and blank lines are skipped") {
  const auto f = tmp_dir() / "commented.txt";
  write_text(f, "# impulse\n\n1.0\n# tail\n-0.25\n");
  const auto p = paths::load_ir(f);
  REQUIRE(p.ir.size() == 2);
  CHECK(p.ir[1] == -0.25);
}

TEST_CASE("load_ir: empty file is malformed") {
  const auto f = tmp_dir() / "empty.txt";
  write_text(f, "");
  CHECK_THROWS_AS((void)paths::load_ir(f), parse_error);
}

TEST_CASE("load_ir: missing file is an io error") {
  CHECK_THROWS_AS((void)paths::load_ir(tmp_dir() / "no_such_file.txt"), io_error);
}

TEST_CASE("load_ir: garbage token is malformed") {
  const auto f = tmp_dir() / "garbage.txt";
  write_text(f, "1.0\nnot-a-number\n");
  CHECK_THROWS_AS((void)paths::load_ir(f), parse_error);
}

TEST_CASE("load_ir: non-finite coefficient is its own error") {
  const auto f = tmp_dir() / "inf.txt";
  write_text(f, "1.0\ninf\n");
  CHECK_THROWS_AS((void)paths::load_ir(f), nonfinite_error);
}

TEST_CASE("save_ir/load_ir: text round trip is bit exact") {
  TestRng rng(201);
  paths::AcousticPath p;
  p.ir.c = random_vector(rng, 128);
  const auto f = tmp_dir() / "roundtrip.txt";
  paths::save_ir(p, f);
  const auto q = paths::load_ir(f);
  REQUIRE(q.ir.size() == p.ir.size());
  for (std::size_t i = 0; i < p.ir.size(); ++i) CHECK(q.ir[i] == p.ir[i]);
}

TEST_CASE("save_ir_wav/load_ir: float32 round trip") {
  TestRng rng(202);
  paths::AcousticPath p;
  p.ir.c = random_vector(rng, 64);
  const auto f = tmp_dir() / "roundtrip.wav";
  paths::save_ir_wav(p, f);
  const auto q = paths::load_ir(f);
  REQUIRE(q.ir.size() == p.ir.size());
  CHECK(q.sample_rate == 16000.0);
  for (std::size_t i = 0; i < p.ir.size(); ++i)
    CHECK(q.ir[i] == static_cast<double>(static_cast<float>(p.ir[i])));
}

TEST_CASE("load_ir: truncated wav is malformed") {
  const auto f = tmp_dir() / "trunc.wav";
  write_text(f, "RIFF\x10\x00\x00\x00WAVE");
  CHECK_THROWS_AS((void)paths::load_ir(f), parse_error);
}

TEST_CASE("synth_path: unit norm, leading zeros, deterministic") {
  const auto p = paths::synth_path(7, 128, 0.9, 8);
  CHECK(std::fabs(p.ir.norm2() - 1.0) < 1e-12);
  for (std::size_t k = 0; k < 8; ++k) CHECK(p.ir[k] == 0.0);
  CHECK(p.ir[8] != 0.0);
  const auto q = paths::synth_path(7, 128, 0.9, 8);
  CHECK(p.ir.c == q.ir.c);
}

TEST_CASE("synth_path: invalid parameters are contract violations") {
  CHECK_THROWS_AS((void)paths::synth_path(1, 0, 0.9, 0), contract_error);
  CHECK_THROWS_AS((void)paths::synth_path(1, 16, 1.5, 0), contract_error);
  CHECK_THROWS_AS((void)paths::synth_path(1, 16, 0.9, 16), contract_error);
}

TEST_CASE("log_grid: two points are the endpoints") {
  const auto g = paths::log_grid(100.0, 2000.0, 2);
  REQUIRE(g.size() == 2);
  CHECK(g.freqs[0] == 100.0);
  CHECK(g.freqs[1] == 2000.0);
}

TEST_CASE("log_grid: constant ratio (20)^(1/63) for the 64-point grid") {
  const auto g = paths::log_grid(100.0, 2000.0, 64);
  REQUIRE(g.size() == 64);
  const double expected = std::pow(20.0, 1.0 / 63.0);
  for (std::size_t m = 0; m + 1 < 64; ++m) {
    CHECK(std::fabs(g.freqs[m + 1] / g.freqs[m] - expected) < 1e-12);
    CHECK(g.freqs[m + 1] > g.freqs[m]);
  }
  CHECK(g.freqs[0] == 100.0);
  CHECK(g.freqs[63] == 2000.0);
}

TEST_CASE("log_grid: degenerate range is a contract violation") {
  CHECK_THROWS_AS((void)paths::log_grid(100.0, 100.0, 4), contract_error);
  CHECK_THROWS_AS((void)paths::log_grid(100.0, 2000.0, 1), contract_error);
}

TEST_CASE("magnitude_db: unit impulse is flat 0 dB") {
  const auto p = paths::delta_path(32, 0);
  const auto g = paths::log_grid(100.0, 2000.0, 64);
  for (double m : paths::magnitude_db(p, g)) CHECK(std::fabs(m) < 1e-12);
}

TEST_CASE("magnitude_db: single tap 0.5 is -6.0206 dB everywhere") {
  paths::AcousticPath p;
  p.ir.c = {0.5};
  const auto g = paths::log_grid(100.0, 2000.0, 16);
  const double expected = 20.0 * std::log10(0.5);
  for (double m : paths::magnitude_db(p, g)) CHECK(std::fabs(m - expected) < 1e-9);
}

TEST_CASE("magnitude_db: zero response clamps at the -300 dB floor") {
  paths::AcousticPath p;
  p.ir.c = {0.0, 0.0};
  const auto g = paths::log_grid(100.0, 2000.0, 4);
  for (double m : paths::magnitude_db(p, g)) CHECK(m == -300.0);
}

TEST_CASE("magnitude_db: matches a dense-DFT oracle on bin frequencies") {
  TestRng rng(203);
  const std::size_t nfft = 8192;
  const double fs = 16000.0;
  paths::AcousticPath p;
  p.ir.c = random_vector(rng, 64);

  paths::FrequencyGrid grid;
  std::vector<std::size_t> bins;
  for (std::size_t bin = 64; bin < 1024; bin += 15) {  // 100 Hz .. 2 kHz region
    bins.push_back(bin);
    grid.freqs.push_back(static_cast<double>(bin) * fs / static_cast<double>(nfft));
  }
  const auto got = paths::magnitude_db(p, grid);
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const double oracle = dft_bin_mag_db(p.ir.c, bins[i], nfft);
    CHECK(std::fabs(got[i] - oracle) < 1e-6);
  }
}

TEST_CASE("lsd: zero on itself, symmetric") {
  const auto a = paths::synth_path(11, 64, 0.9, 2);
  const auto b = paths::synth_path(12, 64, 0.9, 2);
  const auto g = paths::log_grid(100.0, 2000.0, 64);
  CHECK(paths::lsd(a, a, g) == 0.0);
  CHECK(paths::lsd(a, b, g) == paths::lsd(b, a, g));
}

TEST_CASE("lsd: doubling the IR gives exactly 20*log10(2)") {
  const auto a = paths::synth_path(13, 64, 0.9, 2);
  paths::AcousticPath b = a;
  for (double& v : b.ir.c) v *= 2.0;
  const auto g = paths::log_grid(100.0, 2000.0, 64);
  CHECK(std::fabs(paths::lsd(a, b, g) - 20.0 * std::log10(2.0)) < 1e-9);
}

TEST_CASE("lsd: triangle inequality on random triples") {
  TestRng rng(204);
  const auto g = paths::log_grid(100.0, 2000.0, 32);
  for (int rep = 0; rep < 20; ++rep) {
    const auto a = paths::synth_path(rng.integer(1 << 30), 48, 0.9, 1);
    const auto b = paths::synth_path(rng.integer(1 << 30), 48, 0.9, 1);
    const auto c = paths::synth_path(rng.integer(1 << 30), 48, 0.9, 1);
    CHECK(paths::lsd(a, c, g) <= paths::lsd(a, b, g) + paths::lsd(b, c, g) + 1e-9);
  }
}

TEST_CASE("dispersion: a pair equals its lsd; identical paths give zero") {
  const auto a = paths::synth_path(21, 64, 0.9, 2);
  const auto b = paths::synth_path(22, 64, 0.9, 2);
  const auto g = paths::log_grid(100.0, 2000.0, 64);
  const paths::AcousticPath two[] = {a, b};
  CHECK(paths::dispersion(two, g) == paths::lsd(a, b, g));
  const paths::AcousticPath same[] = {a, a, a};
  CHECK(paths::dispersion(same, g) == 0.0);
}

TEST_CASE("dispersion: matches the brute-force pair enumeration") {
  const auto g = paths::log_grid(100.0, 2000.0, 32);
  std::vector<paths::AcousticPath> group;
  for (int i = 0; i < 4; ++i)
    group.push_back(paths::synth_path(31 + static_cast<std::uint64_t>(i), 48, 0.85, 1));
  double acc = 0.0;
  for (std::size_t i = 0; i < group.size(); ++i)
    for (std::size_t j = i + 1; j < group.size(); ++j)
      acc += paths::lsd(group[i], group[j], g);
  const double oracle = acc * 2.0 / (4.0 * 3.0);
  CHECK(std::fabs(paths::dispersion(group, g) - oracle) < 1e-12);
}

TEST_CASE("dispersion: fewer than two paths is a contract violation") {
  const auto g = paths::log_grid(100.0, 2000.0, 8);
  const paths::AcousticPath one[] = {paths::delta_path(8, 0)};
  CHECK_THROWS_AS((void)paths::dispersion(one, g), contract_error);
}

TEST_CASE("dispersion: scaled copies reduce to constant-offset vectors") {
  // Scaling a path by c shifts its whole log-magnitude vector by 20*log10(c),
  // so a set of scaled copies must match the dispersion of those offsets.
  const auto base = paths::synth_path(41, 64, 0.9, 2);
  const auto g = paths::log_grid(100.0, 2000.0, 64);
  const double scales[] = {0.5, 1.0, 2.0, 8.0};
  std::vector<paths::AcousticPath> group;
  for (double s : scales) {
    paths::AcousticPath p = base;
    for (double& v : p.ir.c) v *= s;
    group.push_back(std::move(p));
  }
  double acc = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < group.size(); ++i)
    for (std::size_t j = i + 1; j < group.size(); ++j) {
      acc += std::fabs(20.0 * std::log10(scales[i] / scales[j]));
      ++pairs;
    }
  const double oracle = acc / pairs;
  CHECK(std::fabs(paths::dispersion(group, g) - oracle) < 1e-9);
}

TEST_CASE("blend_paths: endpoints reproduce the inputs up to normalization") {
  const auto a = paths::synth_path(51, 32, 0.9, 0);
  const auto b = paths::synth_path(52, 32, 0.9, 0);
  const auto at0 = paths::blend_paths(a, b, 0.0);
  for (std::size_t k = 0; k < 32; ++k)
    CHECK(std::fabs(at0.ir[k] - a.ir[k]) < 1e-12);  // a already unit norm
  const auto mid = paths::blend_paths(a, b, 0.5);
  CHECK(std::fabs(mid.ir.norm2() - 1.0) < 1e-12);
}

TEST_SUITE_END();

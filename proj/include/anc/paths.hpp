#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "anc/dsp.hpp"

namespace anc::paths {

// A measured or synthetic impulse response plus identification metadata.
struct AcousticPath {
  dsp::FirFilter ir;
  double sample_rate = dsp::kDefaultSampleRate;
  std::string label;
};

// One acoustic condition: noise-source-to-mic and speaker-to-mic responses.
struct PathPair {
  AcousticPath primary;
  AcousticPath secondary;
};

// Strictly increasing evaluation frequencies inside (0, sample_rate/2).
struct FrequencyGrid {
  std::vector<double> freqs;

  std::size_t size() const { return freqs.size(); }
};

// Loads an IR from either accepted format (sniffed by content):
//  - text: one coefficient per line, '#' comments, blank lines ignored
//  - RIFF/WAVE: mono 32-bit float PCM; samples are the taps
// Text files carry no rate, so `text_sample_rate` applies to them.
AcousticPath load_ir(const std::filesystem::path& file,
                     double text_sample_rate = dsp::kDefaultSampleRate);

// Writes the text format, 17 significant digits (bit-exact round trip).
void save_ir(const AcousticPath& p, const std::filesystem::path& file);

// Writes the RIFF/WAVE float32 format (taps narrowed to float).
void save_ir_wav(const AcousticPath& p, const std::filesystem::path& file);

// Surrogate path: `delay` leading zeros, then seeded normal noise shaped by
// decay^(k-delay), normalized to unit l2 norm.
AcousticPath synth_path(std::uint64_t seed, std::size_t taps, double decay,
                        std::size_t delay);

// Unit impulse at `delay`.
AcousticPath delta_path(std::size_t taps, std::size_t delay);

// normalize((1-t)*a + t*b), zero-padding the shorter IR. t in [0,1].
AcousticPath blend_paths(const AcousticPath& a, const AcousticPath& b, double t,
                         std::string label = {});

// Zero-pads taps to exactly `len`; throws if the IR is longer.
dsp::FirFilter fit_taps(const dsp::FirFilter& ir, std::size_t len, const char* what);

// Log-spaced grid: f_1 = f_min, f_M = f_max, constant ratio.
FrequencyGrid log_grid(double f_min, double f_max, std::size_t points);

// 20*log10|H(f_m)| by direct DTFT evaluation at each grid frequency,
// floored at -300 dB for spectral zeros.
std::vector<double> magnitude_db(const AcousticPath& p, const FrequencyGrid& grid);

inline constexpr double kMagnitudeFloorDb = -300.0;

// Log-spectral distance: (1/sqrt(M)) * ||l_a - l_b||_2 on the grid.
double lsd(const AcousticPath& a, const AcousticPath& b, const FrequencyGrid& grid);

// Mean pairwise LSD over a set; requires at least two paths.
double dispersion(std::span<const AcousticPath> group, const FrequencyGrid& grid);

}  // namespace anc::paths

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "anc/dsp.hpp"
#include "anc/meta_init.hpp"
#include "anc/paths.hpp"

namespace anc::meta {

enum class PhaseAExcitation { aux, reference };

// Trainer configuration. Inner-loop step sizes are independent of the
// runtime controller's; the meta rates scale the across-task update.
struct MetaConfig {
  std::size_t L_w = 192;
  std::size_t L_s = 128;
  std::size_t T_A = 2000;  // identification steps
  std::size_t T_B = 4000;  // control steps
  std::size_t N_s = 256;   // validation samples feeding delta_psi
  std::size_t N_w = 256;   // validation samples feeding delta_phi
  double lambda_s = 0.999;
  double lambda_w = 0.999;
  double mu_s = 2e-3;  // inner step sizes mirror the runtime controller
  double mu_w = 1e-4;
  double alpha_s = 2e-3;
  double alpha_w = 5e-4;
  std::size_t K = 300;            // epochs
  std::size_t segment_len = 16000;  // samples drawn per task
  std::uint64_t seed = 1;
  PhaseAExcitation phase_a_excitation = PhaseAExcitation::aux;
  double divergence_limit = 1e6;

  void validate() const;
  std::size_t train_len() const { return T_A + L_s + T_B + L_w + L_s; }
  std::uint64_t digest() const;  // FNV-1a over the canonical field encoding
};

// Time-aligned signal windows for one inner-loop run.
struct Segment {
  dsp::SignalBuffer x;    // reference
  dsp::SignalBuffer d;    // disturbance (primary-filtered reference)
  dsp::SignalBuffer aux;  // unit-variance white excitation
};

// One sampled acoustic condition: the pair plus disjoint train/validation
// windows. `secondary_fit` is the true secondary path padded to L_s taps.
struct TaskDraw {
  paths::PathPair pair;
  dsp::FirFilter secondary_fit;
  Segment train;
  Segment val;
};

// Reference/disturbance generator settings for task draws.
struct SignalGenSpec {
  double band_lo = 200.0;
  double band_hi = 2000.0;
  double sample_rate = dsp::kDefaultSampleRate;
};

// Draws segment_len samples for a task: band-limited unit-RMS reference,
// its primary-filtered disturbance and a white auxiliary stream, split into
// a train prefix (train_len) and a validation suffix.
TaskDraw draw_task(const paths::PathPair& pair, const SignalGenSpec& gen,
                   const MetaConfig& cfg, std::uint64_t draw_seed);

// Phase A: T_A LMS identification steps of the secondary-path model against
// y_id = s_true' u, excited by `excitation` (needs T_A + L_s samples).
dsp::FirFilter phase_a(const dsp::FirFilter& psi_start, const dsp::FirFilter& s_true,
                       const dsp::SignalBuffer& excitation, const MetaConfig& cfg);

// Phase B: T_B FxLMS steps of the control filter with the frozen model
// s_hat shaping the filtered reference; e = d - w' x'.
dsp::FirFilter phase_b(const dsp::FirFilter& phi_start, const dsp::FirFilter& s_hat,
                       const dsp::SignalBuffer& x, const dsp::SignalBuffer& d,
                       const MetaConfig& cfg);

struct MetaGradients {
  dsp::FirFilter delta_phi;
  dsp::FirFilter delta_psi;
  double val_mse_w = 0.0;  // mean e^2 over the N_w accumulated samples
  double val_mse_s = 0.0;  // mean e_s^2 over the N_s accumulated samples
};

// Frozen-filter validation pass over task.val; accumulates the
// forgetting-weighted error-times-regressor sums anchored at the segment end.
MetaGradients meta_gradients(const dsp::FirFilter& w, const dsp::FirFilter& s_hat,
                             const TaskDraw& task, const MetaConfig& cfg);

struct EpochLog {
  std::size_t epoch;
  double val_mse_w;
  double val_mse_s;
};

// K across-task epochs from zero initializations: sample a task, adapt a
// fresh copy through Phase A/B, accumulate validation meta-gradients, apply
// phi += alpha_w*delta_phi and psi += alpha_s*delta_psi, zero accumulators.
MetaInit meta_train(std::span<const paths::PathPair> tasks, const MetaConfig& cfg,
                    const SignalGenSpec& gen, std::vector<EpochLog>* log = nullptr);

// Text artifact: header (lengths, rate, digest, epochs), then phi and psi
// one coefficient per line at 17 significant digits. Round trip is bit-exact.
void save_meta_init(const MetaInit& init, const std::filesystem::path& file);
MetaInit load_meta_init(const std::filesystem::path& file);

}  // namespace anc::meta

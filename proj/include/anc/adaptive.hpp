#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "anc/dsp.hpp"
#include "anc/meta_init.hpp"

namespace anc::adaptive {

// Runtime knobs of the cross-updated controller. Defaults are the documented
// stable settings for unit-RMS band-limited reference noise at 16 kHz.
struct OspmConfig {
  std::size_t L_w = 192;  // control filter taps
  std::size_t L_s = 128;  // secondary-path model taps
  double mu_w = 1e-4;
  double mu_s = 2e-3;
  double mu_h = 5e-4;
  double alpha = 0.999;   // EMA forgetting factor
  double c_aux = 0.15;    // auxiliary gain
  double eps = 1e-8;      // scheduling floor
  std::size_t delay_h = 64;  // bulk delay of the canceller regressor (default L_s/2)
  std::size_t detector_M = 800;         // look-back, samples
  double detector_gamma = 0.02;         // norm-jump threshold
  std::size_t detector_holdoff = 64000; // retrigger suppression, samples
  double divergence_limit = 1e6;

  void validate() const;
};

// Fixed-capacity chronological record of recent ||h|| values.
class NormHistory {
 public:
  explicit NormHistory(std::size_t capacity);
  void push(double v);
  void clear();
  std::size_t count() const { return count_; }
  double newest() const;
  // Value pushed `back` steps before the newest (back=0 is the newest).
  double at_back(std::size_t back) const;

 private:
  std::vector<double> buf_;
  std::size_t head_ = 0;  // slot of the next write
  std::size_t count_ = 0;
};

// Full runtime state of one controller instance. Plain data; single owner.
struct OspmState {
  explicit OspmState(const OspmConfig& cfg);

  OspmConfig cfg;
  dsp::FirFilter w;      // control filter
  dsp::FirFilter s_hat;  // secondary-path estimate
  dsp::FirFilter h;      // auxiliary canceller

  dsp::DelayLine x_line;   // reference; serves x_w, x_s and the delayed x_h
  dsp::DelayLine u_line;   // injected auxiliary samples v_m
  dsp::DelayLine uw_line;  // control outputs u
  dsp::DelayLine xf_line;  // filtered reference

  dsp::EmaPower p_x;
  dsp::EmaPower p_e;

  NormHistory h_hist;
  std::size_t holdoff = 0;
  std::uint64_t sample_index = 0;
  double aux_energy = 0.0;  // running sum of v_m^2

  bool detector_enabled = false;
  std::optional<meta::MetaInit> reset_init;  // target of detector resets
};

// One sample of controller output and diagnostics.
struct StepOutput {
  double e;        // microphone residual
  double e_prime;  // auxiliary-cleaned error
  double v_m;      // injected auxiliary sample
  double u;        // control output
  bool jump_fired;
};

// Scheduled auxiliary amplitude: c_aux * v * sqrt(min(P_x, P_e) + eps).
double aux_scale(double p_x, double p_e, double v, const OspmConfig& cfg);

// Advances the controller by one sample against the given true plant.
// Updates P_x, emits u and v_m, forms e and e', adapts s_hat/h/w in one
// pass, then runs the jump detector (which may reset the filters).
// Throws divergence_error when |e| exceeds the divergence limit.
StepOutput ospm_step(OspmState& state, double x, double d, double v,
                     const dsp::FirFilter& true_secondary);

// True iff the norm climbed by more than `gamma` over the last `M` entries.
// `history` is chronological (oldest first); fewer than M+1 entries never fire.
bool detect_jump(std::span<const double> history, std::size_t M, double gamma);

// h <- 0, s_hat <- psi, w <- phi. Delay lines and EMA powers survive; the
// detector history is cleared and the holdoff window starts.
void reset_to(OspmState& state, const meta::MetaInit& init);

}  // namespace anc::adaptive

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "anc/adaptive.hpp"
#include "anc/dsp.hpp"
#include "anc/errors.hpp"
#include "anc/meta.hpp"
#include "anc/paths.hpp"

namespace anc::harness {

enum class InitMode { zero, carry_over, meta };

struct Phase {
  paths::PathPair pair;
  double duration_sec = 20.0;
};

// One simulated experiment: an ordered phase list over a single controller.
struct ScenarioConfig {
  std::vector<Phase> phases;
  double sample_rate = dsp::kDefaultSampleRate;
  double band_lo = 200.0;
  double band_hi = 2000.0;
  adaptive::OspmConfig ospm;
  InitMode init_mode = InitMode::zero;
  std::optional<meta::MetaInit> init;  // required for InitMode::meta
  bool detector_enabled = false;
  std::uint64_t seed = 1;
  double target_rel_db = -10.0;    // time-to-target level relative to the disturbance
  double mse_window_sec = 0.5;
  double mse_hop_sec = 0.1;
  bool keep_raw = false;

  void validate() const;
};

struct SeriesPoint {
  double t_sec;
  double value_db;
};

struct MetricsReport {
  std::vector<SeriesPoint> mse_db;        // sliding MSE of the mic residual
  std::vector<SeriesPoint> aux_power_db;  // sliding power of the injected probe
  std::vector<double> phase_start_sec;
  std::vector<double> dist_db;                        // uncontrolled level per phase
  std::vector<std::optional<double>> time_to_target;  // absolute seconds, per phase
  std::vector<std::optional<double>> recovery_time;   // seconds past each switch
  std::vector<double> aux_energy;                     // sum v_m^2 per phase
  double mean_reduction_db = 0.0;  // disturbance vs residual power, first 5 s
  std::vector<double> jump_times_sec;        // detector firings
  std::vector<double> raw_e, raw_vm, raw_d;  // filled when keep_raw
};

// Divergence inside a scenario; carries the timestamp and the metrics of the
// samples that completed, so callers can flush a partial report.
class scenario_divergence : public divergence_error {
 public:
  scenario_divergence(std::uint64_t sample, double t_sec,
                      std::shared_ptr<MetricsReport> partial)
      : divergence_error("scenario diverged", sample),
        t_sec_(t_sec),
        partial_(std::move(partial)) {}
  double seconds() const { return t_sec_; }
  const MetricsReport& partial() const { return *partial_; }

 private:
  double t_sec_;
  std::shared_ptr<MetricsReport> partial_;
};

// Runs the phases sample-by-sample against one controller. Paths swap
// instantaneously at phase boundaries; init_mode picks the boundary policy
// (zero: filters zeroed, carry_over: untouched, meta: detector-driven resets).
MetricsReport run_scenario(const ScenarioConfig& cfg);

// 10*log10(mean e^2) over each hop-aligned window, floored at -300 dB.
// Point times are window centers. Returns an empty series when the signal is
// shorter than one window.
std::vector<SeriesPoint> sliding_mse_db(std::span<const double> e, std::size_t window,
                                        std::size_t hop, double sample_rate);

// Earliest time >= phase_start at which the series is at/below target_db and
// stays below target_db + hold_margin_db for the following hold_sec.
std::optional<double> time_to_target(std::span<const SeriesPoint> series,
                                     double target_db, double phase_start_sec,
                                     double hold_sec = 1.0,
                                     double hold_margin_db = 3.0);

struct NamedPathSet {
  std::string name;
  std::vector<paths::PathPair> pairs;
};

struct DiversityRow {
  std::string name;
  double d_pri_db;
  double d_sec_db;
  double mean_reduction_db;
};

// Per training set: within-set dispersion of primaries and secondaries, a
// meta-trained init, and the mean first-5-s reduction over the held-out pairs
// under a meta-initialized run of the template scenario.
std::vector<DiversityRow> diversity_study(std::span<const NamedPathSet> training_sets,
                                          std::span<const paths::PathPair> heldout,
                                          const meta::MetaConfig& meta_cfg,
                                          const ScenarioConfig& scenario_template);

// Surrogate task families: correlated perturbations around a common base so
// initialization transfer is meaningful across members.
struct PerturbSpec {
  double decay = 0.9;
  std::size_t delay = 0;
  double mix = 0.3;  // 0: identical to the base; 1: independent of it
};

struct FamilySpec {
  std::uint64_t seed = 1;
  std::size_t count = 8;
  std::size_t taps_primary = 128;
  std::size_t taps_secondary = 128;
  PerturbSpec primary;
  PerturbSpec secondary;
  // Weight of a delay-aligned unit impulse blended into the secondary base;
  // keeps surrogate plants well-behaved for feedforward cancellation.
  double secondary_delta_weight = 0.7;
  std::string label_prefix = "fam";
};

std::vector<paths::PathPair> make_surrogate_family(const FamilySpec& spec);

// Tight variations around one pair (low-dispersion sets).
std::vector<paths::PathPair> make_cluster(const paths::PathPair& center,
                                          std::size_t count, PerturbSpec primary,
                                          PerturbSpec secondary, std::uint64_t seed,
                                          const std::string& label_prefix);

// CSV exports. Columns and formats are part of the artifact contract.
void write_report_csv(const MetricsReport& r, std::ostream& out);
void write_summary_csv(const MetricsReport& r, std::ostream& out,
                       std::optional<double> diverged_at_sec = std::nullopt);
void write_diversity_csv(std::span<const DiversityRow> rows, std::ostream& out);

}  // namespace anc::harness

#include "anc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace anc::harness {

namespace {

constexpr double kFloorDb = -300.0;

double power_db(double sum_sq, std::size_t n) {
  if (n == 0 || sum_sq <= 0.0) return kFloorDb;
  return std::max(10.0 * std::log10(sum_sq / static_cast<double>(n)), kFloorDb);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void ScenarioConfig::validate() const {
  if (phases.empty()) throw contract_error("ScenarioConfig: need at least one phase");
  for (const Phase& p : phases) {
    if (!(p.duration_sec > 0.0))
      throw contract_error("ScenarioConfig: phase durations must be > 0");
    if (p.pair.primary.sample_rate != sample_rate ||
        p.pair.secondary.sample_rate != sample_rate)
      throw contract_error("ScenarioConfig: all paths must match the scenario rate");
    if (p.pair.primary.ir.c.empty() || p.pair.secondary.ir.c.empty())
      throw contract_error("ScenarioConfig: empty impulse response");
  }
  if (!(0.0 < band_lo && band_lo < band_hi && band_hi < sample_rate / 2.0))
    throw contract_error("ScenarioConfig: invalid noise band");
  ospm.validate();
  if (init_mode == InitMode::meta) {
    if (!init) throw contract_error("ScenarioConfig: meta init mode needs an init");
    if (init->phi.size() != ospm.L_w || init->psi.size() != ospm.L_s)
      throw contract_error("ScenarioConfig: init dimensions do not match ospm config");
  }
  if (!(mse_window_sec > 0.0 && mse_hop_sec > 0.0))
    throw contract_error("ScenarioConfig: window and hop must be > 0");
}

std::vector<SeriesPoint> sliding_mse_db(std::span<const double> e, std::size_t window,
                                        std::size_t hop, double sample_rate) {
  std::vector<SeriesPoint> out;
  if (window < 1 || hop < 1) throw contract_error("sliding_mse_db: window/hop >= 1");
  if (e.size() < window) return out;
  for (std::size_t start = 0; start + window <= e.size(); start += hop) {
    double acc = 0.0;
    for (std::size_t i = start; i < start + window; ++i) acc += e[i] * e[i];
    out.push_back({(static_cast<double>(start) + 0.5 * static_cast<double>(window)) /
                       sample_rate,
                   power_db(acc, window)});
  }
  return out;
}

std::optional<double> time_to_target(std::span<const SeriesPoint> series,
                                     double target_db, double phase_start_sec,
                                     double hold_sec, double hold_margin_db) {
  auto holds_from = [&](double t0) {
    bool saw_first = false;
    for (const SeriesPoint& p : series) {
      if (p.t_sec < t0) continue;
      if (p.t_sec > t0 + hold_sec + 1e-9) break;
      if (!saw_first) {
        if (p.value_db > target_db) return false;
        saw_first = true;
      } else if (p.value_db > target_db + hold_margin_db) {
        return false;
      }
    }
    return saw_first;
  };

  if (holds_from(phase_start_sec)) return phase_start_sec;
  for (const SeriesPoint& p : series) {
    if (p.t_sec <= phase_start_sec || p.value_db > target_db) continue;
    if (holds_from(p.t_sec)) return p.t_sec;
  }
  return std::nullopt;
}

namespace {

// Median sliding MSE over the last 20% of a phase, using windows that lie
// fully inside the phase.
std::optional<double> steady_state_db(std::span<const SeriesPoint> series,
                                      double phase_start, double phase_end,
                                      double window_sec) {
  std::vector<double> inside;
  for (const SeriesPoint& p : series) {
    const double w0 = p.t_sec - window_sec / 2.0;
    const double w1 = p.t_sec + window_sec / 2.0;
    if (w0 >= phase_start - 1e-9 && w1 <= phase_end + 1e-9)
      inside.push_back(p.value_db);
  }
  if (inside.empty()) return std::nullopt;
  const std::size_t tail = std::max<std::size_t>(1, inside.size() / 5);
  return median({inside.end() - static_cast<std::ptrdiff_t>(tail), inside.end()});
}

MetricsReport build_report(const ScenarioConfig& cfg, std::span<const double> e_raw,
                           std::span<const double> vm_raw, std::span<const double> d_raw,
                           std::span<const std::size_t> phase_start,
                           std::span<const double> aux_energy_after,
                           std::span<const double> jump_times) {
  MetricsReport r;
  const double fs = cfg.sample_rate;
  const auto window = static_cast<std::size_t>(std::lround(cfg.mse_window_sec * fs));
  const auto hop = static_cast<std::size_t>(std::lround(cfg.mse_hop_sec * fs));
  r.mse_db = sliding_mse_db(e_raw, window, hop, fs);
  r.aux_power_db = sliding_mse_db(vm_raw, window, hop, fs);

  const std::size_t n_done = e_raw.size();
  const std::size_t n_phases = phase_start.size();
  for (std::size_t p = 0; p < n_phases; ++p) {
    const std::size_t begin = phase_start[p];
    const std::size_t end = (p + 1 < n_phases) ? phase_start[p + 1] : n_done;
    if (begin >= n_done) break;
    r.phase_start_sec.push_back(static_cast<double>(begin) / fs);

    double d2 = 0.0;
    for (std::size_t i = begin; i < std::min(end, n_done); ++i) d2 += d_raw[i] * d_raw[i];
    r.dist_db.push_back(power_db(d2, std::min(end, n_done) - begin));

    r.time_to_target.push_back(time_to_target(
        r.mse_db, r.dist_db.back() + cfg.target_rel_db, static_cast<double>(begin) / fs));

    const double prev_energy = (p == 0) ? 0.0 : aux_energy_after[p - 1];
    r.aux_energy.push_back(aux_energy_after[p] - prev_energy);
  }

  // Recovery per switch: target is the pre-switch steady state plus 3 dB.
  for (std::size_t sw = 1; sw < r.phase_start_sec.size(); ++sw) {
    const double prev_start = r.phase_start_sec[sw - 1];
    const double switch_t = r.phase_start_sec[sw];
    const auto steady =
        steady_state_db(r.mse_db, prev_start, switch_t, cfg.mse_window_sec);
    std::optional<double> rec;
    if (steady) {
      const auto t = time_to_target(r.mse_db, *steady + 3.0, switch_t);
      if (t) rec = *t - switch_t;
    }
    r.recovery_time.push_back(rec);
  }

  // Mean reduction over the first 5 s (or the first phase if shorter).
  const std::size_t first_end =
      (n_phases > 1) ? std::min(phase_start[1], n_done) : n_done;
  const std::size_t red_len =
      std::min(first_end, static_cast<std::size_t>(std::lround(5.0 * fs)));
  double d2 = 0.0, e2 = 0.0;
  for (std::size_t i = 0; i < red_len; ++i) {
    d2 += d_raw[i] * d_raw[i];
    e2 += e_raw[i] * e_raw[i];
  }
  r.mean_reduction_db = power_db(d2, red_len) - power_db(e2, red_len);

  r.jump_times_sec.assign(jump_times.begin(), jump_times.end());

  if (cfg.keep_raw) {
    r.raw_e.assign(e_raw.begin(), e_raw.end());
    r.raw_vm.assign(vm_raw.begin(), vm_raw.end());
    r.raw_d.assign(d_raw.begin(), d_raw.end());
  }
  return r;
}

}  // namespace

MetricsReport run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const double fs = cfg.sample_rate;

  std::vector<std::size_t> phase_start;
  std::size_t total = 0;
  for (const Phase& p : cfg.phases) {
    phase_start.push_back(total);
    total += static_cast<std::size_t>(std::lround(p.duration_sec * fs));
  }

  dsp::SignalBuffer x = dsp::band_limit(
      dsp::white_noise(dsp::mix_seed(cfg.seed, 1), total, fs), cfg.band_lo, cfg.band_hi);
  const double xr = dsp::rms(x.samples);
  if (xr > 0.0)
    for (double& v : x.samples) v /= xr;
  const dsp::SignalBuffer v = dsp::white_noise(dsp::mix_seed(cfg.seed, 2), total, fs);

  std::size_t max_p = 1;
  for (const Phase& p : cfg.phases) max_p = std::max(max_p, p.pair.primary.ir.size());
  std::vector<dsp::FirFilter> primaries, secondaries;
  for (const Phase& p : cfg.phases) {
    primaries.push_back(paths::fit_taps(p.pair.primary.ir, max_p, "run_scenario"));
    secondaries.push_back(
        paths::fit_taps(p.pair.secondary.ir, cfg.ospm.L_s, "run_scenario"));
  }

  adaptive::OspmState st(cfg.ospm);
  st.detector_enabled = cfg.detector_enabled;
  if (cfg.init_mode == InitMode::meta) {
    st.reset_init = cfg.init;
    adaptive::reset_to(st, *cfg.init);
  }

  dsp::DelayLine p_line(max_p);
  std::vector<double> e_raw(total), vm_raw(total), d_raw(total);
  std::vector<double> aux_energy_after(cfg.phases.size(), 0.0);
  std::vector<double> jump_times;

  std::size_t phase = 0;
  for (std::size_t n = 0; n < total; ++n) {
    if (phase + 1 < phase_start.size() && n == phase_start[phase + 1]) {
      aux_energy_after[phase] = st.aux_energy;
      ++phase;
      if (cfg.init_mode == InitMode::zero) {
        st.w.zero();
        st.s_hat.zero();
        st.h.zero();
      }
      // carry_over: untouched; meta: the jump detector handles the reset.
    }
    const double d =
        dsp::fir_apply(primaries[phase], dsp::push_and_window(p_line, x.samples[n], max_p));
    d_raw[n] = d;
    try {
      const adaptive::StepOutput out =
          adaptive::ospm_step(st, x.samples[n], d, v.samples[n], secondaries[phase]);
      e_raw[n] = out.e;
      vm_raw[n] = out.v_m;
      if (out.jump_fired) jump_times.push_back(static_cast<double>(n) / fs);
    } catch (const divergence_error&) {
      for (std::size_t p = phase; p < aux_energy_after.size(); ++p)
        aux_energy_after[p] = st.aux_energy;
      auto partial = std::make_shared<MetricsReport>(build_report(
          cfg, std::span(e_raw).first(n), std::span(vm_raw).first(n),
          std::span(d_raw).first(n), phase_start, aux_energy_after, jump_times));
      throw scenario_divergence(n, static_cast<double>(n) / fs, std::move(partial));
    }
  }
  aux_energy_after[phase] = st.aux_energy;

  return build_report(cfg, e_raw, vm_raw, d_raw, phase_start, aux_energy_after,
                      jump_times);
}

std::vector<DiversityRow> diversity_study(std::span<const NamedPathSet> training_sets,
                                          std::span<const paths::PathPair> heldout,
                                          const meta::MetaConfig& meta_cfg,
                                          const ScenarioConfig& scenario_template) {
  if (heldout.empty()) throw contract_error("diversity_study: held-out list is empty");
  scenario_template.validate();

  std::set<std::pair<std::string, std::string>> held_labels;
  for (const paths::PathPair& p : heldout)
    held_labels.insert({p.primary.label, p.secondary.label});

  const paths::FrequencyGrid grid = paths::log_grid(100.0, 2000.0, 64);
  const meta::SignalGenSpec gen{scenario_template.band_lo, scenario_template.band_hi,
                                scenario_template.sample_rate};

  std::vector<DiversityRow> rows;
  for (const NamedPathSet& set : training_sets) {
    if (set.pairs.size() < 2)
      throw contract_error("diversity_study: set '" + set.name + "' needs >= 2 pairs");
    std::vector<paths::AcousticPath> pris, secs;
    for (const paths::PathPair& p : set.pairs) {
      if (held_labels.count({p.primary.label, p.secondary.label}))
        throw contract_error("diversity_study: set '" + set.name +
                             "' overlaps the held-out list");
      pris.push_back(p.primary);
      secs.push_back(p.secondary);
    }

    DiversityRow row;
    row.name = set.name;
    row.d_pri_db = paths::dispersion(pris, grid);
    row.d_sec_db = paths::dispersion(secs, grid);

    const meta::MetaInit init = meta::meta_train(set.pairs, meta_cfg, gen);
    double acc = 0.0;
    for (const paths::PathPair& pair : heldout) {
      ScenarioConfig run = scenario_template;
      run.phases = {Phase{pair, scenario_template.phases.front().duration_sec}};
      run.init_mode = InitMode::meta;
      run.init = init;
      acc += run_scenario(run).mean_reduction_db;
    }
    row.mean_reduction_db = acc / static_cast<double>(heldout.size());
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<paths::PathPair> make_surrogate_family(const FamilySpec& spec) {
  if (spec.count < 1) throw contract_error("make_surrogate_family: count must be >= 1");
  if (!(spec.secondary_delta_weight >= 0.0 && spec.secondary_delta_weight <= 1.0))
    throw contract_error("make_surrogate_family: delta weight must be in [0,1]");

  const paths::AcousticPath base_pri = paths::synth_path(
      dsp::mix_seed(spec.seed, 1), spec.taps_primary, spec.primary.decay,
      spec.primary.delay);
  const paths::AcousticPath base_sec = paths::synth_path(
      dsp::mix_seed(spec.seed, 2), spec.taps_secondary, spec.secondary.decay,
      spec.secondary.delay);
  // Every member keeps the same delay-aligned impulse anchor; the perturbed
  // tail carries the member-to-member diversity. This bounds the phase spread
  // so a mis-matched model cannot turn the filtered reference upside down.
  const paths::AcousticPath anchor =
      paths::delta_path(spec.taps_secondary, spec.secondary.delay);

  std::vector<paths::PathPair> out;
  for (std::size_t i = 0; i < spec.count; ++i) {
    paths::PathPair pair;
    pair.primary =
        (spec.primary.mix > 0.0)
            ? paths::blend_paths(base_pri,
                                 paths::synth_path(dsp::mix_seed(spec.seed, 100 + i),
                                                   spec.taps_primary, spec.primary.decay,
                                                   spec.primary.delay),
                                 spec.primary.mix)
            : base_pri;
    paths::AcousticPath tail =
        (spec.secondary.mix > 0.0)
            ? paths::blend_paths(base_sec,
                                 paths::synth_path(dsp::mix_seed(spec.seed, 200 + i),
                                                   spec.taps_secondary,
                                                   spec.secondary.decay,
                                                   spec.secondary.delay),
                                 spec.secondary.mix)
            : base_sec;
    pair.secondary = (spec.secondary_delta_weight > 0.0)
                         ? paths::blend_paths(anchor, tail,
                                              1.0 - spec.secondary_delta_weight)
                         : tail;
    pair.primary.label = spec.label_prefix + "/p" + std::to_string(i);
    pair.secondary.label = spec.label_prefix + "/s" + std::to_string(i);
    out.push_back(std::move(pair));
  }
  return out;
}

std::vector<paths::PathPair> make_cluster(const paths::PathPair& center,
                                          std::size_t count, PerturbSpec primary,
                                          PerturbSpec secondary, std::uint64_t seed,
                                          const std::string& label_prefix) {
  std::vector<paths::PathPair> out;
  for (std::size_t i = 0; i < count; ++i) {
    paths::PathPair pair;
    pair.primary =
        (primary.mix > 0.0)
            ? paths::blend_paths(center.primary,
                                 paths::synth_path(dsp::mix_seed(seed, 300 + i),
                                                   center.primary.ir.size(),
                                                   primary.decay, primary.delay),
                                 primary.mix)
            : center.primary;
    pair.secondary =
        (secondary.mix > 0.0)
            ? paths::blend_paths(center.secondary,
                                 paths::synth_path(dsp::mix_seed(seed, 400 + i),
                                                   center.secondary.ir.size(),
                                                   secondary.decay, secondary.delay),
                                 secondary.mix)
            : center.secondary;
    pair.primary.label = label_prefix + "/p" + std::to_string(i);
    pair.secondary.label = label_prefix + "/s" + std::to_string(i);
    out.push_back(std::move(pair));
  }
  return out;
}

void write_report_csv(const MetricsReport& r, std::ostream& out) {
  out << "t_sec,mse_db,aux_power_db\n";
  for (std::size_t i = 0; i < r.mse_db.size(); ++i) {
    const double aux = (i < r.aux_power_db.size()) ? r.aux_power_db[i].value_db : 0.0;
    out << fmt(r.mse_db[i].t_sec) << "," << fmt(r.mse_db[i].value_db) << ","
        << fmt(aux) << "\n";
  }
}

void write_summary_csv(const MetricsReport& r, std::ostream& out,
                       std::optional<double> diverged_at_sec) {
  out << "metric,value\n";
  out << "phases," << r.phase_start_sec.size() << "\n";
  for (std::size_t p = 0; p < r.phase_start_sec.size(); ++p) {
    out << "phase_start_sec_" << p << "," << fmt(r.phase_start_sec[p]) << "\n";
    out << "dist_db_" << p << "," << fmt(r.dist_db[p]) << "\n";
    out << "time_to_target_sec_" << p << "," << fmt_opt(r.time_to_target[p]) << "\n";
    out << "aux_energy_" << p << "," << fmt(r.aux_energy[p]) << "\n";
  }
  for (std::size_t s = 0; s < r.recovery_time.size(); ++s)
    out << "recovery_sec_switch" << (s + 1) << "," << fmt_opt(r.recovery_time[s])
        << "\n";
  for (std::size_t j = 0; j < r.jump_times_sec.size(); ++j)
    out << "jump_time_sec_" << j << "," << fmt(r.jump_times_sec[j]) << "\n";
  out << "mean_reduction_db," << fmt(r.mean_reduction_db) << "\n";
  if (diverged_at_sec) out << "diverged_at," << fmt(*diverged_at_sec) << "\n";
}

void write_diversity_csv(std::span<const DiversityRow> rows, std::ostream& out) {
  out << "set,D_pri_db,D_sec_db,mean_reduction_db\n";
  for (const DiversityRow& r : rows)
    out << r.name << "," << fmt(r.d_pri_db) << "," << fmt(r.d_sec_db) << ","
        << fmt(r.mean_reduction_db) << "\n";
}

}  // namespace anc::harness

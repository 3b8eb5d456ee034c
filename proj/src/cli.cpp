#include "anc/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "anc/errors.hpp"
#include "anc/harness.hpp"
#include "anc/meta.hpp"

namespace anc::cli {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void log_line(bool quiet, const std::string& msg) {
  if (!quiet) std::fprintf(stderr, "%s\n", msg.c_str());
}

json load_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw io_error("cannot open config: " + file.string());
  try {
    return json::parse(in, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw parse_error(file.string() + ": " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw contract_error(std::string("config field '") + key + "': " + e.what());
  }
}

template <typename T>
T require(const json& j, const char* key, const char* where) {
  if (!j.contains(key))
    throw contract_error(std::string(where) + ": missing required field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw contract_error(std::string(where) + " field '" + key + "': " + e.what());
  }
}

// Shared context: root seed, rates, band, filter configs and the path pool.
struct Context {
  std::filesystem::path base_dir;
  json root;
  double sample_rate = dsp::kDefaultSampleRate;
  std::uint64_t seed = 1;
  double band_lo = 200.0;
  double band_hi = 2000.0;
  adaptive::OspmConfig ospm;
  meta::MetaConfig meta_cfg;
  std::vector<paths::PathPair> pool;
};

std::uint64_t fnv1a_bytes(const void* data, std::size_t len) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

paths::AcousticPath resolve_ir(const json& j, const Context& ctx);

paths::AcousticPath resolve_blend(const json& j, const Context& ctx) {
  paths::AcousticPath a = resolve_ir(require<json>(j, "a", "blend"), ctx);
  paths::AcousticPath b = resolve_ir(require<json>(j, "b", "blend"), ctx);
  return paths::blend_paths(a, b, require<double>(j, "t", "blend"));
}

paths::AcousticPath resolve_ir(const json& j, const Context& ctx) {
  if (!j.is_object()) throw contract_error("ir spec must be an object");
  if (j.contains("file")) {
    const std::filesystem::path f =
        ctx.base_dir / j.at("file").get<std::string>();
    paths::AcousticPath p = paths::load_ir(f, ctx.sample_rate);
    if (p.sample_rate != ctx.sample_rate)
      throw contract_error(f.string() + ": sample rate " + fmt(p.sample_rate) +
                           " does not match the configured " + fmt(ctx.sample_rate));
    return p;
  }
  if (j.contains("taps")) {
    paths::AcousticPath p;
    p.sample_rate = ctx.sample_rate;
    p.ir.c = j.at("taps").get<std::vector<double>>();
    if (p.ir.c.empty()) throw contract_error("ir spec: 'taps' must be non-empty");
    for (double v : p.ir.c)
      if (!std::isfinite(v)) throw contract_error("ir spec: non-finite tap");
    p.label = "inline/" + std::to_string(fnv1a_bytes(
                              p.ir.c.data(), p.ir.c.size() * sizeof(double)));
    return p;
  }
  if (j.contains("delta")) {
    const json& d = j.at("delta");
    paths::AcousticPath p = paths::delta_path(require<std::size_t>(d, "taps", "delta"),
                                              require<std::size_t>(d, "delay", "delta"));
    p.sample_rate = ctx.sample_rate;
    return p;
  }
  if (j.contains("synth")) {
    const json& s = j.at("synth");
    paths::AcousticPath p = paths::synth_path(
        require<std::uint64_t>(s, "seed", "synth"), require<std::size_t>(s, "taps", "synth"),
        require<double>(s, "decay", "synth"), require<std::size_t>(s, "delay", "synth"));
    p.sample_rate = ctx.sample_rate;
    return p;
  }
  if (j.contains("blend")) return resolve_blend(j.at("blend"), ctx);
  throw contract_error("ir spec: expected one of file/taps/delta/synth/blend");
}

paths::PathPair resolve_pair(const json& j, const Context& ctx) {
  if (!j.is_object()) throw contract_error("pair spec must be an object");
  if (j.contains("pool")) {
    const std::size_t idx = j.at("pool").get<std::size_t>();
    if (idx >= ctx.pool.size())
      throw contract_error("pair spec: pool index " + std::to_string(idx) +
                           " out of range (pool has " + std::to_string(ctx.pool.size()) +
                           " pairs)");
    return ctx.pool[idx];
  }
  paths::PathPair p;
  p.primary = resolve_ir(require<json>(j, "primary", "pair"), ctx);
  p.secondary = resolve_ir(require<json>(j, "secondary", "pair"), ctx);
  return p;
}

harness::PerturbSpec resolve_perturb(const json& j, const char* where) {
  harness::PerturbSpec p;
  p.decay = require<double>(j, "decay", where);
  p.delay = require<std::size_t>(j, "delay", where);
  p.mix = require<double>(j, "mix", where);
  return p;
}

std::vector<paths::PathPair> resolve_family(const json& j, const Context& ctx) {
  harness::FamilySpec spec;
  spec.seed = get_or<std::uint64_t>(j, "seed", ctx.seed);
  spec.count = require<std::size_t>(j, "count", "family");
  spec.taps_primary = get_or<std::size_t>(j, "taps_primary", 128);
  spec.taps_secondary = get_or<std::size_t>(j, "taps_secondary", 128);
  spec.primary = resolve_perturb(require<json>(j, "primary", "family"), "family.primary");
  spec.secondary =
      resolve_perturb(require<json>(j, "secondary", "family"), "family.secondary");
  spec.secondary_delta_weight = get_or<double>(j, "secondary_delta_weight", 0.7);
  spec.label_prefix = get_or<std::string>(j, "label_prefix", "fam");
  auto out = harness::make_surrogate_family(spec);
  for (auto& pair : out) {
    pair.primary.sample_rate = ctx.sample_rate;
    pair.secondary.sample_rate = ctx.sample_rate;
  }
  return out;
}

Context load_context(const RunManifest& m) {
  Context ctx;
  ctx.base_dir = m.config_file.parent_path();
  ctx.root = load_json(m.config_file);
  const json& r = ctx.root;

  ctx.sample_rate = get_or<double>(r, "sample_rate", dsp::kDefaultSampleRate);
  ctx.seed = get_or<std::uint64_t>(r, "seed", 1);
  if (m.seed_override) ctx.seed = *m.seed_override;
  if (r.contains("band_hz")) {
    const auto band = r.at("band_hz").get<std::vector<double>>();
    if (band.size() != 2) throw contract_error("band_hz must be [lo, hi]");
    ctx.band_lo = band[0];
    ctx.band_hi = band[1];
  }

  const json o = r.contains("ospm") ? r.at("ospm") : json::object();
  adaptive::OspmConfig& c = ctx.ospm;
  c.L_w = get_or<std::size_t>(o, "l_w", c.L_w);
  c.L_s = get_or<std::size_t>(o, "l_s", c.L_s);
  c.mu_w = get_or<double>(o, "mu_w", c.mu_w);
  c.mu_s = get_or<double>(o, "mu_s", c.mu_s);
  c.mu_h = get_or<double>(o, "mu_h", c.mu_h);
  c.alpha = get_or<double>(o, "alpha", c.alpha);
  c.c_aux = get_or<double>(o, "c_aux", c.c_aux);
  c.eps = get_or<double>(o, "eps", c.eps);
  c.delay_h = get_or<std::size_t>(o, "delay_h", c.L_s / 2);
  c.detector_M = get_or<std::size_t>(o, "detector_m", c.detector_M);
  c.detector_gamma = get_or<double>(o, "detector_gamma", c.detector_gamma);
  c.detector_holdoff = get_or<std::size_t>(o, "detector_holdoff", c.detector_holdoff);
  c.divergence_limit = get_or<double>(o, "divergence_limit", c.divergence_limit);
  c.validate();

  const json mj = r.contains("meta") ? r.at("meta") : json::object();
  meta::MetaConfig& mc = ctx.meta_cfg;
  mc.L_w = c.L_w;
  mc.L_s = c.L_s;
  mc.T_A = get_or<std::size_t>(mj, "t_a", mc.T_A);
  mc.T_B = get_or<std::size_t>(mj, "t_b", mc.T_B);
  mc.N_s = get_or<std::size_t>(mj, "n_s", mc.N_s);
  mc.N_w = get_or<std::size_t>(mj, "n_w", mc.N_w);
  mc.lambda_s = get_or<double>(mj, "lambda_s", mc.lambda_s);
  mc.lambda_w = get_or<double>(mj, "lambda_w", mc.lambda_w);
  mc.mu_s = get_or<double>(mj, "mu_s", mc.mu_s);
  mc.mu_w = get_or<double>(mj, "mu_w", mc.mu_w);
  mc.alpha_s = get_or<double>(mj, "alpha_s", mc.alpha_s);
  mc.alpha_w = get_or<double>(mj, "alpha_w", mc.alpha_w);
  mc.K = get_or<std::size_t>(mj, "k", mc.K);
  mc.segment_len = get_or<std::size_t>(mj, "segment_len", mc.segment_len);
  // The trainer stream is derived from the root seed unless pinned here.
  mc.seed = get_or<std::uint64_t>(mj, "seed", dsp::mix_seed(ctx.seed, 0x6D657461ULL));
  const std::string exc = get_or<std::string>(mj, "phase_a_excitation", "aux");
  if (exc == "aux")
    mc.phase_a_excitation = meta::PhaseAExcitation::aux;
  else if (exc == "reference")
    mc.phase_a_excitation = meta::PhaseAExcitation::reference;
  else
    throw contract_error("meta.phase_a_excitation must be 'aux' or 'reference'");
  mc.divergence_limit = get_or<double>(mj, "divergence_limit", mc.divergence_limit);
  mc.validate();

  if (r.contains("pool")) {
    const json& pj = r.at("pool");
    if (pj.contains("family")) {
      ctx.pool = resolve_family(pj.at("family"), ctx);
    } else if (pj.contains("pairs")) {
      for (const json& pairj : pj.at("pairs")) ctx.pool.push_back(resolve_pair(pairj, ctx));
    } else {
      throw contract_error("pool: expected 'family' or 'pairs'");
    }
  }
  return ctx;
}

harness::ScenarioConfig scenario_from(const Context& ctx, const json& sj) {
  harness::ScenarioConfig sc;
  sc.sample_rate = ctx.sample_rate;
  sc.band_lo = ctx.band_lo;
  sc.band_hi = ctx.band_hi;
  sc.ospm = ctx.ospm;
  sc.seed = ctx.seed;
  for (const json& pj : require<json>(sj, "phases", "scenario")) {
    harness::Phase ph;
    ph.pair = resolve_pair(require<json>(pj, "pair", "phase"), ctx);
    ph.duration_sec = require<double>(pj, "duration_sec", "phase");
    sc.phases.push_back(std::move(ph));
  }
  const std::string mode = get_or<std::string>(sj, "init_mode", "zero");
  if (mode == "zero")
    sc.init_mode = harness::InitMode::zero;
  else if (mode == "carry_over")
    sc.init_mode = harness::InitMode::carry_over;
  else if (mode == "meta")
    sc.init_mode = harness::InitMode::meta;
  else
    throw contract_error("scenario.init_mode must be zero|carry_over|meta");
  if (sc.init_mode == harness::InitMode::meta) {
    const std::string f = require<std::string>(sj, "meta_init_file", "scenario");
    sc.init = meta::load_meta_init(ctx.base_dir / f);
  }
  sc.detector_enabled = get_or<bool>(sj, "detector_enabled", false);
  sc.target_rel_db = get_or<double>(sj, "target_rel_db", -10.0);
  sc.mse_window_sec = get_or<double>(sj, "mse_window_sec", 0.5);
  sc.mse_hop_sec = get_or<double>(sj, "mse_hop_sec", 0.1);
  return sc;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw io_error("cannot write: " + p.string());
  return out;
}

}  // namespace

int cmd_meta_train(const RunManifest& m) {
  const Context ctx = load_context(m);
  if (!ctx.root.contains("meta_train"))
    throw contract_error("config: missing 'meta_train' section");
  const json& tj = ctx.root.at("meta_train");

  std::vector<paths::PathPair> tasks;
  for (const json& pj : require<json>(tj, "tasks", "meta_train"))
    tasks.push_back(resolve_pair(pj, ctx));
  if (tasks.empty()) throw contract_error("meta_train: task list is empty");

  const meta::SignalGenSpec gen{ctx.band_lo, ctx.band_hi, ctx.sample_rate};
  std::vector<meta::EpochLog> log;
  const meta::MetaInit init = meta::meta_train(tasks, ctx.meta_cfg, gen, &log);

  std::filesystem::create_directories(m.out_dir);
  const auto artifact =
      m.out_dir / get_or<std::string>(tj, "artifact", "meta_init.txt");
  meta::save_meta_init(init, artifact);

  const auto log_file = m.out_dir / get_or<std::string>(tj, "log", "train_log.csv");
  auto out = open_out(log_file);
  out << "epoch,val_mse,val_mse_sp\n";
  for (const meta::EpochLog& l : log)
    out << l.epoch << "," << fmt(l.val_mse_w) << "," << fmt(l.val_mse_s) << "\n";

  log_line(m.quiet, "meta-train: " + std::to_string(ctx.meta_cfg.K) + " epochs over " +
                        std::to_string(tasks.size()) + " tasks -> " + artifact.string());
  return kExitOk;
}

int cmd_run(const RunManifest& m) {
  const Context ctx = load_context(m);
  if (!ctx.root.contains("scenario"))
    throw contract_error("config: missing 'scenario' section");
  const json& sj = ctx.root.at("scenario");
  const harness::ScenarioConfig sc = scenario_from(ctx, sj);

  std::filesystem::create_directories(m.out_dir);
  const auto report_file = m.out_dir / get_or<std::string>(sj, "report", "report.csv");
  const auto summary_file = m.out_dir / get_or<std::string>(sj, "summary", "summary.csv");

  try {
    const harness::MetricsReport r = harness::run_scenario(sc);
    {
      auto out = open_out(report_file);
      harness::write_report_csv(r, out);
    }
    {
      auto out = open_out(summary_file);
      harness::write_summary_csv(r, out);
    }
    log_line(m.quiet, "run: " + std::to_string(sc.phases.size()) + " phase(s) -> " +
                          report_file.string());
    return kExitOk;
  } catch (const harness::scenario_divergence& d) {
    {
      auto out = open_out(report_file);
      harness::write_report_csv(d.partial(), out);
    }
    {
      auto out = open_out(summary_file);
      harness::write_summary_csv(d.partial(), out, d.seconds());
    }
    log_line(m.quiet, std::string("run: diverged at t=") + fmt(d.seconds()) + " s");
    return kExitDivergence;
  }
}

int cmd_diversity(const RunManifest& m) {
  const Context ctx = load_context(m);
  if (!ctx.root.contains("diversity"))
    throw contract_error("config: missing 'diversity' section");
  const json& dj = ctx.root.at("diversity");

  std::vector<harness::NamedPathSet> sets;
  for (const json& sj : require<json>(dj, "sets", "diversity")) {
    harness::NamedPathSet set;
    set.name = require<std::string>(sj, "name", "diversity set");
    if (sj.contains("members")) {
      for (const std::size_t idx : sj.at("members").get<std::vector<std::size_t>>()) {
        if (idx >= ctx.pool.size())
          throw contract_error("diversity set '" + set.name + "': pool index " +
                               std::to_string(idx) + " out of range");
        set.pairs.push_back(ctx.pool[idx]);
      }
    } else if (sj.contains("cluster")) {
      const json& cj = sj.at("cluster");
      const paths::PathPair center = resolve_pair(require<json>(cj, "center", "cluster"), ctx);
      set.pairs = harness::make_cluster(
          center, require<std::size_t>(cj, "count", "cluster"),
          resolve_perturb(require<json>(cj, "primary", "cluster"), "cluster.primary"),
          resolve_perturb(require<json>(cj, "secondary", "cluster"), "cluster.secondary"),
          get_or<std::uint64_t>(cj, "seed", ctx.seed), set.name);
      for (auto& pair : set.pairs) {
        pair.primary.sample_rate = ctx.sample_rate;
        pair.secondary.sample_rate = ctx.sample_rate;
      }
    } else if (sj.contains("pairs")) {
      for (const json& pj : sj.at("pairs")) set.pairs.push_back(resolve_pair(pj, ctx));
    } else {
      throw contract_error("diversity set '" + set.name +
                           "': expected members/cluster/pairs");
    }
    sets.push_back(std::move(set));
  }

  std::vector<paths::PathPair> heldout;
  const json& hj = require<json>(dj, "heldout", "diversity");
  if (hj.is_array()) {
    for (const json& e : hj) {
      if (e.is_number_unsigned()) {
        const std::size_t idx = e.get<std::size_t>();
        if (idx >= ctx.pool.size())
          throw contract_error("diversity heldout: pool index out of range");
        heldout.push_back(ctx.pool[idx]);
      } else {
        heldout.push_back(resolve_pair(e, ctx));
      }
    }
  } else {
    throw contract_error("diversity.heldout must be an array");
  }

  harness::ScenarioConfig tmpl;
  tmpl.sample_rate = ctx.sample_rate;
  tmpl.band_lo = ctx.band_lo;
  tmpl.band_hi = ctx.band_hi;
  tmpl.ospm = ctx.ospm;
  tmpl.seed = ctx.seed;
  tmpl.phases = {harness::Phase{heldout.front(),
                                get_or<double>(dj, "eval_duration_sec", 5.0)}};

  const auto rows = harness::diversity_study(sets, heldout, ctx.meta_cfg, tmpl);

  std::filesystem::create_directories(m.out_dir);
  const auto table_file = m.out_dir / get_or<std::string>(dj, "table", "diversity.csv");
  auto out = open_out(table_file);
  harness::write_diversity_csv(rows, out);
  log_line(m.quiet, "diversity: " + std::to_string(rows.size()) + " set(s) -> " +
                        table_file.string());
  return kExitOk;
}

int cmd_paths_synth(const PathsSynthArgs& a) {
  std::filesystem::create_directories(a.out_dir);
  for (std::size_t i = 0; i < a.count; ++i) {
    const paths::AcousticPath p =
        paths::synth_path(dsp::mix_seed(a.seed, i), a.taps, a.decay, a.delay);
    const auto file = a.out_dir / (a.prefix + "_" + std::to_string(i) + ".txt");
    paths::save_ir(p, file);
    log_line(a.quiet, "paths synth: " + file.string());
  }
  return kExitOk;
}

int cmd_paths_inspect(const PathsInspectArgs& a) {
  const paths::AcousticPath p = paths::load_ir(a.file);
  const paths::FrequencyGrid grid = paths::log_grid(a.f_min, a.f_max, a.points);
  const std::vector<double> mags = paths::magnitude_db(p, grid);
  std::printf("taps,%zu\n", p.ir.size());
  std::printf("l2_norm,%s\n", fmt(p.ir.norm2()).c_str());
  std::printf("f_hz,mag_db\n");
  for (std::size_t i = 0; i < grid.size(); ++i)
    std::printf("%s,%s\n", fmt(grid.freqs[i]).c_str(), fmt(mags[i]).c_str());
  return kExitOk;
}

int exit_code_for_current_exception() {
  try {
    throw;
  } catch (const harness::scenario_divergence& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDivergence;
  } catch (const divergence_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDivergence;
  } catch (const io_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const parse_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const contract_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
}

}  // namespace anc::cli

#include "anc/meta.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "anc/errors.hpp"

namespace anc::meta {

namespace {

void guard_finite(double v, const char* where, std::uint64_t index, double limit) {
  if (!std::isfinite(v) || std::abs(v) > limit)
    throw divergence_error(std::string(where) + ": error diverged", index);
}

dsp::SignalBuffer slice(const dsp::SignalBuffer& src, std::size_t begin,
                        std::size_t end) {
  dsp::SignalBuffer out;
  out.sample_rate = src.sample_rate;
  out.samples.assign(src.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                     src.samples.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

void MetaConfig::validate() const {
  if (L_w < 1 || L_s < 1) throw contract_error("MetaConfig: filter lengths must be >= 1");
  if (T_A < 1 || T_B < 1) throw contract_error("MetaConfig: T_A and T_B must be >= 1");
  if (N_s < 1 || N_w < 1) throw contract_error("MetaConfig: N_s and N_w must be >= 1");
  if (!(lambda_s > 0.0 && lambda_s <= 1.0 && lambda_w > 0.0 && lambda_w <= 1.0))
    throw contract_error("MetaConfig: forgetting factors must be in (0,1]");
  if (!(mu_s > 0.0 && mu_w > 0.0))
    throw contract_error("MetaConfig: inner step sizes must be > 0");
  if (!(alpha_s > 0.0 && alpha_w > 0.0))
    throw contract_error("MetaConfig: meta rates must be > 0");
  const std::size_t val_needed = std::max(N_s, N_w) + L_w + 2 * L_s;
  if (segment_len < train_len() + val_needed)
    throw contract_error("MetaConfig: segment_len too short; need at least " +
                         std::to_string(train_len() + val_needed));
}

std::uint64_t MetaConfig::digest() const {
  char buf[512];
  const int n = std::snprintf(
      buf, sizeof(buf),
      "Lw=%zu Ls=%zu TA=%zu TB=%zu Ns=%zu Nw=%zu ls=%.17g lw=%.17g mus=%.17g "
      "muw=%.17g as=%.17g aw=%.17g K=%zu seg=%zu seed=%llu exc=%d",
      L_w, L_s, T_A, T_B, N_s, N_w, lambda_s, lambda_w, mu_s, mu_w, alpha_s,
      alpha_w, K, segment_len, static_cast<unsigned long long>(seed),
      static_cast<int>(phase_a_excitation));
  return fnv1a(0xCBF29CE484222325ULL, buf, static_cast<std::size_t>(n));
}

TaskDraw draw_task(const paths::PathPair& pair, const SignalGenSpec& gen,
                   const MetaConfig& cfg, std::uint64_t draw_seed) {
  cfg.validate();
  const std::size_t n = cfg.segment_len;

  dsp::SignalBuffer x =
      dsp::band_limit(dsp::white_noise(dsp::mix_seed(draw_seed, 0), n, gen.sample_rate),
                      gen.band_lo, gen.band_hi);
  const double r = dsp::rms(x.samples);
  if (r > 0.0)
    for (double& v : x.samples) v /= r;

  dsp::SignalBuffer d;
  d.sample_rate = gen.sample_rate;
  d.samples = dsp::fir_filter_all(pair.primary.ir, x.samples);

  const dsp::SignalBuffer aux =
      dsp::white_noise(dsp::mix_seed(draw_seed, 1), n, gen.sample_rate);

  const std::size_t split = cfg.train_len();
  const std::size_t warmup = cfg.L_w + cfg.L_s + pair.primary.ir.size();
  if (n < split + std::max(cfg.N_s, cfg.N_w) + warmup)
    throw contract_error("draw_task: segment_len too short for this primary path");

  TaskDraw task;
  task.pair = pair;
  task.secondary_fit = paths::fit_taps(pair.secondary.ir, cfg.L_s, "draw_task");
  task.train = {slice(x, 0, split), slice(d, 0, split), slice(aux, 0, split)};
  task.val = {slice(x, split, n), slice(d, split, n), slice(aux, split, n)};
  return task;
}

dsp::FirFilter phase_a(const dsp::FirFilter& psi_start, const dsp::FirFilter& s_true,
                       const dsp::SignalBuffer& excitation, const MetaConfig& cfg) {
  if (psi_start.size() != cfg.L_s || s_true.size() != cfg.L_s)
    throw contract_error("phase_a: filter lengths must equal L_s");
  if (excitation.size() < cfg.T_A + cfg.L_s)
    throw contract_error("phase_a: excitation must hold T_A + L_s samples");

  dsp::FirFilter s_hat = psi_start;
  dsp::DelayLine u_line(cfg.L_s);
  for (std::size_t t = 0; t < cfg.T_A; ++t) {
    const auto u = dsp::push_and_window(u_line, excitation.samples[t], cfg.L_s);
    const double y_id = dsp::fir_apply(s_true, u);
    const double e_s = y_id - dsp::fir_apply(s_hat, u);
    guard_finite(e_s, "phase_a", t, cfg.divergence_limit);
    for (std::size_t i = 0; i < cfg.L_s; ++i) s_hat[i] += cfg.mu_s * e_s * u[i];
  }
  return s_hat;
}

dsp::FirFilter phase_b(const dsp::FirFilter& phi_start, const dsp::FirFilter& s_hat,
                       const dsp::SignalBuffer& x, const dsp::SignalBuffer& d,
                       const MetaConfig& cfg) {
  if (phi_start.size() != cfg.L_w) throw contract_error("phase_b: phi must have L_w taps");
  if (s_hat.size() != cfg.L_s) throw contract_error("phase_b: s_hat must have L_s taps");
  if (x.size() < cfg.T_B + cfg.L_w + cfg.L_s || d.size() < x.size())
    throw contract_error("phase_b: x and d must hold T_B + L_w + L_s samples");

  dsp::FirFilter w = phi_start;
  dsp::DelayLine xs_line(cfg.L_s);
  dsp::DelayLine xf_line(cfg.L_w);
  for (std::size_t t = 0; t < cfg.T_B; ++t) {
    const double xf =
        dsp::fir_apply(s_hat, dsp::push_and_window(xs_line, x.samples[t], cfg.L_s));
    const auto xp = dsp::push_and_window(xf_line, xf, cfg.L_w);
    const double e = d.samples[t] - dsp::fir_apply(w, xp);
    guard_finite(e, "phase_b", t, cfg.divergence_limit);
    for (std::size_t i = 0; i < cfg.L_w; ++i) w[i] += cfg.mu_w * e * xp[i];
  }
  return w;
}

MetaGradients meta_gradients(const dsp::FirFilter& w, const dsp::FirFilter& s_hat,
                             const TaskDraw& task, const MetaConfig& cfg) {
  if (w.size() != cfg.L_w || s_hat.size() != cfg.L_s)
    throw contract_error("meta_gradients: filter lengths do not match the config");
  const Segment& val = task.val;
  const std::size_t n_val = val.x.size();
  if (val.d.size() != n_val || val.aux.size() != n_val)
    throw contract_error("meta_gradients: validation streams must share a length");
  if (n_val < std::max(cfg.N_s, cfg.N_w))
    throw contract_error("meta_gradients: validation segment shorter than N_s/N_w");

  // Tail records, chronological. Windows are copied because the spans move.
  std::vector<double> es_tail(cfg.N_s), e_tail(cfg.N_w);
  std::vector<std::vector<double>> u_tail(cfg.N_s), xp_tail(cfg.N_w);

  dsp::DelayLine u_line(cfg.L_s);
  dsp::DelayLine xs_line(cfg.L_s);
  dsp::DelayLine xf_line(cfg.L_w);
  const std::size_t s_from = n_val - cfg.N_s;
  const std::size_t w_from = n_val - cfg.N_w;

  for (std::size_t k = 0; k < n_val; ++k) {
    const auto u = dsp::push_and_window(u_line, val.aux.samples[k], cfg.L_s);
    const double e_s =
        dsp::fir_apply(task.secondary_fit, u) - dsp::fir_apply(s_hat, u);

    const double xf =
        dsp::fir_apply(s_hat, dsp::push_and_window(xs_line, val.x.samples[k], cfg.L_s));
    const auto xp = dsp::push_and_window(xf_line, xf, cfg.L_w);
    const double e = val.d.samples[k] - dsp::fir_apply(w, xp);

    if (k >= s_from) {
      es_tail[k - s_from] = e_s;
      u_tail[k - s_from].assign(u.begin(), u.end());
    }
    if (k >= w_from) {
      e_tail[k - w_from] = e;
      xp_tail[k - w_from].assign(xp.begin(), xp.end());
    }
  }

  MetaGradients out;
  out.delta_psi = dsp::FirFilter(cfg.L_s);
  out.delta_phi = dsp::FirFilter(cfg.L_w);

  double lam = 1.0;
  for (std::size_t t = 0; t < cfg.N_s; ++t) {  // t steps back from the segment end
    const std::size_t idx = cfg.N_s - 1 - t;
    const double scale = lam * es_tail[idx];
    for (std::size_t i = 0; i < cfg.L_s; ++i)
      out.delta_psi[i] += scale * u_tail[idx][i];
    out.val_mse_s += es_tail[idx] * es_tail[idx];
    lam *= cfg.lambda_s;
  }
  lam = 1.0;
  for (std::size_t t = 0; t < cfg.N_w; ++t) {
    const std::size_t idx = cfg.N_w - 1 - t;
    const double scale = lam * e_tail[idx];
    for (std::size_t i = 0; i < cfg.L_w; ++i)
      out.delta_phi[i] += scale * xp_tail[idx][i];
    out.val_mse_w += e_tail[idx] * e_tail[idx];
    lam *= cfg.lambda_w;
  }
  out.val_mse_s /= static_cast<double>(cfg.N_s);
  out.val_mse_w /= static_cast<double>(cfg.N_w);
  return out;
}

MetaInit meta_train(std::span<const paths::PathPair> tasks, const MetaConfig& cfg,
                    const SignalGenSpec& gen, std::vector<EpochLog>* log) {
  if (tasks.empty()) throw contract_error("meta_train: task set is empty");
  cfg.validate();

  MetaInit init;
  init.phi = dsp::FirFilter(cfg.L_w);
  init.psi = dsp::FirFilter(cfg.L_s);
  init.sample_rate = gen.sample_rate;
  init.config_digest = cfg.digest();
  init.epochs = cfg.K;

  for (std::size_t epoch = 0; epoch < cfg.K; ++epoch) {
    const std::uint64_t epoch_seed = dsp::mix_seed(cfg.seed, epoch);
    dsp::NoiseGen picker(epoch_seed);
    const std::size_t ti = picker.next_index(tasks.size());
    const TaskDraw task = draw_task(tasks[ti], gen, cfg, dsp::mix_seed(epoch_seed, 1));

    try {
      const std::size_t a_len = cfg.T_A + cfg.L_s;
      const dsp::SignalBuffer exc =
          (cfg.phase_a_excitation == PhaseAExcitation::aux)
              ? slice(task.train.aux, 0, a_len)
              : slice(task.train.x, 0, a_len);
      const dsp::FirFilter s_hat = phase_a(init.psi, task.secondary_fit, exc, cfg);

      const dsp::SignalBuffer xb = slice(task.train.x, a_len, task.train.x.size());
      const dsp::SignalBuffer db = slice(task.train.d, a_len, task.train.d.size());
      const dsp::FirFilter w = phase_b(init.phi, s_hat, xb, db, cfg);

      const MetaGradients g = meta_gradients(w, s_hat, task, cfg);
      for (std::size_t i = 0; i < cfg.L_w; ++i)
        init.phi[i] += cfg.alpha_w * g.delta_phi[i];
      for (std::size_t i = 0; i < cfg.L_s; ++i)
        init.psi[i] += cfg.alpha_s * g.delta_psi[i];
      if (log) log->push_back({epoch, g.val_mse_w, g.val_mse_s});
    } catch (const divergence_error&) {
      throw divergence_error("meta_train: inner loop diverged", epoch);
    }

    for (double v : init.phi.c)
      guard_finite(v, "meta_train(phi)", epoch, cfg.divergence_limit);
    for (double v : init.psi.c)
      guard_finite(v, "meta_train(psi)", epoch, cfg.divergence_limit);
  }
  return init;
}

void save_meta_init(const MetaInit& init, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw io_error("cannot write meta-init file: " + file.string());
  char buf[64];
  out << "anc-meta-init v1\n";
  out << "l_w " << init.phi.size() << "\n";
  out << "l_s " << init.psi.size() << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", init.sample_rate);
  out << "sample_rate " << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(init.config_digest));
  out << "config_digest " << buf << "\n";
  out << "epochs " << init.epochs << "\n";
  out << "phi\n";
  for (double v : init.phi.c) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", v);
    out << buf;
  }
  out << "psi\n";
  for (double v : init.psi.c) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", v);
    out << buf;
  }
  if (!out) throw io_error("write failed: " + file.string());
}

MetaInit load_meta_init(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw io_error("cannot open meta-init file: " + file.string());
  std::string line;
  auto next_line = [&]() -> std::string {
    if (!std::getline(in, line))
      throw parse_error(file.string() + ": truncated meta-init file");
    return line;
  };

  if (next_line() != "anc-meta-init v1")
    throw parse_error(file.string() + ": bad header");

  auto field = [&](const char* key) -> std::string {
    const std::string l = next_line();
    const std::string prefix = std::string(key) + " ";
    if (l.rfind(prefix, 0) != 0)
      throw parse_error(file.string() + ": expected '" + key + "' field");
    return l.substr(prefix.size());
  };
  auto parse_u64 = [&](const std::string& s, const char* key, int base) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, base);
    if (end == s.c_str() || *end != '\0')
      throw parse_error(file.string() + ": bad '" + key + "' field");
    return v;
  };

  MetaInit init;
  const auto l_w = static_cast<std::size_t>(parse_u64(field("l_w"), "l_w", 10));
  const auto l_s = static_cast<std::size_t>(parse_u64(field("l_s"), "l_s", 10));
  init.sample_rate = std::strtod(field("sample_rate").c_str(), nullptr);
  init.config_digest = parse_u64(field("config_digest"), "config_digest", 16);
  init.epochs = parse_u64(field("epochs"), "epochs", 10);

  auto read_block = [&](const char* name, std::size_t count) {
    if (next_line() != name)
      throw parse_error(file.string() + ": expected '" + name + "' block");
    dsp::FirFilter f(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::string l = next_line();
      char* end = nullptr;
      f[i] = std::strtod(l.c_str(), &end);
      if (end == l.c_str() || *end != '\0')
        throw parse_error(file.string() + ": bad coefficient in " + name);
      if (!std::isfinite(f[i]))
        throw nonfinite_error(file.string() + ": non-finite coefficient in " + name);
    }
    return f;
  };

  init.phi = read_block("phi", l_w);
  init.psi = read_block("psi", l_s);
  return init;
}

}  // namespace anc::meta

#include "anc/adaptive.hpp"

#include <algorithm>
#include <cmath>

#include "anc/errors.hpp"

namespace anc::adaptive {

void OspmConfig::validate() const {
  if (L_w < 1 || L_s < 1) throw contract_error("OspmConfig: filter lengths must be >= 1");
  if (!(mu_w > 0.0 && mu_s > 0.0 && mu_h > 0.0))
    throw contract_error("OspmConfig: step sizes must be > 0");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw contract_error("OspmConfig: alpha must be in (0,1)");
  if (!(c_aux >= 0.0)) throw contract_error("OspmConfig: c_aux must be >= 0");
  if (!(eps > 0.0)) throw contract_error("OspmConfig: eps must be > 0");
  if (detector_M < 1) throw contract_error("OspmConfig: detector_M must be >= 1");
  if (!(detector_gamma >= 0.0))
    throw contract_error("OspmConfig: detector_gamma must be >= 0");
  if (!(divergence_limit > 0.0))
    throw contract_error("OspmConfig: divergence_limit must be > 0");
}

NormHistory::NormHistory(std::size_t capacity) : buf_(capacity, 0.0) {
  if (capacity == 0) throw contract_error("NormHistory: capacity must be >= 1");
}

void NormHistory::push(double v) {
  buf_[head_] = v;
  head_ = (head_ + 1) % buf_.size();
  count_ = std::min(count_ + 1, buf_.size());
}

void NormHistory::clear() {
  head_ = 0;
  count_ = 0;
}

double NormHistory::newest() const { return at_back(0); }

double NormHistory::at_back(std::size_t back) const {
  if (back >= count_) throw contract_error("NormHistory: not enough entries");
  const std::size_t idx = (head_ + buf_.size() - 1 - back) % buf_.size();
  return buf_[idx];
}

OspmState::OspmState(const OspmConfig& config)
    : cfg(config),
      w(config.L_w),
      s_hat(config.L_s),
      h(config.L_s),
      x_line(std::max(config.L_w, config.delay_h + config.L_s)),
      u_line(config.L_s),
      uw_line(config.L_s),
      xf_line(config.L_w),
      h_hist(config.detector_M + 1) {
  cfg.validate();
  p_x.alpha = cfg.alpha;
  p_e.alpha = cfg.alpha;
}

double aux_scale(double p_x, double p_e, double v, const OspmConfig& cfg) {
  if (!(p_x >= 0.0 && p_e >= 0.0))
    throw contract_error("aux_scale: powers must be >= 0");
  return cfg.c_aux * v * std::sqrt(std::min(p_x, p_e) + cfg.eps);
}

StepOutput ospm_step(OspmState& st, double x, double d, double v,
                     const dsp::FirFilter& s_true) {
  const OspmConfig& c = st.cfg;
  if (s_true.size() != c.L_s)
    throw contract_error("ospm_step: true secondary path must have L_s taps");

  // Reference power and control output.
  st.p_x = dsp::ema_update(st.p_x, x);
  st.x_line.push(x);
  const double u = dsp::fir_apply(st.w, st.x_line.window(c.L_w));
  st.uw_line.push(u);

  // Scheduled auxiliary injection; P_e' still holds the previous sample.
  const double v_m = aux_scale(st.p_x.value, st.p_e.value, v, c);
  st.u_line.push(v_m);
  st.aux_energy += v_m * v_m;

  // Plant: control output and probe pass through the true path; the
  // anti-noise contribution subtracts at the mic so the update recursions
  // below descend the residual power.
  const auto uw = st.uw_line.window(c.L_s);
  const auto uv = st.u_line.window(c.L_s);
  const double e = d - dsp::fir_apply(s_true, uw) + dsp::fir_apply(s_true, uv);
  if (!std::isfinite(e) || std::abs(e) > c.divergence_limit)
    throw divergence_error("ospm_step: residual diverged", st.sample_index);

  // Remove the modeled auxiliary component.
  const double e_p = e - dsp::fir_apply(st.s_hat, uv);
  st.p_e = dsp::ema_update(st.p_e, e_p);

  // Shared innovation drives the estimator and the canceller.
  const auto xh = st.x_line.window_at(c.delay_h, c.L_s);
  const double r = e_p - dsp::fir_apply(st.h, xh);
  for (std::size_t i = 0; i < c.L_s; ++i) {
    st.s_hat[i] += c.mu_s * uv[i] * r;
    st.h[i] += c.mu_h * xh[i] * r;
  }

  // FxLMS with the freshly updated model.
  const double xf = dsp::fir_apply(st.s_hat, st.x_line.window(c.L_s));
  st.xf_line.push(xf);
  const auto xfw = st.xf_line.window(c.L_w);
  for (std::size_t i = 0; i < c.L_w; ++i) st.w[i] += c.mu_w * xfw[i] * e_p;

  // Jump detector on ||h||.
  st.h_hist.push(st.h.norm2());
  bool fired = false;
  if (st.holdoff > 0) {
    --st.holdoff;
  } else if (st.detector_enabled && st.h_hist.count() >= c.detector_M + 1 &&
             st.h_hist.newest() - st.h_hist.at_back(c.detector_M) > c.detector_gamma) {
    if (st.reset_init) {
      reset_to(st, *st.reset_init);
    } else {
      meta::MetaInit zeros;
      zeros.phi = dsp::FirFilter(c.L_w);
      zeros.psi = dsp::FirFilter(c.L_s);
      reset_to(st, zeros);
    }
    fired = true;
  }

  ++st.sample_index;
  return {e, e_p, v_m, u, fired};
}

bool detect_jump(std::span<const double> history, std::size_t M, double gamma) {
  if (history.size() < M + 1) return false;
  return history.back() - history[history.size() - 1 - M] > gamma;
}

void reset_to(OspmState& st, const meta::MetaInit& init) {
  if (init.phi.size() != st.cfg.L_w || init.psi.size() != st.cfg.L_s)
    throw contract_error("reset_to: init dimensions do not match the config");
  st.w = init.phi;
  st.s_hat = init.psi;
  st.h.zero();
  st.h_hist.clear();
  st.holdoff = st.cfg.detector_holdoff;
}

}  // namespace anc::adaptive

#pragma once

#include <cstdint>

#include "anc/dsp.hpp"

namespace anc::meta {

// Learned co-initialization: phi seeds the control filter, psi the
// secondary-path model. Produced by meta_train, consumed at runtime resets.
struct MetaInit {
  dsp::FirFilter phi;  // length L_w
  dsp::FirFilter psi;  // length L_s
  double sample_rate = dsp::kDefaultSampleRate;
  std::uint64_t config_digest = 0;
  std::uint64_t epochs = 0;
};

}  // namespace anc::meta

#pragma once

#include "csq/core.hpp"

namespace csq::optics {

using core::cplx;
using core::KetSuperposition;

// t = cos(mix_angle) transmitted, r = sin(mix_angle) reflected; t^2 + r^2 = 1.
struct BeamSplitterSpec {
  int mode_a = 0;
  int mode_b = 1;
  double mix_angle = 0.0;
};

// mix_angle = asin(r) for an amplitude reflectivity r in [0,1].
BeamSplitterSpec bs_from_reflectivity(int mode_a, int mode_b, double r);

enum class Placement { Input, Output };

struct LossSpec {
  int mode = 0;
  double eta = 1.0;
  Placement placement = Placement::Input;
};

// Registry entry for an environment mode created by loss_channel.
struct EnvRecord {
  int env_mode;  // index of the appended environment mode
  int lossy_mode;
  double eta;
};

// Per term: (a, b) at (mode_a, mode_b) -> (t*a - r*b, r*a + t*b).
// Coefficients untouched; exact on coherent labels, so norm is preserved.
KetSuperposition beam_splitter(const KetSuperposition& s, const BeamSplitterSpec& spec);

// Amplitude at mode times e^{i theta}. theta == pi multiplies by exactly -1,
// so a double application is the identity bit for bit.
KetSuperposition phase_modulator(const KetSuperposition& s, int mode, double theta);

// Taps the mode into a fresh trailing environment mode:
// a -> sqrt(eta)*a on the mode, sqrt(1-eta)*a on the environment.
KetSuperposition loss_channel(const KetSuperposition& s, const LossSpec& spec);

// Appends one trailing mode with the given amplitude on every term.
KetSuperposition add_mode(const KetSuperposition& s, cplx init);

// Single-mode helpers.
KetSuperposition coherent_state(cplx a);
// sign=+1: N(|-alpha> + |alpha>), sign=-1: N(|-alpha> - |alpha>), normalized.
KetSuperposition cat_state(double alpha, int sign);

// Kronecker product; b's modes are appended after a's.
KetSuperposition tensor(const KetSuperposition& a, const KetSuperposition& b);

} // namespace csq::optics

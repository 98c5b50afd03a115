#pragma once

#include <cstddef>
#include <vector>

#include "csq/core.hpp"

namespace csq::fock {

using core::cplx;

// Kernel schedule. Serial and Parallel produce bitwise-identical amplitudes;
// Serial is the reference path kept for testing and benchmarking.
enum class ExecPolicy { Serial, Parallel };

// Dense state over the truncated number basis {0..cutoff}^mode_count,
// row-major with mode 0 slowest. Deliberately shares no transformation
// code with the label-based engine.
struct FockState {
  int mode_count = 0;
  int cutoff = 0;  // highest photon number kept per mode
  std::vector<cplx> amps;

  std::size_t dim() const;
  std::size_t stride(int mode) const;
};

FockState vacuum_fock(int mode_count, int cutoff);

// e^{-|a|^2/2} a^n / sqrt(n!) for n = 0..cutoff.
std::vector<cplx> coherent_column(cplx a, int cutoff);
FockState coherent_fock(cplx a, int cutoff);
FockState product_coherent(const core::CoherentLabel& labels, int cutoff);

// Sum of per-term coherent products: the bridge from engine states into the
// truncated basis. Preparation only; evolution code paths stay separate.
FockState embed_superposition(const core::KetSuperposition& s, int cutoff);

// P(N > cutoff) for N ~ Poisson(mean): the truncation-mass bound.
double poisson_tail(double mean, int cutoff);

// Largest per-term per-mode |amplitude|^2, the mean photon number that
// drives the truncation tail.
double max_mean_photon(const core::KetSuperposition& s);

cplx inner_fock(const FockState& a, const FockState& b);
double norm_squared_fock(const FockState& s);

// exp[mix_angle (a_a b^dag - a_a^dag b)] applied blockwise: within each
// (mode_a, mode_b) plane the coupler preserves total photon number, so the
// exponential is taken exactly on every kept total-n block and the result
// is unitary on the truncated space.
FockState bs_unitary_fock(const FockState& s, int mode_a, int mode_b,
                          double mix_angle,
                          ExecPolicy policy = ExecPolicy::Parallel);

// Occupation-number phase e^{i n theta}; theta == pi uses exact (-1)^n.
FockState phase_fock(const FockState& s, int mode, double theta);

FockState add_vacuum_mode_fock(const FockState& s);

// Transmissivity-eta tap into a fresh trailing environment mode.
FockState loss_fock(const FockState& s, int mode, double eta,
                    ExecPolicy policy = ExecPolicy::Parallel);

// Probability of zero photons at the mode (unnormalized sum of |amp|^2).
double p_vacuum_fock(const FockState& s, int mode);

// |1 - |<analytic-as-Fock|oracle>||. Throws when the oracle cutoff cannot
// hold the analytic state: the Poisson tail at max_mean_photon(analytic)
// must stay below 1e-10.
double cross_validate(const core::KetSuperposition& analytic,
                      const FockState& oracle);

// Probability mass of the x > 0 half line for a single-mode state, from the
// position wavefunction built by the normalized-Hermite recursion and
// integrated by Simpson quadrature. Normalized by the state's own norm.
double homodyne_plus_probability_fock(const FockState& s);

struct AgreementResult {
  double max_overlap_deficit = 0.0;
  double max_prob_gap = 0.0;
  int circuits_run = 0;
};

// Random small circuits (2-3 modes, up to 4 elements, input amplitudes
// bounded by 2) applied independently to the engine and to this oracle;
// compares final-state overlap and per-mode vacuum-detection probabilities.
// Propagates the cross_validate cutoff error.
AgreementResult agreement_suite(int n_circuits, int cutoff, unsigned seed);

}  // namespace csq::fock

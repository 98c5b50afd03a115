#pragma once

#include <array>
#include <string>
#include <vector>

#include "csq/core.hpp"
#include "csq/optics.hpp"

namespace csq::experiments {

// Three-rail state N(|-a,-a,-a> + |a,a,a>) from one even cat at sqrt(3)*a
// split over two beam splitters (reflectivities 1/sqrt3 then 1/sqrt2).
core::KetSuperposition ghz_generator(double alpha);

// Normalized four-term resource: the equal-weight superposition of the
// odd-parity sign patterns over three rails at +-alpha.
core::KetSuperposition xor_resource(double alpha);

// Heralded generator of xor_resource: four even cats on a balanced four-port
// network, one readout port mixed with a local oscillator. Exactly one of the
// two readout detectors fires on success; the sign it reports decides the
// feed-forward correction.
struct TripartiteResult {
  core::KetSuperposition plus_branch;              // 3 rails, needs no fix
  core::KetSuperposition minus_branch_uncorrected; // 3 rails, needs X on rail 3
  core::DyadMixture corrected;  // post-feed-forward mixture of both branches
  double p_plus = 0.0;          // joint herald probabilities
  double p_minus = 0.0;
  double p_success = 0.0;       // p_plus + p_minus
};
TripartiteResult tripartite_generator(double alpha);

// Bits encode amplitudes: 0 -> -alpha, 1 -> +alpha.
// Five modes: resource rails at 0/2/4, K input at 1, R input at 3.
core::KetSuperposition xor_premeasurement(int K, int R, double alpha);

struct XorBranch {
  int A = 0;  // 1 iff light present at mode 0
  int B = 0;  // 1 iff light present at mode 2
  int C = 0;  // 1 iff the mode-4 sign readout is plus
  double probability = 0.0;
};

struct XorRunResult {
  int K = 0;
  int R = 0;
  int xor_value = 0;  // K ^ R
  std::vector<XorBranch> branches;
  bool consistent = false;  // A^B^C == K^R held on every branch
};

// Runs the non-local XOR on an ideal resource; deterministic given the
// resource, so branch probabilities sum to 1.
XorRunResult optical_xor_protocol(int K, int R, double alpha);

// Branch JSON in the circuit-run schema plus top-level K, R, xor fields.
std::string xor_json(const XorRunResult& r);

// P(A,B,C) indexed A*4 + B*2 + C.
std::array<double, 8> xor_outcome_distribution(const XorRunResult& r);

// The two-qubit entangler of the reference protocol, columns indexed by
// |resource, data> in order 00,01,10,11. Unitary.
std::array<std::array<double, 4>, 4> xor_gate_matrix();

// Dense 5-qubit reference: data qubits D,E loaded with K,R, a four-term
// entangled triple on A,B,C, the gate applied to (A,D) and (B,E), then all
// qubits read out. The bit a party announces is the parity of its measured
// pair (the data outcome alone is a fair coin); returns the distribution of
// (announced D-side bit, announced E-side bit, C) indexed D*4 + E*2 + C.
std::array<double, 8> qubit_reference_protocol(int K, int R);

// exp[-4 alpha^2 (1 - eta)]: weight of the ideal component surviving
// transmissivity eta on every rail.
double delta(double alpha, double eta);

// Generator run with a loss tap of transmissivity eta on each of the four
// cat rails (placement Input) or on each network output (placement Output).
// Success keeps the readout-port classes +-sqrt(eta)*alpha coherently, so
// the reduced state retains the cross-class blocks a collapsing detector
// would erase.
struct LossAnalysisResult {
  double alpha = 0.0;
  double eta = 0.0;
  optics::Placement placement = optics::Placement::Input;
  double p_herald = 0.0;  // weight of the two success classes
  double w_ideal = 0.0;   // exact ideal-component weight in rho_o (off/diag ratio)
  double delta_value = 0.0;
  double p_success = 0.0;    // p_herald * w_ideal
  double fidelity_corrected = 0.0;  // vs resource at sqrt(eta)*alpha
  double fidelity_original = 0.0;   // vs resource at alpha, for reference
  core::KetSuperposition psi1L;  // normalized plus-class state: 4 ports + 4 envs
  core::KetSuperposition psi2L;  // minus-class state
  core::DyadMixture rho_o;       // readout port + 3 rails, envs traced, trace 1
  core::DyadMixture rho_corrected;  // 3 rails after feed-forward, trace 1
};
LossAnalysisResult lossy_generator(double alpha, double eta,
                                   optics::Placement placement);

// Smallest eta with p_success >= 0.25, by bisection on the measured curve.
double threshold_eta(double alpha);

// Fit of rho_o against the ideal-plus-dephased model
//   w * |Psi_ideal><Psi_ideal| + (1 - w) * (rho_1 + rho_2)/2,
// rho_1/rho_2 the normalized diagonal residues of the two herald classes.
// w_fitted minimizes the Frobenius distance; the trace-distance residual is
// compared against max(2 delta^2, 5 exp(-2 eta alpha^2)).
struct DecompositionReport {
  double w_fitted = 0.0;
  double residual_trace_distance = 0.0;
  double bound = 0.0;
  bool within_bound = false;
};
DecompositionReport decompose_reduced_state(const LossAnalysisResult& r);

struct SweepRow {
  double alpha = 0.0;
  double eta = 0.0;
  double p_success = 0.0;
  double delta_over_2 = 0.0;
  double fidelity = 0.0;
};

// One lossy_generator run per grid point (input placement). Grid points are
// independent; rows are merged in grid order so the result is deterministic
// with or without parallel execution.
std::vector<SweepRow> success_sweep(double alpha, const std::vector<double>& eta_grid,
                                    bool parallel = true);

// Header alpha,eta,p_success,delta_over_2,fidelity; 10 significant digits.
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace csq::experiments

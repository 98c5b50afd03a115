#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace csq::core {

using cplx = std::complex<double>;

// One complex field amplitude per optical mode.
using CoherentLabel = std::vector<cplx>;

// Numeric policy. Gram matrices of <= 64 well-separated labels are
// comfortably conditioned in double precision; these are safety rails,
// not tuning knobs.
inline constexpr double kZeroNormTol = 1e-14;   // below this a state is unnormalizable
inline constexpr double kGramPivotTol = 1e-12;  // relative eigenvalue floor for embeddings
inline constexpr double kLabelMergeTol = 1e-10; // per-amplitude absolute label equality

struct KetTerm {
  cplx coeff;
  CoherentLabel amps;
};

// Weighted sum of coherent labels. Not automatically normalized.
struct KetSuperposition {
  int mode_count = 0;
  std::vector<KetTerm> terms;
};

struct DyadTerm {
  cplx coeff;
  CoherentLabel ket;
  CoherentLabel bra;
};

// Weighted sum of |ket><bra| coherent dyads. Hermitian mixtures carry both
// halves of each conjugate pair explicitly.
struct DyadMixture {
  int mode_count = 0;
  std::vector<DyadTerm> terms;
};

// <a|b> for single-mode coherent states: exp(-(|a|^2+|b|^2)/2 + conj(a)*b).
cplx overlap(cplx a, cplx b);

// Product of per-mode overlaps; labels must have equal length.
cplx multimode_overlap(const CoherentLabel& u, const CoherentLabel& v);

bool labels_equal(const CoherentLabel& u, const CoherentLabel& v,
                  double tol = kLabelMergeTol);

// Convenience constructors.
KetSuperposition make_ket(CoherentLabel amps, cplx coeff = 1.0);
KetSuperposition vacuum_state(int mode_count);

// <x|y> including all cross terms.
cplx inner(const KetSuperposition& x, const KetSuperposition& y);

// Gram norm^2; tiny negative round-off (>= -1e-12) clamps to 0.
double norm_squared(const KetSuperposition& s);

// Scales by a positive real factor so norm_squared == 1 within 1e-12.
// Throws on zero-norm input.
KetSuperposition normalize(const KetSuperposition& s);

KetSuperposition scaled(const KetSuperposition& s, cplx factor);

// Term-list concatenation (no merging); mode counts must match.
KetSuperposition sum(const KetSuperposition& a, const KetSuperposition& b);

// Merges terms whose labels agree within tol per amplitude, then drops
// terms with |coeff| <= tol * max|coeff|.
KetSuperposition compact(const KetSuperposition& s, double tol = kLabelMergeTol);
DyadMixture compact(const DyadMixture& m, double tol = kLabelMergeTol);

// |psi><psi|.
DyadMixture dyad(const KetSuperposition& psi);

DyadMixture mix_sum(const DyadMixture& a, const DyadMixture& b);
DyadMixture mix_scaled(const DyadMixture& m, cplx factor);

cplx trace_of(const DyadMixture& m);

// Traces out the listed modes: per term the coefficient picks up
// prod_m <bra_m|ket_m> and both labels lose those modes.
DyadMixture partial_trace(const DyadMixture& m, const std::vector<int>& traced);

// Keeps the listed modes in the listed order (also a permutation tool).
// Every dropped mode must carry one constant amplitude across all terms,
// so the discarded factor is a unit-norm product state.
KetSuperposition select_modes(const KetSuperposition& s, const std::vector<int>& keep);

// <psi|rho|psi> for normalized psi and unit-trace rho, clamped to [0,1].
double fidelity(const DyadMixture& rho, const KetSuperposition& psi);

struct EmbeddedOperator {
  Eigen::MatrixXcd mat;               // operator in the induced orthonormal basis
  std::vector<CoherentLabel> basis;   // distinct labels, row/column order
};

// Embeds the mixture via a Gram-matrix factorization G = A^dagger A.
// Eigenvalues of .mat are the physical spectrum. Throws if the Gram matrix
// is singular beyond kGramPivotTol (degenerate labels must be merged first).
EmbeddedOperator to_matrix(const DyadMixture& m);

// Hermitian spectrum, ascending.
std::vector<double> spectrum(const DyadMixture& m);

// (1/2) * sum |eig(r1 - r2)| over the joint label embedding.
double trace_distance(const DyadMixture& r1, const DyadMixture& r2);

// Greedy term-by-term match after compaction: labels within tol per
// amplitude and coefficients within tol. Used for exact-structure checks.
bool terms_match(const KetSuperposition& a, const KetSuperposition& b, double tol);
bool terms_match(const DyadMixture& a, const DyadMixture& b, double tol);

// { "modes": n, "terms": [ { "coeff": [re,im], "amps": [[re,im], ...] } ] }
std::string dump_json(const KetSuperposition& s);

} // namespace csq::core

#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>

#include "csq/core.hpp"

namespace csq::measure {

using core::KetSuperposition;

// One measurement outcome. post is normalized; a branch of probability 0
// carries an empty state and null_state = true.
struct BranchOutcome {
  std::string detector;  // filled by circuit execution, empty for raw calls
  std::string symbol;    // "vac" | "click" | "plus" | "minus"
  double probability = 0.0;
  KetSuperposition post;
  bool null_state = false;
  // For partition measurements: |1 - sum of raw branch weights| before the
  // pair was rescaled to total probability 1. Zero for projector measurements.
  double raw_deficit = 0.0;
};

// On/off photodetection with exact projector algebra. The vacuum branch
// applies |0><0| on the mode per term (a coherent label stays a coherent
// label); the click branch is the input minus the vacuum-projected part,
// at most doubling the term count. p_vac + p_click = 1 within 1e-10 with
// no rescaling.
std::pair<BranchOutcome, BranchOutcome> detect_onoff(const KetSuperposition& s,
                                                     int mode);

// Binary discrimination of the sign of Re(amplitude) at the mode. Terms are
// partitioned; cross-partition Gram terms (bounded by e^{-2a^2} for labels
// +-a) are dropped and the two weights rescaled to sum exactly 1. A term
// with |Re| <= ambiguity_tol is an error: the circuit must be restructured.
std::pair<BranchOutcome, BranchOutcome> homodyne_sign(const KetSuperposition& s,
                                                      int mode,
                                                      double ambiguity_tol = 1e-6);

// Binary light/no-light discrimination by term partition, the presence
// analogue of homodyne_sign: |amp| <= vac_tol goes to the vac branch,
// |amp| >= min_lit to the click branch, anything between is an error.
// Cross-partition Gram terms are dropped and the weights rescaled, same
// treatment (and same justification) as homodyne_sign. Use detect_onoff
// when exact projector statistics are wanted.
std::pair<BranchOutcome, BranchOutcome> discriminate_presence(
    const KetSuperposition& s, int mode, double vac_tol = 1e-6,
    double min_lit = 0.75);

struct FeedForwardAction {
  int mode;
  double theta;
};

// outcome symbol -> corrective phase modulation (nullopt = leave alone).
using FeedForwardRule = std::map<std::string, std::optional<FeedForwardAction>>;

// Applies the rule entry for the branch's outcome symbol; the rule must
// cover the symbol.
KetSuperposition feed_forward(const BranchOutcome& branch, const FeedForwardRule& rule);

} // namespace csq::measure

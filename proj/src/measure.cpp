#include "csq/measure.hpp"

#include <cmath>
#include <stdexcept>

#include "csq/optics.hpp"

namespace csq::measure {

namespace {

using core::cplx;

void check_measurable(const KetSuperposition& s, int mode, const char* who) {
  if (mode < 0 || mode >= s.mode_count)
    throw std::invalid_argument(std::string(who) + ": mode index out of range");
  if (std::abs(core::norm_squared(s) - 1.0) > 1e-9)
    throw std::invalid_argument(std::string(who) + ": state not normalized");
}

BranchOutcome make_branch(std::string symbol, double prob, const KetSuperposition& raw) {
  BranchOutcome b;
  b.symbol = std::move(symbol);
  b.probability = prob;
  if (prob <= core::kZeroNormTol) {
    b.probability = 0.0;
    b.null_state = true;
    b.post.mode_count = raw.mode_count;
  } else {
    b.post = core::normalize(raw);
  }
  return b;
}

// Partition measurement: classify() returns +1/-1 for the first/second
// branch. Weights are rescaled so the pair sums to exactly 1.
std::pair<BranchOutcome, BranchOutcome> partition_measurement(
    const KetSuperposition& s, int mode, const char* sym_a, const char* sym_b,
    int (*classify)(cplx, double, double), double p1, double p2, const char* who) {
  KetSuperposition part_a, part_b;
  part_a.mode_count = part_b.mode_count = s.mode_count;
  for (size_t i = 0; i < s.terms.size(); ++i) {
    int cls = classify(s.terms[i].amps[mode], p1, p2);
    if (cls == 0)
      throw std::runtime_error(
          std::string(who) + ": unclassifiable term " + std::to_string(i) +
          " with amplitude (" + std::to_string(s.terms[i].amps[mode].real()) + "," +
          std::to_string(s.terms[i].amps[mode].imag()) + ") at mode " +
          std::to_string(mode) + "; restructure the circuit");
    (cls > 0 ? part_a : part_b).terms.push_back(s.terms[i]);
  }
  double wa = part_a.terms.empty() ? 0.0 : core::norm_squared(part_a);
  double wb = part_b.terms.empty() ? 0.0 : core::norm_squared(part_b);
  double total = wa + wb;
  if (total <= core::kZeroNormTol)
    throw std::runtime_error(std::string(who) + ": state vanished in partition");
  double deficit = std::abs(1.0 - total);
  // pair sums to exactly 1.0 by construction
  double pa = wa / total;
  BranchOutcome a = make_branch(sym_a, pa, part_a);
  BranchOutcome b = make_branch(sym_b, 1.0 - pa, part_b);
  a.raw_deficit = b.raw_deficit = deficit;
  return {std::move(a), std::move(b)};
}

} // namespace

std::pair<BranchOutcome, BranchOutcome> detect_onoff(const KetSuperposition& s,
                                                     int mode) {
  check_measurable(s, mode, "detect_onoff");

  // P0|g> = e^{-|g|^2/2} |0>
  KetSuperposition vac_part;
  vac_part.mode_count = s.mode_count;
  for (const auto& t : s.terms) {
    core::CoherentLabel amps = t.amps;
    cplx g = amps[mode];
    amps[mode] = 0.0;
    vac_part.terms.push_back({t.coeff * core::overlap(0.0, g), std::move(amps)});
  }
  KetSuperposition click_part =
      core::compact(core::sum(s, core::scaled(vac_part, -1.0)));

  double p_vac = core::norm_squared(vac_part);
  double p_click = core::norm_squared(click_part);
  // exact orthogonal projectors: no rescaling involved
  if (std::abs(p_vac + p_click - 1.0) > 1e-10)
    throw std::runtime_error("detect_onoff: branch probabilities do not close");

  return {make_branch("vac", p_vac, vac_part), make_branch("click", p_click, click_part)};
}

std::pair<BranchOutcome, BranchOutcome> homodyne_sign(const KetSuperposition& s,
                                                      int mode,
                                                      double ambiguity_tol) {
  check_measurable(s, mode, "homodyne_sign");
  auto classify = [](cplx a, double tol, double) -> int {
    if (a.real() > tol) return 1;
    if (a.real() < -tol) return -1;
    return 0;
  };
  return partition_measurement(s, mode, "plus", "minus", classify, ambiguity_tol,
                               0.0, "homodyne_sign");
}

std::pair<BranchOutcome, BranchOutcome> discriminate_presence(
    const KetSuperposition& s, int mode, double vac_tol, double min_lit) {
  check_measurable(s, mode, "discriminate_presence");
  if (vac_tol >= min_lit)
    throw std::invalid_argument("discriminate_presence: vac_tol must be < min_lit");
  auto classify = [](cplx a, double tol, double lit) -> int {
    double m = std::abs(a);
    if (m <= tol) return 1;   // vac branch
    if (m >= lit) return -1;  // click branch
    return 0;
  };
  return partition_measurement(s, mode, "vac", "click", classify, vac_tol, min_lit,
                               "discriminate_presence");
}

KetSuperposition feed_forward(const BranchOutcome& branch, const FeedForwardRule& rule) {
  auto it = rule.find(branch.symbol);
  if (it == rule.end())
    throw std::runtime_error("feed_forward: no rule for outcome '" + branch.symbol + "'");
  if (!it->second.has_value()) return branch.post;
  return optics::phase_modulator(branch.post, it->second->mode, it->second->theta);
}

} // namespace csq::measure

#include "csq/optics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace csq::optics {

namespace {

void check_mode(int mode, int mode_count, const char* who) {
  if (mode < 0 || mode >= mode_count)
    throw std::invalid_argument(std::string(who) + ": mode index out of range");
}

} // namespace

BeamSplitterSpec bs_from_reflectivity(int mode_a, int mode_b, double r) {
  if (r < 0.0 || r > 1.0)
    throw std::invalid_argument("bs_from_reflectivity: r outside [0,1]");
  return {mode_a, mode_b, std::asin(r)};
}

KetSuperposition beam_splitter(const KetSuperposition& s, const BeamSplitterSpec& spec) {
  check_mode(spec.mode_a, s.mode_count, "beam_splitter");
  check_mode(spec.mode_b, s.mode_count, "beam_splitter");
  if (spec.mode_a == spec.mode_b)
    throw std::invalid_argument("beam_splitter: identical modes");
  const double t = std::cos(spec.mix_angle);
  const double r = std::sin(spec.mix_angle);
  KetSuperposition out = s;
  for (auto& term : out.terms) {
    cplx a = term.amps[spec.mode_a];
    cplx b = term.amps[spec.mode_b];
    term.amps[spec.mode_a] = t * a - r * b;
    term.amps[spec.mode_b] = r * a + t * b;
  }
  return out;
}

KetSuperposition phase_modulator(const KetSuperposition& s, int mode, double theta) {
  check_mode(mode, s.mode_count, "phase_modulator");
  cplx factor = std::abs(theta - std::numbers::pi) < 1e-15
                    ? cplx(-1.0)
                    : std::exp(cplx(0.0, theta));
  KetSuperposition out = s;
  for (auto& term : out.terms) term.amps[mode] *= factor;
  return out;
}

KetSuperposition loss_channel(const KetSuperposition& s, const LossSpec& spec) {
  check_mode(spec.mode, s.mode_count, "loss_channel");
  if (spec.eta < 0.0 || spec.eta > 1.0)
    throw std::invalid_argument("loss_channel: eta outside [0,1]");
  const double t = std::sqrt(spec.eta);
  const double r = std::sqrt(1.0 - spec.eta);
  KetSuperposition out;
  out.mode_count = s.mode_count + 1;
  out.terms.reserve(s.terms.size());
  for (const auto& term : s.terms) {
    core::CoherentLabel amps = term.amps;
    cplx a = amps[spec.mode];
    amps[spec.mode] = t * a;
    amps.push_back(r * a);
    out.terms.push_back({term.coeff, std::move(amps)});
  }
  return out;
}

KetSuperposition add_mode(const KetSuperposition& s, cplx init) {
  KetSuperposition out;
  out.mode_count = s.mode_count + 1;
  out.terms.reserve(s.terms.size());
  for (const auto& term : s.terms) {
    core::CoherentLabel amps = term.amps;
    amps.push_back(init);
    out.terms.push_back({term.coeff, std::move(amps)});
  }
  return out;
}

KetSuperposition coherent_state(cplx a) { return core::make_ket({a}); }

KetSuperposition cat_state(double alpha, int sign) {
  if (sign != 1 && sign != -1)
    throw std::invalid_argument("cat_state: sign must be +1 or -1");
  KetSuperposition s = core::sum(core::make_ket({-alpha}),
                                 core::make_ket({alpha}, static_cast<double>(sign)));
  return core::normalize(s);
}

KetSuperposition tensor(const KetSuperposition& a, const KetSuperposition& b) {
  KetSuperposition out;
  out.mode_count = a.mode_count + b.mode_count;
  out.terms.reserve(a.terms.size() * b.terms.size());
  for (const auto& ta : a.terms) {
    for (const auto& tb : b.terms) {
      core::CoherentLabel amps = ta.amps;
      amps.insert(amps.end(), tb.amps.begin(), tb.amps.end());
      out.terms.push_back({ta.coeff * tb.coeff, std::move(amps)});
    }
  }
  return out;
}

} // namespace csq::optics

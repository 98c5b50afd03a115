#include "csq/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <stdexcept>

#include "json.hpp"

#include "csq/measure.hpp"

namespace csq::experiments {

namespace {

constexpr double kBalanced = std::numbers::pi / 4.0;
constexpr double kPi = std::numbers::pi;

// herald-class membership for readout-port amplitudes
constexpr double kClassTol = 1e-6;

using core::cplx;
using core::CoherentLabel;
using core::DyadMixture;
using core::KetSuperposition;

// rail sign patterns of the two herald classes; the minus-class patterns are
// the plus-class ones with the third rail flipped
constexpr int kPlusPattern[4][3] = {{-1, -1, -1}, {-1, 1, 1}, {1, -1, 1}, {1, 1, -1}};
constexpr int kMinusPattern[4][3] = {{-1, -1, 1}, {-1, 1, -1}, {1, -1, -1}, {1, 1, 1}};

KetSuperposition rails_state(const int pattern[4][3], double a) {
  KetSuperposition s;
  s.mode_count = 3;
  for (int i = 0; i < 4; ++i)
    s.terms.push_back({1.0, {pattern[i][0] * a, pattern[i][1] * a, pattern[i][2] * a}});
  return core::normalize(s);
}

// four even cats interfering on the balanced four-port network; the sign
// flip on rail 3 puts the two herald classes at readout-port values +-a
KetSuperposition four_port_network(KetSuperposition s) {
  s = optics::phase_modulator(s, 3, kPi);
  s = optics::beam_splitter(s, {0, 1, kBalanced});
  s = optics::beam_splitter(s, {2, 3, kBalanced});
  s = optics::beam_splitter(s, {0, 2, kBalanced});
  s = optics::beam_splitter(s, {1, 3, kBalanced});
  return s;
}

double round12(double x) {
  char b[40];
  std::snprintf(b, sizeof b, "%.12g", x);
  return std::strtod(b, nullptr);
}

std::string fmt10(double x) {
  char b[40];
  std::snprintf(b, sizeof b, "%.10g", x);
  return b;
}

// Tr(A^dag B) over coherent dyad mixtures
cplx frobenius_inner(const DyadMixture& a, const DyadMixture& b) {
  cplx acc = 0.0;
  for (const auto& ta : a.terms)
    for (const auto& tb : b.terms)
      acc += std::conj(ta.coeff) * tb.coeff * core::multimode_overlap(ta.ket, tb.ket) *
             core::multimode_overlap(tb.bra, ta.bra);
  return acc;
}

}  // namespace

KetSuperposition ghz_generator(double alpha) {
  KetSuperposition s = optics::cat_state(std::sqrt(3.0) * alpha, 1);
  s = optics::tensor(s, optics::coherent_state(0.0));
  s = optics::tensor(s, optics::coherent_state(0.0));
  s = optics::beam_splitter(s, optics::bs_from_reflectivity(0, 1, 1.0 / std::sqrt(3.0)));
  s = optics::beam_splitter(s, {0, 2, kBalanced});
  return s;
}

KetSuperposition xor_resource(double alpha) { return rails_state(kPlusPattern, alpha); }

TripartiteResult tripartite_generator(double alpha) {
  KetSuperposition s = optics::cat_state(alpha, 1);
  for (int k = 0; k < 3; ++k) s = optics::tensor(s, optics::cat_state(alpha, 1));
  s = optics::tensor(s, optics::coherent_state(alpha));  // local oscillator
  s = four_port_network(std::move(s));
  s = optics::beam_splitter(s, {0, 4, kBalanced});  // readout port vs oscillator

  auto [d1_vac, d1_click] = measure::discriminate_presence(s, 0);
  auto [plus_d2vac, plus_d2click] = measure::discriminate_presence(d1_vac.post, 4);
  auto [minus_d2vac, minus_d2click] = measure::discriminate_presence(d1_click.post, 4);
  if (plus_d2click.null_state || minus_d2vac.null_state)
    throw std::runtime_error("tripartite_generator: herald branch collapsed");

  TripartiteResult r;
  r.p_plus = d1_vac.probability * plus_d2click.probability;
  r.p_minus = d1_click.probability * minus_d2vac.probability;
  r.p_success = r.p_plus + r.p_minus;
  r.plus_branch = core::select_modes(plus_d2click.post, {1, 2, 3});
  r.minus_branch_uncorrected = core::select_modes(minus_d2vac.post, {1, 2, 3});

  KetSuperposition fixed = optics::phase_modulator(r.minus_branch_uncorrected, 2, kPi);
  double pp = r.p_plus / r.p_success;
  r.corrected = core::compact(core::mix_sum(
      core::mix_scaled(core::dyad(r.plus_branch), pp),
      core::mix_scaled(core::dyad(fixed), 1.0 - pp)));
  return r;
}

KetSuperposition xor_premeasurement(int K, int R, double alpha) {
  if ((K != 0 && K != 1) || (R != 0 && R != 1))
    throw std::invalid_argument("xor_premeasurement: bits must be 0 or 1");
  double k_amp = K ? alpha : -alpha;
  double r_amp = R ? alpha : -alpha;
  KetSuperposition s = optics::tensor(xor_resource(alpha), optics::coherent_state(k_amp));
  s = optics::tensor(s, optics::coherent_state(r_amp));
  // rails to 0/2/4, the two inputs to 1/3
  s = core::select_modes(s, {0, 3, 1, 4, 2});
  s = optics::beam_splitter(s, {0, 1, kBalanced});
  s = optics::beam_splitter(s, {2, 3, kBalanced});
  return s;
}

XorRunResult optical_xor_protocol(int K, int R, double alpha) {
  XorRunResult out;
  out.K = K;
  out.R = R;
  out.xor_value = K ^ R;
  out.consistent = true;

  KetSuperposition s = xor_premeasurement(K, R, alpha);
  auto m1 = measure::discriminate_presence(s, 0);
  for (const measure::BranchOutcome* o1 : {&m1.first, &m1.second}) {
    if (o1->null_state) continue;
    auto m2 = measure::discriminate_presence(o1->post, 2);
    for (const measure::BranchOutcome* o2 : {&m2.first, &m2.second}) {
      if (o2->null_state) continue;
      auto hm = measure::homodyne_sign(o2->post, 4);
      for (const measure::BranchOutcome* o3 : {&hm.first, &hm.second}) {
        if (o3->null_state) continue;
        XorBranch b;
        b.A = o1->symbol == "click";
        b.B = o2->symbol == "click";
        b.C = o3->symbol == "plus";
        b.probability = o1->probability * o2->probability * o3->probability;
        if ((b.A ^ b.B ^ b.C) != out.xor_value) out.consistent = false;
        out.branches.push_back(b);
      }
    }
  }
  return out;
}

std::string xor_json(const XorRunResult& r) {
  nlohmann::ordered_json doc;
  doc["branches"] = nlohmann::ordered_json::array();
  double total = 0.0;
  for (const auto& b : r.branches) {
    nlohmann::ordered_json jb;
    nlohmann::ordered_json outs = nlohmann::ordered_json::object();
    outs["M1"] = b.A ? "click" : "vac";
    outs["M2"] = b.B ? "click" : "vac";
    outs["C"] = b.C ? "plus" : "minus";
    jb["outcomes"] = std::move(outs);
    jb["prob"] = round12(b.probability);
    jb["failed"] = false;
    doc["branches"].push_back(std::move(jb));
    total += b.probability;
  }
  doc["p_success"] = round12(total);
  doc["K"] = r.K;
  doc["R"] = r.R;
  doc["xor"] = r.xor_value;
  return doc.dump(2);
}

std::array<double, 8> xor_outcome_distribution(const XorRunResult& r) {
  std::array<double, 8> p{};
  double total = 0.0;
  for (const auto& b : r.branches) {
    p[std::size_t(b.A * 4 + b.B * 2 + b.C)] += b.probability;
    total += b.probability;
  }
  for (auto& x : p) x /= total;
  return p;
}

std::array<std::array<double, 4>, 4> xor_gate_matrix() {
  const double h = 1.0 / std::sqrt(2.0);
  // pair basis |resource, data>: 00, 01, 10, 11
  return {{{h, 0.0, 0.0, h},
           {0.0, h, h, 0.0},
           {0.0, h, -h, 0.0},
           {h, 0.0, 0.0, -h}}};
}

std::array<double, 8> qubit_reference_protocol(int K, int R) {
  if ((K != 0 && K != 1) || (R != 0 && R != 1))
    throw std::invalid_argument("qubit_reference_protocol: bits must be 0 or 1");
  // qubit order (D, E, A, B, C), D most significant
  auto idx = [](int d, int e, int a, int b, int c) {
    return (((d * 2 + e) * 2 + a) * 2 + b) * 2 + c;
  };
  std::vector<double> v(32, 0.0);
  const int triples[4][3] = {{0, 0, 0}, {0, 1, 1}, {1, 1, 0}, {1, 0, 1}};
  for (const auto& t : triples) v[std::size_t(idx(K, R, t[0], t[1], t[2]))] = 0.5;

  const auto u = xor_gate_matrix();
  // gate on (A, D), then on (B, E); pair index = resource*2 + data
  for (int e = 0; e < 2; ++e)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) {
        double x[4], y[4];
        for (int a = 0; a < 2; ++a)
          for (int d = 0; d < 2; ++d) x[a * 2 + d] = v[std::size_t(idx(d, e, a, b, c))];
        for (int r = 0; r < 4; ++r) {
          y[r] = 0.0;
          for (int cc = 0; cc < 4; ++cc) y[r] += u[std::size_t(r)][std::size_t(cc)] * x[cc];
        }
        for (int a = 0; a < 2; ++a)
          for (int d = 0; d < 2; ++d) v[std::size_t(idx(d, e, a, b, c))] = y[a * 2 + d];
      }
  for (int d = 0; d < 2; ++d)
    for (int a = 0; a < 2; ++a)
      for (int c = 0; c < 2; ++c) {
        double x[4], y[4];
        for (int bb = 0; bb < 2; ++bb)
          for (int e = 0; e < 2; ++e) x[bb * 2 + e] = v[std::size_t(idx(d, e, a, bb, c))];
        for (int r = 0; r < 4; ++r) {
          y[r] = 0.0;
          for (int cc = 0; cc < 4; ++cc) y[r] += u[std::size_t(r)][std::size_t(cc)] * x[cc];
        }
        for (int bb = 0; bb < 2; ++bb)
          for (int e = 0; e < 2; ++e) v[std::size_t(idx(d, e, a, bb, c))] = y[bb * 2 + e];
      }

  // each party's announced bit is the parity of its measured pair: the data
  // outcome alone is an uninformative coin, the pair parity is K xor a
  std::array<double, 8> p{};
  for (int d = 0; d < 2; ++d)
    for (int e = 0; e < 2; ++e)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          for (int c = 0; c < 2; ++c) {
            double amp = v[std::size_t(idx(d, e, a, b, c))];
            p[std::size_t((a ^ d) * 4 + (b ^ e) * 2 + c)] += amp * amp;
          }
  return p;
}

double delta(double alpha, double eta) {
  if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("delta: eta outside [0,1]");
  return std::exp(-4.0 * alpha * alpha * (1.0 - eta));
}

LossAnalysisResult lossy_generator(double alpha, double eta,
                                   optics::Placement placement) {
  if (!(eta > 0.0) || eta > 1.0)
    throw std::invalid_argument("lossy_generator: eta must lie in (0, 1]");
  if (alpha < 1.5)
    throw std::invalid_argument("lossy_generator: alpha below 1.5 leaves the herald "
                                "classes unresolvable");

  KetSuperposition s = optics::cat_state(alpha, 1);
  for (int k = 0; k < 3; ++k) s = optics::tensor(s, optics::cat_state(alpha, 1));
  if (placement == optics::Placement::Input)
    for (int m = 0; m < 4; ++m)
      s = optics::loss_channel(s, {m, eta, optics::Placement::Input});
  s = four_port_network(std::move(s));
  if (placement == optics::Placement::Output)
    for (int m = 0; m < 4; ++m)
      s = optics::loss_channel(s, {m, eta, optics::Placement::Output});

  // herald classes by readout-port amplitude, kept coherently: a collapsing
  // detector model would erase the cross-class blocks of the reduced state
  const double root = std::sqrt(eta) * alpha;
  KetSuperposition plus, minus, useless;
  plus.mode_count = minus.mode_count = useless.mode_count = s.mode_count;
  for (const auto& t : s.terms) {
    double x = t.amps[0].real();
    if (std::abs(x - root) <= kClassTol)
      plus.terms.push_back(t);
    else if (std::abs(x + root) <= kClassTol)
      minus.terms.push_back(t);
    else
      useless.terms.push_back(t);
  }
  if (plus.terms.size() != 4 || minus.terms.size() != 4)
    throw std::runtime_error("lossy_generator: herald classes did not separate");

  LossAnalysisResult r;
  r.alpha = alpha;
  r.eta = eta;
  r.placement = placement;
  r.delta_value = delta(alpha, eta);

  // herald probabilities follow the sequential detector convention: first
  // split off the plus class, then split the remainder
  double w_plus = core::norm_squared(plus);
  double w_minus = core::norm_squared(minus);
  double w_useless = core::norm_squared(useless);
  double w_rest = core::norm_squared(core::sum(minus, useless));
  double p_plus = w_plus / (w_plus + w_rest);
  double p_minus =
      (w_rest / (w_plus + w_rest)) * (w_minus / (w_minus + w_useless));
  r.p_herald = p_plus + p_minus;
  r.psi1L = core::normalize(plus);
  r.psi2L = core::normalize(minus);

  KetSuperposition conditioned = core::normalize(core::sum(plus, minus));
  r.rho_o = core::compact(core::partial_trace(core::dyad(conditioned), {4, 5, 6, 7}));

  // the surviving coherence: ratio of an intra-class off-diagonal dyad
  // coefficient to a diagonal one
  const cplx* diag = nullptr;
  const cplx* off = nullptr;
  for (const auto& t : r.rho_o.terms) {
    bool port_same = std::abs(t.ket[0] - t.bra[0]) <= kClassTol;
    if (!port_same) continue;
    if (core::labels_equal(t.ket, t.bra, kClassTol)) {
      if (!diag) diag = &t.coeff;
    } else if (!off) {
      off = &t.coeff;
    }
    if (diag && off) break;
  }
  if (!diag || !off)
    throw std::runtime_error("lossy_generator: reduced state lost its block structure");
  r.w_ideal = (*off / *diag).real();
  r.p_success = r.p_herald * r.w_ideal;

  KetSuperposition fixed = optics::phase_modulator(r.psi2L, 3, kPi);
  double pp = p_plus / r.p_herald;
  DyadMixture corr_full = core::mix_sum(core::mix_scaled(core::dyad(r.psi1L), pp),
                                        core::mix_scaled(core::dyad(fixed), 1.0 - pp));
  r.rho_corrected = core::compact(core::partial_trace(corr_full, {0, 4, 5, 6, 7}));
  r.fidelity_corrected = core::fidelity(r.rho_corrected, xor_resource(root));
  r.fidelity_original = core::fidelity(r.rho_corrected, xor_resource(alpha));
  return r;
}

double threshold_eta(double alpha) {
  const double l2 = std::log(2.0);
  double lo = 1.0 - 2.0 * l2 / (4.0 * alpha * alpha);
  double hi = 1.0;
  auto p = [&](double eta) {
    return lossy_generator(alpha, eta, optics::Placement::Input).p_success;
  };
  if (p(lo) >= 0.25 || p(hi) < 0.25)
    throw std::runtime_error("threshold_eta: curve does not bracket 0.25");
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    (p(mid) >= 0.25 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

DecompositionReport decompose_reduced_state(const LossAnalysisResult& r) {
  const double a = std::sqrt(r.eta) * r.alpha;

  KetSuperposition psi = xor_resource(a);
  KetSuperposition psi_fixed = optics::phase_modulator(psi, 2, kPi);
  KetSuperposition ideal_ket = core::normalize(core::sum(
      optics::tensor(optics::coherent_state(a), psi),
      optics::tensor(optics::coherent_state(-a), psi_fixed)));
  DyadMixture ideal = core::dyad(ideal_ket);

  auto residue = [&](double port_sign, const int pattern[4][3]) {
    DyadMixture m;
    m.mode_count = 4;
    for (int i = 0; i < 4; ++i) {
      CoherentLabel l{port_sign * a, pattern[i][0] * a, pattern[i][1] * a,
                      pattern[i][2] * a};
      m.terms.push_back({0.25, l, l});
    }
    return m;
  };
  DyadMixture resid = core::mix_scaled(
      core::mix_sum(residue(1.0, kPlusPattern), residue(-1.0, kMinusPattern)), 0.5);

  // least-squares weight of the ideal dyad against the diagonal residue
  DyadMixture edge = core::mix_sum(ideal, core::mix_scaled(resid, -1.0));
  DyadMixture gap = core::mix_sum(r.rho_o, core::mix_scaled(resid, -1.0));
  double denom = frobenius_inner(edge, edge).real();
  if (denom <= 0.0)
    throw std::runtime_error("decompose_reduced_state: degenerate model");
  DecompositionReport rep;
  rep.w_fitted = frobenius_inner(edge, gap).real() / denom;

  DyadMixture model = core::mix_sum(core::mix_scaled(ideal, rep.w_fitted),
                                    core::mix_scaled(resid, 1.0 - rep.w_fitted));
  rep.residual_trace_distance = core::trace_distance(r.rho_o, model);
  rep.bound = std::max(2.0 * r.delta_value * r.delta_value,
                       5.0 * std::exp(-2.0 * r.eta * r.alpha * r.alpha));
  rep.within_bound = rep.residual_trace_distance <= rep.bound;
  return rep;
}

std::vector<SweepRow> success_sweep(double alpha, const std::vector<double>& eta_grid,
                                    bool parallel) {
  for (double eta : eta_grid)
    if (!(eta > 0.0) || eta > 1.0)
      throw std::invalid_argument("success_sweep: grid point outside (0, 1]");
  std::vector<SweepRow> rows(eta_grid.size());
  const long n = static_cast<long>(eta_grid.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long i = 0; i < n; ++i) {
    const auto L =
        lossy_generator(alpha, eta_grid[std::size_t(i)], optics::Placement::Input);
    rows[std::size_t(i)] = {alpha, L.eta, L.p_success, 0.5 * L.delta_value,
                            L.fidelity_corrected};
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "alpha,eta,p_success,delta_over_2,fidelity\n";
  for (const auto& r : rows) {
    out += fmt10(r.alpha);
    out += ',';
    out += fmt10(r.eta);
    out += ',';
    out += fmt10(r.p_success);
    out += ',';
    out += fmt10(r.delta_over_2);
    out += ',';
    out += fmt10(r.fidelity);
    out += '\n';
  }
  return out;
}

}  // namespace csq::experiments

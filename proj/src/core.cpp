#include "csq/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace csq::core {

cplx overlap(cplx a, cplx b) {
  return std::exp(-0.5 * (std::norm(a) + std::norm(b)) + std::conj(a) * b);
}

cplx multimode_overlap(const CoherentLabel& u, const CoherentLabel& v) {
  if (u.size() != v.size())
    throw std::invalid_argument("multimode_overlap: mode count mismatch");
  cplx p = 1.0;
  for (size_t m = 0; m < u.size(); ++m) p *= overlap(u[m], v[m]);
  return p;
}

bool labels_equal(const CoherentLabel& u, const CoherentLabel& v, double tol) {
  if (u.size() != v.size()) return false;
  for (size_t m = 0; m < u.size(); ++m)
    if (std::abs(u[m] - v[m]) > tol) return false;
  return true;
}

KetSuperposition make_ket(CoherentLabel amps, cplx coeff) {
  if (amps.empty()) throw std::invalid_argument("make_ket: no modes");
  for (cplx a : amps)
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
      throw std::invalid_argument("make_ket: non-finite amplitude");
  KetSuperposition s;
  s.mode_count = static_cast<int>(amps.size());
  s.terms.push_back({coeff, std::move(amps)});
  return s;
}

KetSuperposition vacuum_state(int mode_count) {
  if (mode_count < 1) throw std::invalid_argument("vacuum_state: mode_count < 1");
  return make_ket(CoherentLabel(mode_count, 0.0));
}

cplx inner(const KetSuperposition& x, const KetSuperposition& y) {
  if (x.mode_count != y.mode_count)
    throw std::invalid_argument("inner: mode count mismatch");
  cplx v = 0.0;
  for (const auto& s : x.terms)
    for (const auto& t : y.terms)
      v += std::conj(s.coeff) * t.coeff * multimode_overlap(s.amps, t.amps);
  return v;
}

double norm_squared(const KetSuperposition& s) {
  double v = inner(s, s).real();
  if (v < 0.0) {
    if (v < -1e-12) throw std::runtime_error("norm_squared: negative beyond tolerance");
    v = 0.0;
  }
  return v;
}

KetSuperposition normalize(const KetSuperposition& s) {
  double n2 = norm_squared(s);
  if (n2 <= kZeroNormTol) throw std::runtime_error("normalize: zero-norm state");
  return scaled(s, 1.0 / std::sqrt(n2));
}

KetSuperposition scaled(const KetSuperposition& s, cplx factor) {
  KetSuperposition r = s;
  for (auto& t : r.terms) t.coeff *= factor;
  return r;
}

KetSuperposition sum(const KetSuperposition& a, const KetSuperposition& b) {
  if (a.mode_count != b.mode_count)
    throw std::invalid_argument("sum: mode count mismatch");
  KetSuperposition r = a;
  r.terms.insert(r.terms.end(), b.terms.begin(), b.terms.end());
  return r;
}

KetSuperposition compact(const KetSuperposition& s, double tol) {
  KetSuperposition r;
  r.mode_count = s.mode_count;
  for (const auto& t : s.terms) {
    bool merged = false;
    for (auto& u : r.terms) {
      if (labels_equal(u.amps, t.amps, tol)) {
        u.coeff += t.coeff;
        merged = true;
        break;
      }
    }
    if (!merged) r.terms.push_back(t);
  }
  double cmax = 0.0;
  for (const auto& t : r.terms) cmax = std::max(cmax, std::abs(t.coeff));
  std::erase_if(r.terms, [&](const KetTerm& t) { return std::abs(t.coeff) <= tol * cmax; });
  return r;
}

DyadMixture compact(const DyadMixture& m, double tol) {
  DyadMixture r;
  r.mode_count = m.mode_count;
  for (const auto& t : m.terms) {
    bool merged = false;
    for (auto& u : r.terms) {
      if (labels_equal(u.ket, t.ket, tol) && labels_equal(u.bra, t.bra, tol)) {
        u.coeff += t.coeff;
        merged = true;
        break;
      }
    }
    if (!merged) r.terms.push_back(t);
  }
  double cmax = 0.0;
  for (const auto& t : r.terms) cmax = std::max(cmax, std::abs(t.coeff));
  std::erase_if(r.terms, [&](const DyadTerm& t) { return std::abs(t.coeff) <= tol * cmax; });
  return r;
}

DyadMixture dyad(const KetSuperposition& psi) {
  DyadMixture m;
  m.mode_count = psi.mode_count;
  for (const auto& s : psi.terms)
    for (const auto& t : psi.terms)
      m.terms.push_back({s.coeff * std::conj(t.coeff), s.amps, t.amps});
  return m;
}

DyadMixture mix_sum(const DyadMixture& a, const DyadMixture& b) {
  if (a.mode_count != b.mode_count)
    throw std::invalid_argument("mix_sum: mode count mismatch");
  DyadMixture r = a;
  r.terms.insert(r.terms.end(), b.terms.begin(), b.terms.end());
  return r;
}

DyadMixture mix_scaled(const DyadMixture& m, cplx factor) {
  DyadMixture r = m;
  for (auto& t : r.terms) t.coeff *= factor;
  return r;
}

cplx trace_of(const DyadMixture& m) {
  cplx v = 0.0;
  for (const auto& t : m.terms) v += t.coeff * multimode_overlap(t.bra, t.ket);
  return v;
}

static void check_mode_subset(const std::vector<int>& modes, int mode_count,
                              const char* who) {
  std::vector<bool> seen(mode_count, false);
  for (int m : modes) {
    if (m < 0 || m >= mode_count)
      throw std::invalid_argument(std::string(who) + ": mode index out of range");
    if (seen[m]) throw std::invalid_argument(std::string(who) + ": duplicate mode index");
    seen[m] = true;
  }
}

DyadMixture partial_trace(const DyadMixture& m, const std::vector<int>& traced) {
  check_mode_subset(traced, m.mode_count, "partial_trace");
  std::vector<bool> drop(m.mode_count, false);
  for (int t : traced) drop[t] = true;

  DyadMixture r;
  r.mode_count = m.mode_count - static_cast<int>(traced.size());
  for (const auto& t : m.terms) {
    cplx factor = 1.0;
    CoherentLabel ket, bra;
    ket.reserve(r.mode_count);
    bra.reserve(r.mode_count);
    for (int mm = 0; mm < m.mode_count; ++mm) {
      if (drop[mm]) {
        factor *= overlap(t.bra[mm], t.ket[mm]); // Tr |k><b| = <b|k>
      } else {
        ket.push_back(t.ket[mm]);
        bra.push_back(t.bra[mm]);
      }
    }
    r.terms.push_back({t.coeff * factor, std::move(ket), std::move(bra)});
  }
  return r;
}

KetSuperposition select_modes(const KetSuperposition& s, const std::vector<int>& keep) {
  check_mode_subset(keep, s.mode_count, "select_modes");
  if (s.terms.empty()) throw std::invalid_argument("select_modes: empty state");
  std::vector<bool> kept(s.mode_count, false);
  for (int k : keep) kept[k] = true;
  for (int m = 0; m < s.mode_count; ++m) {
    if (kept[m]) continue;
    cplx ref = s.terms.front().amps[m];
    for (const auto& t : s.terms)
      if (std::abs(t.amps[m] - ref) > kLabelMergeTol)
        throw std::runtime_error("select_modes: dropped mode " + std::to_string(m) +
                                 " varies across terms");
  }
  KetSuperposition r;
  r.mode_count = static_cast<int>(keep.size());
  for (const auto& t : s.terms) {
    CoherentLabel amps;
    amps.reserve(keep.size());
    for (int k : keep) amps.push_back(t.amps[k]);
    r.terms.push_back({t.coeff, std::move(amps)});
  }
  return r;
}

double fidelity(const DyadMixture& rho, const KetSuperposition& psi) {
  if (rho.mode_count != psi.mode_count)
    throw std::invalid_argument("fidelity: mode count mismatch");
  if (std::abs(norm_squared(psi) - 1.0) > 1e-9)
    throw std::invalid_argument("fidelity: psi not normalized");
  if (std::abs(trace_of(rho) - cplx(1.0)) > 1e-9)
    throw std::invalid_argument("fidelity: rho trace != 1");

  auto bra_psi = [&](const CoherentLabel& u) {
    cplx v = 0.0;
    for (const auto& s : psi.terms)
      v += std::conj(s.coeff) * multimode_overlap(s.amps, u);
    return v;
  };
  cplx f = 0.0;
  for (const auto& t : rho.terms)
    f += t.coeff * bra_psi(t.ket) * std::conj(bra_psi(t.bra));
  return std::clamp(f.real(), 0.0, 1.0);
}

EmbeddedOperator to_matrix(const DyadMixture& m) {
  std::vector<CoherentLabel> basis;
  auto index_of = [&](const CoherentLabel& l) {
    for (size_t i = 0; i < basis.size(); ++i)
      if (labels_equal(basis[i], l)) return i;
    basis.push_back(l);
    return basis.size() - 1;
  };
  std::vector<std::pair<size_t, size_t>> idx;
  idx.reserve(m.terms.size());
  for (const auto& t : m.terms) idx.emplace_back(index_of(t.ket), index_of(t.bra));

  const size_t n = basis.size();
  if (n == 0) throw std::invalid_argument("to_matrix: empty mixture");
  if (n > 256) throw std::invalid_argument("to_matrix: more than 256 distinct labels");

  Eigen::MatrixXcd G(n, n);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) G(i, j) = multimode_overlap(basis[i], basis[j]);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G);
  const auto& ev = es.eigenvalues();
  if (ev(0) <= kGramPivotTol * ev(n - 1))
    throw std::runtime_error(
        "to_matrix: Gram matrix singular; merge degenerate labels first");

  // A's columns realize the labels in an orthonormal basis: A^H A = G.
  Eigen::MatrixXcd A = ev.cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();

  Eigen::MatrixXcd R = Eigen::MatrixXcd::Zero(n, n);
  for (size_t t = 0; t < m.terms.size(); ++t)
    R += m.terms[t].coeff * (A.col(idx[t].first) * A.col(idx[t].second).adjoint());

  double scale = 1.0 + R.cwiseAbs().maxCoeff();
  if ((R - R.adjoint()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw std::invalid_argument("to_matrix: mixture is not Hermitian");
  return {std::move(R), std::move(basis)};
}

std::vector<double> spectrum(const DyadMixture& m) {
  EmbeddedOperator e = to_matrix(m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(e.mat);
  std::vector<double> out(es.eigenvalues().data(),
                          es.eigenvalues().data() + es.eigenvalues().size());
  return out;
}

double trace_distance(const DyadMixture& r1, const DyadMixture& r2) {
  DyadMixture diff = mix_sum(r1, mix_scaled(r2, -1.0));
  diff = compact(diff, 0.0); // merge exact duplicates, keep tiny coefficients
  if (diff.terms.empty()) return 0.0;
  double d = 0.0;
  for (double lam : spectrum(diff)) d += std::abs(lam);
  return 0.5 * d;
}

bool terms_match(const KetSuperposition& a, const KetSuperposition& b, double tol) {
  if (a.mode_count != b.mode_count) return false;
  KetSuperposition ca = compact(a), cb = compact(b);
  if (ca.terms.size() != cb.terms.size()) return false;
  std::vector<bool> used(cb.terms.size(), false);
  for (const auto& t : ca.terms) {
    bool found = false;
    for (size_t j = 0; j < cb.terms.size(); ++j) {
      if (used[j]) continue;
      if (labels_equal(t.amps, cb.terms[j].amps, tol) &&
          std::abs(t.coeff - cb.terms[j].coeff) <= tol) {
        used[j] = true;
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

bool terms_match(const DyadMixture& a, const DyadMixture& b, double tol) {
  if (a.mode_count != b.mode_count) return false;
  DyadMixture ca = compact(a), cb = compact(b);
  if (ca.terms.size() != cb.terms.size()) return false;
  std::vector<bool> used(cb.terms.size(), false);
  for (const auto& t : ca.terms) {
    bool found = false;
    for (size_t j = 0; j < cb.terms.size(); ++j) {
      if (used[j]) continue;
      if (labels_equal(t.ket, cb.terms[j].ket, tol) &&
          labels_equal(t.bra, cb.terms[j].bra, tol) &&
          std::abs(t.coeff - cb.terms[j].coeff) <= tol) {
        used[j] = true;
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

std::string dump_json(const KetSuperposition& s) {
  nlohmann::ordered_json j;
  j["modes"] = s.mode_count;
  j["terms"] = nlohmann::ordered_json::array();
  for (const auto& t : s.terms) {
    nlohmann::ordered_json jt;
    jt["coeff"] = {t.coeff.real(), t.coeff.imag()};
    auto amps = nlohmann::ordered_json::array();
    for (cplx a : t.amps) amps.push_back({a.real(), a.imag()});
    jt["amps"] = std::move(amps);
    j["terms"].push_back(std::move(jt));
  }
  return j.dump();
}

} // namespace csq::core

#include "csq/fock.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "csq/measure.hpp"
#include "csq/optics.hpp"

namespace csq::fock {

namespace {

std::string fmt_sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

void check_mode(const FockState& s, int mode, const char* who) {
  if (mode < 0 || mode >= s.mode_count)
    throw std::invalid_argument(std::string(who) + ": mode " + std::to_string(mode) +
                                " out of range for " + std::to_string(s.mode_count) +
                                " modes");
}

}  // namespace

std::size_t FockState::dim() const {
  std::size_t d = 1;
  for (int m = 0; m < mode_count; ++m) d *= std::size_t(cutoff) + 1;
  return d;
}

std::size_t FockState::stride(int mode) const {
  std::size_t st = 1;
  for (int m = mode_count - 1; m > mode; --m) st *= std::size_t(cutoff) + 1;
  return st;
}

FockState vacuum_fock(int mode_count, int cutoff) {
  if (mode_count < 1) throw std::invalid_argument("vacuum_fock: mode_count >= 1 required");
  if (cutoff < 1) throw std::invalid_argument("vacuum_fock: cutoff >= 1 required");
  FockState s;
  s.mode_count = mode_count;
  s.cutoff = cutoff;
  s.amps.assign(s.dim(), cplx(0.0));
  s.amps[0] = 1.0;
  return s;
}

std::vector<cplx> coherent_column(cplx a, int cutoff) {
  if (cutoff < 1) throw std::invalid_argument("coherent_column: cutoff >= 1 required");
  std::vector<cplx> col(std::size_t(cutoff) + 1);
  col[0] = std::exp(-0.5 * std::norm(a));
  for (int n = 0; n < cutoff; ++n) col[n + 1] = col[n] * a / std::sqrt(double(n + 1));
  return col;
}

FockState coherent_fock(cplx a, int cutoff) {
  FockState s;
  s.mode_count = 1;
  s.cutoff = cutoff;
  s.amps = coherent_column(a, cutoff);
  return s;
}

FockState product_coherent(const core::CoherentLabel& labels, int cutoff) {
  if (labels.empty()) throw std::invalid_argument("product_coherent: empty label");
  FockState s;
  s.mode_count = int(labels.size());
  s.cutoff = cutoff;
  s.amps = {cplx(1.0)};
  for (cplx a : labels) {
    const std::vector<cplx> col = coherent_column(a, cutoff);
    std::vector<cplx> next(s.amps.size() * col.size());
    for (std::size_t i = 0; i < s.amps.size(); ++i)
      for (std::size_t j = 0; j < col.size(); ++j) next[i * col.size() + j] = s.amps[i] * col[j];
    s.amps = std::move(next);
  }
  return s;
}

FockState embed_superposition(const core::KetSuperposition& s, int cutoff) {
  if (s.mode_count < 1 || s.terms.empty())
    throw std::invalid_argument("embed_superposition: empty state");
  FockState out = vacuum_fock(s.mode_count, cutoff);
  out.amps[0] = 0.0;
  for (const auto& t : s.terms) {
    const FockState part = product_coherent(t.amps, cutoff);
    for (std::size_t i = 0; i < out.amps.size(); ++i) out.amps[i] += t.coeff * part.amps[i];
  }
  return out;
}

double poisson_tail(double mean, int cutoff) {
  if (mean <= 0.0) return 0.0;
  if (cutoff < 0) return 1.0;
  // Sum the omitted upper terms directly; no 1 - CDF cancellation.
  const double log_first =
      -mean + double(cutoff + 1) * std::log(mean) - std::lgamma(double(cutoff) + 2.0);
  double term = std::exp(log_first);
  double sum = 0.0;
  for (int n = cutoff + 1; n <= cutoff + 4000; ++n) {
    sum += term;
    term *= mean / double(n + 1);
    if (term <= sum * 1e-17) break;
  }
  return sum;
}

double max_mean_photon(const core::KetSuperposition& s) {
  double mx = 0.0;
  for (const auto& t : s.terms)
    for (cplx a : t.amps) mx = std::max(mx, std::norm(a));
  return mx;
}

cplx inner_fock(const FockState& a, const FockState& b) {
  if (a.mode_count != b.mode_count || a.cutoff != b.cutoff)
    throw std::invalid_argument("inner_fock: shape mismatch");
  cplx acc = 0.0;
  for (std::size_t i = 0; i < a.amps.size(); ++i) acc += std::conj(a.amps[i]) * b.amps[i];
  return acc;
}

double norm_squared_fock(const FockState& s) {
  double acc = 0.0;
  for (cplx a : s.amps) acc += std::norm(a);
  return acc;
}

FockState bs_unitary_fock(const FockState& s, int mode_a, int mode_b, double mix_angle,
                          ExecPolicy policy) {
  check_mode(s, mode_a, "bs_unitary_fock");
  check_mode(s, mode_b, "bs_unitary_fock");
  if (mode_a == mode_b) throw std::invalid_argument("bs_unitary_fock: modes must differ");

  const int c = s.cutoff;
  const int L = c + 1;
  const std::size_t sa = s.stride(mode_a);
  const std::size_t sb = s.stride(mode_b);

  // The coupler preserves n = n_a + n_b; exponentiate each kept block
  // exactly. G|k, n-k> = sqrt(k(n-k+1))|k-1, n-k+1> - sqrt((k+1)(n-k))|k+1, n-k-1>
  // is real skew-symmetric tridiagonal, so H = iG is Hermitian and
  // exp(theta G) = V exp(-i theta Lambda) V^dag.
  std::vector<Eigen::MatrixXcd> blocks(std::size_t(2 * c) + 1);
  for (int n = 0; n <= 2 * c; ++n) {
    const int k_min = std::max(0, n - c);
    const int k_max = std::min(n, c);
    const int m = k_max - k_min + 1;
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(m, m);
    for (int r = 0; r + 1 < m; ++r) {
      const int k = k_min + r;
      const double g = std::sqrt(double(k + 1)) * std::sqrt(double(n - k));
      h(r, r + 1) = cplx(0.0, g);
      h(r + 1, r) = cplx(0.0, -g);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    Eigen::VectorXcd phases(m);
    for (int r = 0; r < m; ++r)
      phases(r) = std::exp(cplx(0.0, -mix_angle * es.eigenvalues()(r)));
    blocks[std::size_t(n)] =
        es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  }

  // A plane fixes every other mode's occupation; planes are independent.
  std::vector<std::size_t> planes;
  const std::size_t d = s.dim();
  planes.reserve(d / (std::size_t(L) * L));
  for (std::size_t idx = 0; idx < d; ++idx)
    if ((idx / sa) % std::size_t(L) == 0 && (idx / sb) % std::size_t(L) == 0)
      planes.push_back(idx);

  FockState out = s;
  auto apply_plane = [&](std::size_t base) {
    Eigen::VectorXcd v, w;
    for (int n = 0; n <= 2 * c; ++n) {
      const int k_min = std::max(0, n - c);
      const int k_max = std::min(n, c);
      const int m = k_max - k_min + 1;
      v.resize(m);
      for (int r = 0; r < m; ++r) {
        const int k = k_min + r;
        v(r) = s.amps[base + std::size_t(k) * sa + std::size_t(n - k) * sb];
      }
      w = blocks[std::size_t(n)] * v;
      for (int r = 0; r < m; ++r) {
        const int k = k_min + r;
        out.amps[base + std::size_t(k) * sa + std::size_t(n - k) * sb] = w(r);
      }
    }
  };

  if (policy == ExecPolicy::Parallel) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < long(planes.size()); ++i) apply_plane(planes[std::size_t(i)]);
  } else {
    for (std::size_t i = 0; i < planes.size(); ++i) apply_plane(planes[i]);
  }
  return out;
}

FockState phase_fock(const FockState& s, int mode, double theta) {
  check_mode(s, mode, "phase_fock");
  const int L = s.cutoff + 1;
  std::vector<cplx> factor(static_cast<std::size_t>(L));
  const bool is_pi = std::abs(theta - std::numbers::pi) < 1e-15;
  for (int n = 0; n < L; ++n)
    factor[std::size_t(n)] =
        is_pi ? cplx(n % 2 ? -1.0 : 1.0) : std::exp(cplx(0.0, theta * n));
  const std::size_t st = s.stride(mode);
  FockState out = s;
  for (std::size_t idx = 0; idx < out.amps.size(); ++idx)
    out.amps[idx] *= factor[(idx / st) % std::size_t(L)];
  return out;
}

FockState add_vacuum_mode_fock(const FockState& s) {
  FockState out;
  out.mode_count = s.mode_count + 1;
  out.cutoff = s.cutoff;
  const std::size_t L = std::size_t(s.cutoff) + 1;
  out.amps.assign(s.amps.size() * L, cplx(0.0));
  for (std::size_t idx = 0; idx < s.amps.size(); ++idx) out.amps[idx * L] = s.amps[idx];
  return out;
}

FockState loss_fock(const FockState& s, int mode, double eta, ExecPolicy policy) {
  check_mode(s, mode, "loss_fock");
  if (!(eta >= 0.0 && eta <= 1.0))
    throw std::invalid_argument("loss_fock: eta must lie in [0,1]");
  FockState grown = add_vacuum_mode_fock(s);
  const double mix = std::asin(std::sqrt(std::clamp(1.0 - eta, 0.0, 1.0)));
  return bs_unitary_fock(grown, mode, grown.mode_count - 1, mix, policy);
}

double p_vacuum_fock(const FockState& s, int mode) {
  check_mode(s, mode, "p_vacuum_fock");
  const std::size_t st = s.stride(mode);
  const std::size_t L = std::size_t(s.cutoff) + 1;
  double acc = 0.0;
  for (std::size_t idx = 0; idx < s.amps.size(); ++idx)
    if ((idx / st) % L == 0) acc += std::norm(s.amps[idx]);
  return acc;
}

double cross_validate(const core::KetSuperposition& analytic, const FockState& oracle) {
  if (analytic.mode_count != oracle.mode_count)
    throw std::invalid_argument("cross_validate: mode count mismatch");
  const double mean = max_mean_photon(analytic);
  const double tail = poisson_tail(mean, oracle.cutoff);
  if (!(tail < 1e-10))
    throw std::runtime_error("cross_validate: cutoff " + std::to_string(oracle.cutoff) +
                             " too small: Poisson tail " + fmt_sci(tail) +
                             " at mean photon number " + fmt_sci(mean) +
                             " exceeds 1e-10");
  const FockState emb = embed_superposition(analytic, oracle.cutoff);
  return std::abs(1.0 - std::abs(inner_fock(emb, oracle)));
}

double homodyne_plus_probability_fock(const FockState& s) {
  if (s.mode_count != 1)
    throw std::invalid_argument("homodyne_plus_probability_fock: single mode only");
  const int top = s.cutoff;
  // Everything interesting lives inside the classical turning point
  // sqrt(2*cutoff + 1); pad by 6 for the Gaussian skirt.
  const double x_max = std::sqrt(2.0 * top + 1.0) + 6.0;
  const int steps = 20000;  // Simpson; even
  const double h = x_max / steps;

  auto density = [&](double x) {
    double prev = 0.0;
    double cur = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * x * x);
    cplx psi = s.amps[0] * cur;
    for (int n = 0; n < top; ++n) {
      const double nxt = x * std::sqrt(2.0 / double(n + 1)) * cur -
                         std::sqrt(double(n) / double(n + 1)) * prev;
      prev = cur;
      cur = nxt;
      psi += s.amps[std::size_t(n) + 1] * cur;
    }
    return std::norm(psi);
  };

  double acc = density(0.0) + density(x_max);
  for (int i = 1; i < steps; ++i) acc += density(i * h) * (i % 2 ? 4.0 : 2.0);
  const double integral = acc * h / 3.0;
  return integral / norm_squared_fock(s);
}

AgreementResult agreement_suite(int n_circuits, int cutoff, unsigned seed) {
  if (n_circuits < 1) throw std::invalid_argument("agreement_suite: n_circuits >= 1");
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto randint = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };

  AgreementResult res;
  for (int ci = 0; ci < n_circuits; ++ci) {
    int nmodes = randint(2, 3);

    core::KetSuperposition engine;
    for (int m = 0; m < nmodes; ++m) {
      core::KetSuperposition one;
      if (unit(rng) < 0.3) {
        const double alpha = 0.6 + 1.4 * unit(rng);
        one = optics::cat_state(alpha, unit(rng) < 0.5 ? 1 : -1);
      } else {
        // |a| <= 2; mode 0 gets |a| >= 0.5 so a too-small cutoff is always
        // caught by the tail bound rather than slipping through on a
        // nearly-vacuum circuit.
        double re = 0.0, im = 0.0;
        do {
          re = 2.8 * unit(rng) - 1.4;
          im = 2.8 * unit(rng) - 1.4;
        } while (m == 0 && re * re + im * im < 0.25);
        one = optics::coherent_state(cplx(re, im));
      }
      engine = (m == 0) ? one : optics::tensor(engine, one);
    }
    FockState oracle = embed_superposition(engine, cutoff);

    const int n_elements = randint(1, 4);
    for (int e = 0; e < n_elements; ++e) {
      const int kind = randint(0, nmodes < 3 ? 2 : 1);
      if (kind == 0) {
        const int a = randint(0, nmodes - 1);
        int b = a;
        while (b == a) b = randint(0, nmodes - 1);
        const auto spec = optics::bs_from_reflectivity(a, b, unit(rng));
        engine = optics::beam_splitter(engine, spec);
        oracle = bs_unitary_fock(oracle, a, b, spec.mix_angle);
      } else if (kind == 1) {
        const int m = randint(0, nmodes - 1);
        const double theta =
            unit(rng) < 0.2 ? std::numbers::pi : 2.0 * std::numbers::pi * unit(rng);
        engine = optics::phase_modulator(engine, m, theta);
        oracle = phase_fock(oracle, m, theta);
      } else {
        const int m = randint(0, nmodes - 1);
        const double eta = 0.5 + 0.5 * unit(rng);
        engine = optics::loss_channel(engine, {m, eta, optics::Placement::Input});
        oracle = loss_fock(oracle, m, eta);
        ++nmodes;
      }
    }

    res.max_overlap_deficit = std::max(res.max_overlap_deficit, cross_validate(engine, oracle));
    const double nrm = norm_squared_fock(oracle);
    for (int m = 0; m < nmodes; ++m) {
      const auto [vac, click] = measure::detect_onoff(engine, m);
      const double gap = std::abs(vac.probability - p_vacuum_fock(oracle, m) / nrm);
      res.max_prob_gap = std::max(res.max_prob_gap, gap);
    }
    ++res.circuits_run;
  }
  return res;
}

}  // namespace csq::fock

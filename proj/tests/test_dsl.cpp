#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "csq/core.hpp"
#include "csq/dsl.hpp"
#include "csq/measure.hpp"
#include "csq/optics.hpp"

using namespace csq;
using dsl::Circuit;
using dsl::DslError;
using dsl::InputKind;
using dsl::InstrKind;

namespace {

const double kExpM4 = 0.01831563888873418;  // exp(-4)

std::string read_circuit_file(const std::string& name) {
  std::ifstream in(std::string(CSQ_CIRCUITS_DIR) + "/" + name);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// line/col of the DslError thrown by text, or (-1,-1) if none
std::pair<int, int> error_pos(const std::string& text) {
  try {
    dsl::parse_circuit(text);
  } catch (const DslError& e) {
    return {e.line, e.col};
  }
  return {-1, -1};
}

const dsl::BranchResult& branch_with(const dsl::RunReport& r,
                                     const std::vector<std::pair<std::string, std::string>>& out) {
  for (const auto& b : r.branches)
    if (b.outcomes == out) return b;
  REQUIRE(false);
  return r.branches.front();
}

core::KetSuperposition ket_sum(const std::vector<core::CoherentLabel>& labels) {
  core::KetSuperposition s = core::make_ket(labels.front());
  for (std::size_t i = 1; i < labels.size(); ++i)
    s = core::sum(s, core::make_ket(labels[i]));
  return core::normalize(s);
}

}  // namespace

TEST_CASE("corpus files parse to the expected structure") {
  Circuit c = dsl::parse_circuit(read_circuit_file("fig2_ghz.qc"));
  CHECK(c.mode_count == 3);
  REQUIRE(c.inputs.size() == 1);
  CHECK(c.inputs[0].mode == 0);
  CHECK(c.inputs[0].kind == InputKind::Cat);
  CHECK(c.inputs[0].alpha == 3.4641016);
  CHECK(c.inputs[0].sign == 1);
  REQUIRE(c.elements.size() == 2);
  CHECK(c.elements[0].kind == InstrKind::Bs);
  CHECK(c.elements[0].mode_a == 0);
  CHECK(c.elements[0].mode_b == 1);
  CHECK(c.elements[0].value == 0.5773503);
  CHECK(c.elements[1].mode_b == 2);
  CHECK(c.elements[1].value == 0.7071068);

  Circuit f3 = dsl::parse_circuit(read_circuit_file("fig3_tripartite.qc"));
  CHECK(f3.mode_count == 5);
  CHECK(f3.inputs.size() == 5);
  CHECK(f3.elements.size() == 10);
  CHECK(f3.elements.back().kind == InstrKind::OnClick);
  CHECK(f3.elements.back().symbol == "click");
  CHECK(f3.elements.back().value == std::numbers::pi);

  Circuit f5 = dsl::parse_circuit(read_circuit_file("fig5_lossy.qc"));
  CHECK(f5.elements[0].kind == InstrKind::Loss);
  CHECK(f5.elements[0].value == 0.8536);
  CHECK(f5.elements[0].placement == optics::Placement::Input);
}

TEST_CASE("parse rejects malformed and out-of-contract lines with positions") {
  // identical beam splitter ports
  auto [l1, c1] = error_pos("modes 2\ninput 0 coherent 1\nbs 0 0 0.5\n");
  CHECK(l1 == 3);
  CHECK(c1 == 6);

  // eta out of range
  auto [l2, c2] = error_pos("modes 2\nloss 1 1.3\n");
  CHECK(l2 == 2);
  CHECK(c2 == 8);

  // r out of range
  CHECK(error_pos("modes 2\nbs 0 1 1.5\n") == std::pair<int, int>{2, 8});

  // modes line must come first / exist / be unique
  CHECK(error_pos("bs 0 1 0.5\n") == std::pair<int, int>{1, 1});
  CHECK(error_pos("") == std::pair<int, int>{1, 1});
  CHECK(error_pos("# only a comment\n \n") == std::pair<int, int>{1, 1});
  CHECK(error_pos("modes 2\nmodes 3\n") == std::pair<int, int>{2, 1});
  CHECK(error_pos("modes 0\n") == std::pair<int, int>{1, 7});

  // inputs precede elements
  CHECK(error_pos("modes 2\npm 0 1.0\ninput 1 coherent 1\n") ==
        std::pair<int, int>{3, 1});
  // duplicate input mode
  CHECK(error_pos("modes 2\ninput 0 coherent 1\ninput 0 cat 2 plus\n") ==
        std::pair<int, int>{3, 7});

  // mode range
  CHECK(error_pos("modes 2\npm 2 0.5\n") == std::pair<int, int>{2, 4});
  CHECK(error_pos("modes 2\npm -1 0.5\n") == std::pair<int, int>{2, 4});

  // junk numbers and trailing tokens
  CHECK(error_pos("modes 2\nbs 0 1 0.5x\n") == std::pair<int, int>{2, 8});
  CHECK(error_pos("modes 2\npm 0 0.5 extra\n") == std::pair<int, int>{2, 10});
  CHECK(error_pos("modes 2\npm 0 -pi\n") == std::pair<int, int>{2, 6});
  // missing argument reports a column past the line end
  CHECK(error_pos("modes 2\npm 0\n") == std::pair<int, int>{2, 5});

  // unknown keyword
  CHECK(error_pos("modes 2\nsqueeze 0 1\n") == std::pair<int, int>{2, 1});
  // unknown input kind and bad cat sign
  CHECK(error_pos("modes 2\ninput 0 thermal 1\n") == std::pair<int, int>{2, 9});
  CHECK(error_pos("modes 2\ninput 0 cat 2 even\n") == std::pair<int, int>{2, 15});
  // bad loss placement
  CHECK(error_pos("modes 2\nloss 0 0.5 middle\n") == std::pair<int, int>{2, 12});
}

TEST_CASE("detector bookkeeping is validated") {
  // duplicate id
  CHECK(error_pos("modes 2\ndetect 0 D\ndetect 1 D\n") == std::pair<int, int>{3, 10});
  // onclick must reference an earlier detector
  CHECK(error_pos("modes 2\nonclick D click pm 0 pi\n") == std::pair<int, int>{2, 9});
  // symbol must match the detector kind
  CHECK(error_pos("modes 2\nherald 0 D\nonclick D plus pm 1 pi\n") ==
        std::pair<int, int>{3, 11});
  CHECK(error_pos("modes 2\nhomodyne 0 H\nonclick H click pm 1 pi\n") ==
        std::pair<int, int>{3, 11});
  // fail_when takes two distinct on/off detectors
  CHECK(error_pos("modes 3\nhomodyne 0 H\ndetect 1 D\nfail_when H click and D click\n") ==
        std::pair<int, int>{4, 11});
  CHECK(error_pos("modes 3\ndetect 0 A\ndetect 1 B\nfail_when A click and A click\n") ==
        std::pair<int, int>{4, 23});
  CHECK(error_pos("modes 3\ndetect 0 A\ndetect 1 B\nfail_when A click or B click\n") ==
        std::pair<int, int>{4, 19});

  // a measured mode is dead to later instructions
  CHECK(error_pos("modes 2\ndetect 0 D\npm 0 1.0\n") == std::pair<int, int>{3, 4});
  CHECK(error_pos("modes 2\ndetect 0 D\nbs 0 1 0.5\n") == std::pair<int, int>{3, 4});
  CHECK(error_pos("modes 2\ndetect 0 D\nonclick D click pm 0 pi\n") ==
        std::pair<int, int>{3, 20});
  CHECK(error_pos("modes 2\ndetect 0 D\ndetect 0 E\n") == std::pair<int, int>{3, 8});
}

TEST_CASE("what() carries the position and DslError fields agree") {
  try {
    dsl::parse_circuit("modes 2\nbs 0 0 0.5\n");
    REQUIRE(false);
  } catch (const DslError& e) {
    CHECK(e.line == 2);
    CHECK(e.col == 6);
    CHECK(std::string(e.what()).find("line 2, col 6:") != std::string::npos);
    CHECK(std::string(e.what()).find("identical modes") != std::string::npos);
  }
}

TEST_CASE("format is canonical and round-trips the corpus") {
  for (const char* name :
       {"fig2_ghz.qc", "fig3_tripartite.qc", "fig4_xor.qc", "fig5_lossy.qc"}) {
    std::string text = read_circuit_file(name);
    Circuit once = dsl::parse_circuit(text);
    std::string canon = dsl::format_circuit(once);
    Circuit twice = dsl::parse_circuit(canon);
    CHECK(dsl::circuit_equal(once, twice));
    CHECK(dsl::format_circuit(twice) == canon);
  }

  Circuit c = dsl::parse_circuit(
      "modes 3\n"
      "input 0 coherent 1.25 0\n"   // explicit zero imag part drops out
      "input 1 coherent 0.5 -0.5\n"
      "loss 2 0.75\n"               // default placement becomes explicit
      "pm 0 3.14159265358979\n"     // within 1e-12 of pi prints as pi
      "bs 0 1 0.25\n");
  CHECK(dsl::format_circuit(c) ==
        "modes 3\n"
        "input 0 coherent 1.25\n"
        "input 1 coherent 0.5 -0.5\n"
        "loss 2 0.75 input\n"
        "pm 0 pi\n"
        "bs 0 1 0.2500000\n");
}

TEST_CASE("round-trip on 50 generated circuits") {
  std::mt19937 rng(20260816);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto r7 = [&]() { return std::round(u01(rng) * 1e7) / 1e7; };
  auto r9 = [&](double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return std::round(d(rng) * 1e9) / 1e9;
  };
  auto pick = [&](int n) {
    std::uniform_int_distribution<int> d(0, n - 1);
    return d(rng);
  };

  for (int trial = 0; trial < 50; ++trial) {
    Circuit c;
    c.mode_count = 2 + pick(5);
    for (int m = 0; m < c.mode_count; ++m) {
      if (u01(rng) < 0.4) continue;
      dsl::InputDecl in;
      in.mode = m;
      if (u01(rng) < 0.5) {
        in.kind = InputKind::Coherent;
        double im = u01(rng) < 0.5 ? 0.0 : r9(-3.0, 3.0);
        in.amplitude = core::cplx(r9(-3.0, 3.0), im);
      } else {
        in.kind = InputKind::Cat;
        in.alpha = r9(0.3, 3.0);
        in.sign = u01(rng) < 0.5 ? 1 : -1;
      }
      c.inputs.push_back(in);
    }

    std::vector<int> live;
    for (int m = 0; m < c.mode_count; ++m) live.push_back(m);
    std::vector<std::pair<std::string, InstrKind>> dets;
    int det_counter = 0;
    int n_ops = pick(11);
    for (int k = 0; k < n_ops; ++k) {
      dsl::Instruction ins;
      int op = pick(8);
      if (op == 0 && live.size() >= 2) {
        ins.kind = InstrKind::Bs;
        int ia = pick(int(live.size()));
        int ib = pick(int(live.size() - 1));
        if (ib >= ia) ++ib;
        ins.mode_a = live[std::size_t(ia)];
        ins.mode_b = live[std::size_t(ib)];
        ins.value = r7();
      } else if (op == 1 && !live.empty()) {
        ins.kind = InstrKind::Pm;
        ins.mode_a = live[std::size_t(pick(int(live.size())))];
        ins.value = u01(rng) < 0.3 ? std::numbers::pi : r9(0.0, 6.0);
      } else if (op == 2 && !live.empty()) {
        ins.kind = InstrKind::Loss;
        ins.mode_a = live[std::size_t(pick(int(live.size())))];
        ins.value = r9(0.0, 1.0);
        ins.placement =
            u01(rng) < 0.5 ? optics::Placement::Input : optics::Placement::Output;
      } else if (op <= 5 && !live.empty()) {
        ins.kind = op == 3   ? InstrKind::Detect
                   : op == 4 ? InstrKind::Herald
                             : InstrKind::Homodyne;
        int im = pick(int(live.size()));
        ins.mode_a = live[std::size_t(im)];
        live.erase(live.begin() + im);
        ins.id = "d" + std::to_string(det_counter++);
        dets.emplace_back(ins.id, ins.kind);
      } else if (op == 6 && !dets.empty() && !live.empty()) {
        ins.kind = InstrKind::OnClick;
        const auto& [id, kind] = dets[std::size_t(pick(int(dets.size())))];
        ins.id = id;
        if (kind == InstrKind::Homodyne)
          ins.symbol = u01(rng) < 0.5 ? "plus" : "minus";
        else
          ins.symbol = u01(rng) < 0.5 ? "vac" : "click";
        ins.mode_a = live[std::size_t(pick(int(live.size())))];
        ins.value = u01(rng) < 0.3 ? std::numbers::pi : r9(0.0, 6.0);
      } else if (op == 7) {
        std::vector<std::string> clicky;
        for (const auto& [id, kind] : dets)
          if (kind != InstrKind::Homodyne) clicky.push_back(id);
        if (clicky.size() < 2) continue;
        ins.kind = InstrKind::FailWhen;
        int ia = pick(int(clicky.size()));
        int ib = pick(int(clicky.size() - 1));
        if (ib >= ia) ++ib;
        ins.id = clicky[std::size_t(ia)];
        ins.id_b = clicky[std::size_t(ib)];
      } else {
        continue;
      }
      c.elements.push_back(ins);
    }

    std::string text = dsl::format_circuit(c);
    Circuit parsed = dsl::parse_circuit(text);
    CHECK(dsl::circuit_equal(parsed, c));
    CHECK(dsl::format_circuit(parsed) == text);
  }
}

TEST_CASE("executor matches direct engine calls") {
  Circuit c = dsl::parse_circuit(
      "modes 2\n"
      "input 0 cat 1.5 plus\n"
      "input 1 coherent 0.5\n"
      "bs 0 1 0.7071068\n"
      "detect 0 Da\n");
  dsl::RunReport r = dsl::run_circuit(c);

  auto s = optics::tensor(optics::cat_state(1.5, 1), optics::coherent_state(0.5));
  s = optics::beam_splitter(s, optics::bs_from_reflectivity(0, 1, 0.7071068));
  auto [vac, click] = measure::detect_onoff(s, 0);

  REQUIRE(r.branches.size() == 2);
  CHECK(r.branches[0].outcomes ==
        std::vector<std::pair<std::string, std::string>>{{"Da", "vac"}});
  CHECK(r.branches[0].probability == doctest::Approx(vac.probability).epsilon(1e-12));
  CHECK(r.branches[1].probability == doctest::Approx(click.probability).epsilon(1e-12));
  CHECK(core::terms_match(r.branches[0].state, vac.post, 1e-12));
  CHECK(core::terms_match(r.branches[1].state, click.post, 1e-12));
  CHECK(r.p_success == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("output-placement loss defers past later unitaries") {
  Circuit c = dsl::parse_circuit(
      "modes 1\n"
      "input 0 coherent 1\n"
      "loss 0 0.8 output\n"
      "pm 0 pi\n"
      "detect 0 D\n");
  dsl::RunReport r = dsl::run_circuit(c);

  // phase flip happens first, the loss tap sees the flipped amplitude
  auto s = optics::coherent_state(1.0);
  s = optics::phase_modulator(s, 0, std::numbers::pi);
  s = optics::loss_channel(s, {0, 0.8, optics::Placement::Output});
  auto [vac, click] = measure::detect_onoff(s, 0);

  REQUIRE(r.branches.size() == 2);
  CHECK(core::terms_match(r.branches[0].state, vac.post, 1e-12));
  CHECK(r.branches[0].probability == doctest::Approx(vac.probability).epsilon(1e-12));

  // same circuit with input placement taps the un-flipped amplitude instead
  Circuit ci = dsl::parse_circuit(
      "modes 1\n"
      "input 0 coherent 1\n"
      "loss 0 0.8 input\n"
      "pm 0 pi\n"
      "detect 0 D\n");
  dsl::RunReport ri = dsl::run_circuit(ci);
  double env_out = r.branches[1].state.terms[0].amps[1].real();
  double env_in = ri.branches[1].state.terms[0].amps[1].real();
  CHECK(env_out == doctest::Approx(-std::sqrt(0.2)).epsilon(1e-12));
  CHECK(env_in == doctest::Approx(std::sqrt(0.2)).epsilon(1e-12));
}

TEST_CASE("no measurement gives one certain branch") {
  Circuit c = dsl::parse_circuit("modes 2\ninput 0 coherent 1\nbs 0 1 0.5\n");
  dsl::RunReport r = dsl::run_circuit(c);
  REQUIRE(r.branches.size() == 1);
  CHECK(r.branches[0].probability == 1.0);
  CHECK(r.branches[0].outcomes.empty());
  CHECK(!r.branches[0].failed);
  CHECK(r.p_success == 1.0);
}

TEST_CASE("three-rail entangler: full amplitude balance and scaling") {
  Circuit c = dsl::parse_circuit(read_circuit_file("fig2_ghz.qc"));
  dsl::RunReport r = dsl::run_circuit(c);
  REQUIRE(r.branches.size() == 1);
  CHECK(r.p_success == 1.0);

  auto target = ket_sum({{-2.0, -2.0, -2.0}, {2.0, 2.0, 2.0}});
  CHECK(core::fidelity(core::dyad(r.branches[0].state), target) >=
        doctest::Approx(1.0 - 1e-9));

  // alpha_scale rescales every declared amplitude
  dsl::RunReport rh = dsl::run_circuit(c, 0.5);
  auto target_h = ket_sum({{-1.0, -1.0, -1.0}, {1.0, 1.0, 1.0}});
  CHECK(core::fidelity(core::dyad(rh.branches[0].state), target_h) >=
        doctest::Approx(1.0 - 1e-9));
}

TEST_CASE("tripartite generator circuit: branch structure and resource state") {
  Circuit c = dsl::parse_circuit(read_circuit_file("fig3_tripartite.qc"));
  dsl::RunReport r = dsl::run_circuit(c);

  REQUIRE(r.branches.size() == 3);
  double total = 0.0;
  for (const auto& b : r.branches) total += b.probability;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.p_success == doctest::Approx(0.5).epsilon(1e-3));

  const auto& plus = branch_with(r, {{"D1", "vac"}, {"D2", "click"}});
  const auto& minus = branch_with(r, {{"D1", "click"}, {"D2", "vac"}});
  const auto& fail = branch_with(r, {{"D1", "click"}, {"D2", "click"}});
  CHECK(plus.probability == doctest::Approx(0.25).epsilon(1e-3));
  CHECK(minus.probability == doctest::Approx(0.25).epsilon(1e-3));
  CHECK(fail.probability == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(fail.failed);
  CHECK(!plus.failed);

  // rails 1..3 carry the four odd-sign patterns; readout ports collapse to
  // (0, sqrt8) on the D2-click branch and (-sqrt8, 0) on the D1-click branch
  const double a = 2.0, q = std::sqrt(8.0);
  auto res = [&](double s1, double s2, double s3, double p0, double p4) {
    return core::CoherentLabel{p0, s1 * a, s2 * a, s3 * a, p4};
  };
  auto plus_target = ket_sum({res(1, 1, -1, 0, q), res(-1, 1, 1, 0, q),
                              res(1, -1, 1, 0, q), res(-1, -1, -1, 0, q)});
  CHECK(core::fidelity(core::dyad(plus.state), plus_target) >=
        doctest::Approx(1.0 - 1e-6));
  // after the conditional sign flip on rail 2 both heralds leave the same rails
  auto minus_target = ket_sum({res(1, 1, -1, -q, 0), res(-1, 1, 1, -q, 0),
                               res(1, -1, 1, -q, 0), res(-1, -1, -1, -q, 0)});
  CHECK(core::fidelity(core::dyad(minus.state), minus_target) >=
        doctest::Approx(1.0 - 1e-6));

  CHECK(plus.max_raw_deficit < 1e-3);
}

TEST_CASE("xor circuit: parity holds on every success branch") {
  std::string text = read_circuit_file("fig4_xor.qc");

  auto run_bits = [&](int kbit, int rbit) {
    std::string t = text;
    if (kbit) {
      auto p = t.find("input 5 coherent -2");
      REQUIRE(p != std::string::npos);
      t = t.replace(p, 19, "input 5 coherent 2");
    }
    if (rbit) {
      auto p = t.find("input 6 coherent -2");
      REQUIRE(p != std::string::npos);
      t = t.replace(p, 19, "input 6 coherent 2");
    }
    dsl::RunReport r = dsl::run_circuit(dsl::parse_circuit(t));
    CHECK(r.p_success == doctest::Approx(0.5).epsilon(1e-3));
    int n_success = 0;
    for (const auto& b : r.branches) {
      if (b.failed) continue;
      ++n_success;
      int A = -1, B = -1, C = -1;
      for (const auto& [id, sym] : b.outcomes) {
        if (id == "M1") A = sym == "click";
        if (id == "M2") B = sym == "click";
        if (id == "C") C = sym == "plus";
      }
      REQUIRE(A >= 0);
      REQUIRE(B >= 0);
      REQUIRE(C >= 0);
      CHECK((A ^ B ^ C) == (kbit ^ rbit));
      CHECK(b.probability == doctest::Approx(1.0 / 16.0).epsilon(1e-3));
    }
    CHECK(n_success == 8);
  };

  run_bits(0, 0);
  run_bits(1, 0);
  run_bits(0, 1);
  run_bits(1, 1);
}

TEST_CASE("lossy generator circuit runs with environment modes") {
  Circuit c = dsl::parse_circuit(read_circuit_file("fig5_lossy.qc"));
  dsl::RunReport r = dsl::run_circuit(c);
  REQUIRE(r.branches.size() == 3);
  double total = 0.0;
  for (const auto& b : r.branches) total += b.probability;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  // heralding statistics barely move under loss; the damage lands in the state
  CHECK(r.p_success == doctest::Approx(0.5).epsilon(5e-3));
  // four loss taps appended four environment modes
  for (const auto& b : r.branches)
    CHECK(b.state.terms[0].amps.size() == 9);
}

TEST_CASE("execution failures raise ExecError") {
  // homodyne cannot classify a zero-real amplitude
  Circuit amb = dsl::parse_circuit(
      "modes 1\ninput 0 coherent 0 1\nhomodyne 0 H\n");
  CHECK_THROWS_AS(dsl::run_circuit(amb), dsl::ExecError);
  try {
    dsl::run_circuit(amb);
  } catch (const dsl::ExecError& e) {
    CHECK(std::string(e.what()).find("H") != std::string::npos);
  }

  // seven cat rails want 128 superposition terms
  std::ostringstream big;
  big << "modes 7\n";
  for (int m = 0; m < 7; ++m) big << "input " << m << " cat 1 plus\n";
  CHECK_THROWS_AS(dsl::run_circuit(dsl::parse_circuit(big.str())), dsl::ExecError);
}

TEST_CASE("report json shape, ordering, and rounding") {
  Circuit c = dsl::parse_circuit("modes 1\ninput 0 coherent 2\ndetect 0 D\n");
  std::string text = dsl::report_json(dsl::run_circuit(c));

  auto j = nlohmann::json::parse(text);
  REQUIRE(j["branches"].size() == 2);
  CHECK(j["branches"][0]["outcomes"]["D"] == "vac");
  CHECK(j["branches"][1]["outcomes"]["D"] == "click");
  CHECK(j["branches"][0]["prob"].get<double>() ==
        doctest::Approx(kExpM4).epsilon(1e-10));
  CHECK(j["branches"][1]["prob"].get<double>() ==
        doctest::Approx(1.0 - kExpM4).epsilon(1e-10));
  CHECK(j["branches"][0]["failed"] == false);
  CHECK(j["p_success"].get<double>() == 1.0);

  // insertion order is part of the format
  CHECK(text.find("\"branches\"") < text.find("\"p_success\""));
  CHECK(text.find("\"outcomes\"") < text.find("\"prob\""));
  CHECK(text.find("\"prob\"") < text.find("\"failed\""));

  // probabilities are rounded to 12 significant digits
  CHECK(text.find("0.0183156388887") != std::string::npos);
}

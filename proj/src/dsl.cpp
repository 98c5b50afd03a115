#include "csq/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"

#include "csq/measure.hpp"

namespace csq::dsl {

DslError::DslError(int line_, int col_, const std::string& message)
    : std::runtime_error("line " + std::to_string(line_) + ", col " +
                         std::to_string(col_) + ": " + message),
      line(line_),
      col(col_) {}

namespace {

constexpr double kDropTol = 1e-14;
constexpr std::size_t kTermCap = 64;

struct Tok {
  std::string text;
  int col;  // 1-based
};

std::vector<Tok> tokenize(const std::string& line) {
  std::vector<Tok> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
      continue;
    }
    if (line[i] == '#') break;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j])) &&
           line[j] != '#')
      ++j;
    out.push_back({line.substr(i, j - i), int(i) + 1});
    i = j;
  }
  return out;
}

struct Parser {
  Circuit c;
  bool have_modes = false;
  bool elements_started = false;
  std::map<std::string, InstrKind> detectors;
  std::set<int> input_modes;
  std::set<int> measured;
  int line = 0;

  [[noreturn]] void fail(int col, const std::string& msg) const {
    throw DslError(line, col, msg);
  }

  const Tok& need(const std::vector<Tok>& t, std::size_t i, const char* what) const {
    if (i >= t.size())
      fail(t.back().col + int(t.back().text.size()), std::string("missing ") + what);
    return t[i];
  }

  void no_extra(const std::vector<Tok>& t, std::size_t max_count) const {
    if (t.size() > max_count)
      fail(t[max_count].col, "unexpected trailing token '" + t[max_count].text + "'");
  }

  int parse_int(const Tok& t, const char* what) const {
    int v = 0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || p != t.text.data() + t.text.size())
      fail(t.col, std::string("expected integer ") + what + ", got '" + t.text + "'");
    return v;
  }

  double parse_real(const Tok& t, const char* what) const {
    double v = 0.0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || p != t.text.data() + t.text.size())
      fail(t.col, std::string("expected number ") + what + ", got '" + t.text + "'");
    return v;
  }

  double parse_theta(const Tok& t) const {
    if (t.text == "pi") return std::numbers::pi;
    return parse_real(t, "theta");
  }

  // live = not yet consumed by a measurement
  int mode_arg(const std::vector<Tok>& t, std::size_t i) const {
    const Tok& tok = need(t, i, "mode");
    int m = parse_int(tok, "mode");
    if (m < 0 || m >= c.mode_count)
      fail(tok.col, "mode " + std::to_string(m) + " out of range (modes " +
                        std::to_string(c.mode_count) + ")");
    if (measured.count(m))
      fail(tok.col, "mode " + std::to_string(m) + " was already measured");
    return m;
  }

  void handle_modes(const std::vector<Tok>& t) {
    if (have_modes) fail(t[0].col, "duplicate modes line");
    int n = parse_int(need(t, 1, "mode count"), "mode count");
    if (n < 1) fail(t[1].col, "mode count must be positive");
    no_extra(t, 2);
    c.mode_count = n;
    have_modes = true;
  }

  void handle_input(const std::vector<Tok>& t) {
    if (elements_started) fail(t[0].col, "inputs must precede circuit elements");
    InputDecl in;
    in.mode = mode_arg(t, 1);
    if (input_modes.count(in.mode))
      fail(t[1].col, "mode " + std::to_string(in.mode) + " already has an input");
    const Tok& kind = need(t, 2, "input kind");
    if (kind.text == "coherent") {
      double re = parse_real(need(t, 3, "amplitude"), "amplitude");
      double im = t.size() > 4 ? parse_real(t[4], "amplitude") : 0.0;
      no_extra(t, 5);
      in.kind = InputKind::Coherent;
      in.amplitude = core::cplx(re, im);
    } else if (kind.text == "cat") {
      in.kind = InputKind::Cat;
      in.alpha = parse_real(need(t, 3, "alpha"), "alpha");
      const Tok& sign = need(t, 4, "plus|minus");
      if (sign.text == "plus")
        in.sign = 1;
      else if (sign.text == "minus")
        in.sign = -1;
      else
        fail(sign.col, "expected plus or minus, got '" + sign.text + "'");
      no_extra(t, 5);
    } else {
      fail(kind.col, "unknown input kind '" + kind.text + "'");
    }
    input_modes.insert(in.mode);
    c.inputs.push_back(in);
  }

  void handle_bs(const std::vector<Tok>& t) {
    Instruction ins;
    ins.kind = InstrKind::Bs;
    ins.mode_a = mode_arg(t, 1);
    ins.mode_b = mode_arg(t, 2);
    if (ins.mode_a == ins.mode_b) fail(t[2].col, "identical modes");
    ins.value = parse_real(need(t, 3, "reflectivity"), "reflectivity");
    if (ins.value < 0.0 || ins.value > 1.0) fail(t[3].col, "r outside [0,1]");
    no_extra(t, 4);
    c.elements.push_back(ins);
  }

  void handle_pm(const std::vector<Tok>& t) {
    Instruction ins;
    ins.kind = InstrKind::Pm;
    ins.mode_a = mode_arg(t, 1);
    ins.value = parse_theta(need(t, 2, "theta"));
    no_extra(t, 3);
    c.elements.push_back(ins);
  }

  void handle_loss(const std::vector<Tok>& t) {
    Instruction ins;
    ins.kind = InstrKind::Loss;
    ins.mode_a = mode_arg(t, 1);
    ins.value = parse_real(need(t, 2, "eta"), "eta");
    if (ins.value < 0.0 || ins.value > 1.0) fail(t[2].col, "eta outside [0,1]");
    if (t.size() > 3) {
      if (t[3].text == "input")
        ins.placement = optics::Placement::Input;
      else if (t[3].text == "output")
        ins.placement = optics::Placement::Output;
      else
        fail(t[3].col, "expected input or output, got '" + t[3].text + "'");
    }
    no_extra(t, 4);
    c.elements.push_back(ins);
  }

  void handle_measurement(const std::vector<Tok>& t, InstrKind kind) {
    Instruction ins;
    ins.kind = kind;
    ins.mode_a = mode_arg(t, 1);
    const Tok& id = need(t, 2, "detector id");
    if (detectors.count(id.text)) fail(id.col, "duplicate detector id '" + id.text + "'");
    no_extra(t, 3);
    ins.id = id.text;
    detectors[id.text] = kind;
    measured.insert(ins.mode_a);
    c.elements.push_back(ins);
  }

  InstrKind detector_kind(const Tok& id) const {
    auto it = detectors.find(id.text);
    if (it == detectors.end()) fail(id.col, "unknown detector '" + id.text + "'");
    return it->second;
  }

  void check_symbol(const Tok& sym, InstrKind kind) const {
    bool ok = (kind == InstrKind::Homodyne)
                  ? (sym.text == "plus" || sym.text == "minus")
                  : (sym.text == "vac" || sym.text == "click");
    if (!ok)
      fail(sym.col, "symbol '" + sym.text + "' does not match the detector kind");
  }

  void handle_onclick(const std::vector<Tok>& t) {
    Instruction ins;
    ins.kind = InstrKind::OnClick;
    const Tok& id = need(t, 1, "detector id");
    InstrKind kind = detector_kind(id);
    const Tok& sym = need(t, 2, "outcome symbol");
    check_symbol(sym, kind);
    const Tok& pm = need(t, 3, "'pm'");
    if (pm.text != "pm") fail(pm.col, "expected 'pm', got '" + pm.text + "'");
    ins.mode_a = mode_arg(t, 4);
    ins.value = parse_theta(need(t, 5, "theta"));
    no_extra(t, 6);
    ins.id = id.text;
    ins.symbol = sym.text;
    c.elements.push_back(ins);
  }

  void handle_fail_when(const std::vector<Tok>& t) {
    Instruction ins;
    ins.kind = InstrKind::FailWhen;
    const Tok& id1 = need(t, 1, "detector id");
    if (detector_kind(id1) == InstrKind::Homodyne)
      fail(id1.col, "fail_when requires an on/off detector");
    const Tok& click1 = need(t, 2, "'click'");
    if (click1.text != "click") fail(click1.col, "expected 'click'");
    const Tok& conj = need(t, 3, "'and'");
    if (conj.text != "and") fail(conj.col, "expected 'and'");
    const Tok& id2 = need(t, 4, "detector id");
    if (detector_kind(id2) == InstrKind::Homodyne)
      fail(id2.col, "fail_when requires an on/off detector");
    if (id2.text == id1.text) fail(id2.col, "fail_when needs two distinct detectors");
    const Tok& click2 = need(t, 5, "'click'");
    if (click2.text != "click") fail(click2.col, "expected 'click'");
    no_extra(t, 6);
    ins.id = id1.text;
    ins.id_b = id2.text;
    c.elements.push_back(ins);
  }

  Circuit run(const std::string& text) {
    std::istringstream stream(text);
    std::string raw;
    while (std::getline(stream, raw)) {
      ++line;
      std::vector<Tok> t = tokenize(raw);
      if (t.empty()) continue;
      const std::string& kw = t[0].text;
      if (kw == "modes") {
        handle_modes(t);
        continue;
      }
      if (!have_modes) fail(t[0].col, "the modes line must come first");
      if (kw == "input") {
        handle_input(t);
        continue;
      }
      elements_started = true;
      if (kw == "bs")
        handle_bs(t);
      else if (kw == "pm")
        handle_pm(t);
      else if (kw == "loss")
        handle_loss(t);
      else if (kw == "detect")
        handle_measurement(t, InstrKind::Detect);
      else if (kw == "herald")
        handle_measurement(t, InstrKind::Herald);
      else if (kw == "homodyne")
        handle_measurement(t, InstrKind::Homodyne);
      else if (kw == "onclick")
        handle_onclick(t);
      else if (kw == "fail_when")
        handle_fail_when(t);
      else
        fail(t[0].col, "unknown keyword '" + kw + "'");
    }
    if (!have_modes) throw DslError(1, 1, "missing modes line");
    return std::move(c);
  }
};

std::string fmt_g12(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.12g", v);
  return b;
}

std::string fmt_r(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.7f", v);
  return b;
}

std::string fmt_theta(double v) {
  if (std::abs(v - std::numbers::pi) < 1e-12) return "pi";
  return fmt_g12(v);
}

double round12(double x) {
  char b[40];
  std::snprintf(b, sizeof b, "%.12g", x);
  return std::strtod(b, nullptr);
}

}  // namespace

Circuit parse_circuit(const std::string& text) { return Parser{}.run(text); }

std::string format_circuit(const Circuit& c) {
  std::ostringstream out;
  out << "modes " << c.mode_count << "\n";
  for (const auto& in : c.inputs) {
    out << "input " << in.mode;
    if (in.kind == InputKind::Coherent) {
      out << " coherent " << fmt_g12(in.amplitude.real());
      if (in.amplitude.imag() != 0.0) out << ' ' << fmt_g12(in.amplitude.imag());
    } else {
      out << " cat " << fmt_g12(in.alpha) << ' ' << (in.sign > 0 ? "plus" : "minus");
    }
    out << "\n";
  }
  for (const auto& e : c.elements) {
    switch (e.kind) {
      case InstrKind::Bs:
        out << "bs " << e.mode_a << ' ' << e.mode_b << ' ' << fmt_r(e.value);
        break;
      case InstrKind::Pm:
        out << "pm " << e.mode_a << ' ' << fmt_theta(e.value);
        break;
      case InstrKind::Loss:
        out << "loss " << e.mode_a << ' ' << fmt_g12(e.value) << ' '
            << (e.placement == optics::Placement::Input ? "input" : "output");
        break;
      case InstrKind::Detect:
        out << "detect " << e.mode_a << ' ' << e.id;
        break;
      case InstrKind::Herald:
        out << "herald " << e.mode_a << ' ' << e.id;
        break;
      case InstrKind::Homodyne:
        out << "homodyne " << e.mode_a << ' ' << e.id;
        break;
      case InstrKind::OnClick:
        out << "onclick " << e.id << ' ' << e.symbol << " pm " << e.mode_a << ' '
            << fmt_theta(e.value);
        break;
      case InstrKind::FailWhen:
        out << "fail_when " << e.id << " click and " << e.id_b << " click";
        break;
    }
    out << "\n";
  }
  return out.str();
}

bool circuit_equal(const Circuit& a, const Circuit& b) {
  if (a.mode_count != b.mode_count) return false;
  if (a.inputs.size() != b.inputs.size() || a.elements.size() != b.elements.size())
    return false;
  for (std::size_t i = 0; i < a.inputs.size(); ++i) {
    const auto& x = a.inputs[i];
    const auto& y = b.inputs[i];
    if (x.mode != y.mode || x.kind != y.kind || x.amplitude != y.amplitude ||
        x.alpha != y.alpha || x.sign != y.sign)
      return false;
  }
  for (std::size_t i = 0; i < a.elements.size(); ++i) {
    const auto& x = a.elements[i];
    const auto& y = b.elements[i];
    if (x.kind != y.kind || x.mode_a != y.mode_a || x.mode_b != y.mode_b ||
        x.value != y.value || x.placement != y.placement || x.id != y.id ||
        x.id_b != y.id_b || x.symbol != y.symbol)
      return false;
  }
  return true;
}

namespace {

struct LiveBranch {
  core::KetSuperposition state;
  double prob = 1.0;
  std::vector<std::pair<std::string, std::string>> outcomes;
  bool failed = false;
  double max_raw_deficit = 0.0;
};

std::string branch_path(const LiveBranch& b) {
  if (b.outcomes.empty()) return "(root)";
  std::string s;
  for (const auto& [id, sym] : b.outcomes) {
    if (!s.empty()) s += ',';
    s += id + "=" + sym;
  }
  return s;
}

const std::string* outcome_of(const LiveBranch& b, const std::string& id) {
  for (const auto& [oid, sym] : b.outcomes)
    if (oid == id) return &sym;
  return nullptr;
}

void check_cap(const LiveBranch& b) {
  if (b.state.terms.size() > kTermCap)
    throw ExecError("branch " + branch_path(b) + " exceeded " +
                    std::to_string(kTermCap) + " superposition terms");
}

}  // namespace

RunReport run_circuit(const Circuit& c, double alpha_scale) {
  if (c.mode_count < 1) throw ExecError("run_circuit: circuit has no modes");

  std::vector<const InputDecl*> by_mode(std::size_t(c.mode_count), nullptr);
  for (const auto& in : c.inputs) by_mode[std::size_t(in.mode)] = &in;

  core::KetSuperposition init;
  for (int m = 0; m < c.mode_count; ++m) {
    const InputDecl* in = by_mode[std::size_t(m)];
    core::KetSuperposition one;
    if (!in)
      one = optics::coherent_state(0.0);
    else if (in->kind == InputKind::Coherent)
      one = optics::coherent_state(in->amplitude * alpha_scale);
    else
      one = optics::cat_state(in->alpha * alpha_scale, in->sign);
    init = (m == 0) ? one : optics::tensor(init, one);
  }

  std::vector<LiveBranch> live;
  live.push_back({std::move(init), 1.0, {}, false, 0.0});
  check_cap(live.front());

  // output-placement losses wait here until the next measurement (or the end)
  std::vector<const Instruction*> pending_loss;
  auto flush_pending = [&]() {
    for (const Instruction* ins : pending_loss)
      for (auto& b : live)
        if (!b.failed)
          b.state = optics::loss_channel(
              b.state, {ins->mode_a, ins->value, optics::Placement::Output});
    pending_loss.clear();
  };

  auto measure_step = [&](const Instruction& ins) {
    flush_pending();
    std::vector<LiveBranch> next;
    next.reserve(live.size() * 2);
    for (auto& b : live) {
      if (b.failed) {
        next.push_back(std::move(b));
        continue;
      }
      std::pair<measure::BranchOutcome, measure::BranchOutcome> split;
      try {
        if (ins.kind == InstrKind::Detect)
          split = measure::detect_onoff(b.state, ins.mode_a);
        else if (ins.kind == InstrKind::Herald)
          split = measure::discriminate_presence(b.state, ins.mode_a);
        else
          split = measure::homodyne_sign(b.state, ins.mode_a);
      } catch (const std::exception& e) {
        throw ExecError(std::string(e.what()) + " [detector " + ins.id + ", branch " +
                        branch_path(b) + "]");
      }
      for (measure::BranchOutcome* o : {&split.first, &split.second}) {
        double p = b.prob * o->probability;
        if (o->null_state || p <= kDropTol) continue;
        LiveBranch nb;
        nb.state = std::move(o->post);
        nb.prob = p;
        nb.outcomes = b.outcomes;
        nb.outcomes.emplace_back(ins.id, o->symbol);
        nb.max_raw_deficit = std::max(b.max_raw_deficit, o->raw_deficit);
        check_cap(nb);
        next.push_back(std::move(nb));
      }
    }
    live = std::move(next);
  };

  for (const auto& ins : c.elements) {
    switch (ins.kind) {
      case InstrKind::Bs: {
        const auto spec =
            optics::bs_from_reflectivity(ins.mode_a, ins.mode_b, ins.value);
        for (auto& b : live)
          if (!b.failed) b.state = optics::beam_splitter(b.state, spec);
        break;
      }
      case InstrKind::Pm:
        for (auto& b : live)
          if (!b.failed) b.state = optics::phase_modulator(b.state, ins.mode_a, ins.value);
        break;
      case InstrKind::Loss:
        if (ins.placement == optics::Placement::Output) {
          pending_loss.push_back(&ins);
        } else {
          for (auto& b : live)
            if (!b.failed)
              b.state = optics::loss_channel(
                  b.state, {ins.mode_a, ins.value, optics::Placement::Input});
        }
        break;
      case InstrKind::Detect:
      case InstrKind::Herald:
      case InstrKind::Homodyne:
        measure_step(ins);
        break;
      case InstrKind::OnClick:
        for (auto& b : live) {
          if (b.failed) continue;
          const std::string* sym = outcome_of(b, ins.id);
          if (sym && *sym == ins.symbol)
            b.state = optics::phase_modulator(b.state, ins.mode_a, ins.value);
        }
        break;
      case InstrKind::FailWhen:
        for (auto& b : live) {
          if (b.failed) continue;
          const std::string* s1 = outcome_of(b, ins.id);
          const std::string* s2 = outcome_of(b, ins.id_b);
          if (s1 && s2 && *s1 == "click" && *s2 == "click") b.failed = true;
        }
        break;
    }
    for (const auto& b : live) check_cap(b);
  }
  flush_pending();

  RunReport report;
  report.p_success = 0.0;
  report.branches.reserve(live.size());
  for (auto& b : live) {
    if (!b.failed) report.p_success += b.prob;
    report.branches.push_back(
        {std::move(b.state), b.prob, std::move(b.outcomes), b.failed, b.max_raw_deficit});
  }
  return report;
}

std::string report_json(const RunReport& r) {
  nlohmann::ordered_json doc;
  doc["branches"] = nlohmann::ordered_json::array();
  for (const auto& b : r.branches) {
    nlohmann::ordered_json jb;
    nlohmann::ordered_json outs = nlohmann::ordered_json::object();
    for (const auto& [id, sym] : b.outcomes) outs[id] = sym;
    jb["outcomes"] = std::move(outs);
    jb["prob"] = round12(b.probability);
    jb["failed"] = b.failed;
    doc["branches"].push_back(std::move(jb));
  }
  doc["p_success"] = round12(r.p_success);
  return doc.dump(2);
}

}  // namespace csq::dsl

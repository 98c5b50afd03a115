#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "csq/core.hpp"
#include "csq/optics.hpp"

namespace csq::dsl {

// Parse or validation failure, with 1-based source position.
struct DslError : std::runtime_error {
  int line;
  int col;
  DslError(int line_, int col_, const std::string& message);
};

// Runtime failure while executing a circuit: term blow-up, a measurement
// that cannot classify a branch, a degenerate state.
struct ExecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class InputKind { Coherent, Cat };

struct InputDecl {
  int mode = 0;
  InputKind kind = InputKind::Coherent;
  core::cplx amplitude = 0.0;  // Coherent
  double alpha = 0.0;          // Cat
  int sign = 1;                // Cat: +1 plus, -1 minus
};

enum class InstrKind { Bs, Pm, Loss, Detect, Herald, Homodyne, OnClick, FailWhen };

struct Instruction {
  InstrKind kind = InstrKind::Bs;
  int mode_a = 0;      // Bs first mode; Pm/Loss/measurement mode; OnClick pm target
  int mode_b = 0;      // Bs second mode
  double value = 0.0;  // Bs reflectivity | Pm theta | Loss eta | OnClick pm theta
  optics::Placement placement = optics::Placement::Input;  // Loss
  std::string id;      // measurement id | OnClick condition id | FailWhen first id
  std::string id_b;    // FailWhen second id
  std::string symbol;  // OnClick condition symbol
};

struct Circuit {
  int mode_count = 0;
  std::vector<InputDecl> inputs;
  std::vector<Instruction> elements;
};

// Line-oriented grammar, one instruction per line, '#' starts a comment:
//   modes <n>
//   input <mode> coherent <re> [<im>]
//   input <mode> cat <alpha> <plus|minus>
//   bs <mode_a> <mode_b> <r>            amplitude reflectivity; mix angle asin(r)
//   pm <mode> <theta|pi>
//   loss <mode> <eta> [input|output]    output losses defer to the first measurement
//   detect <mode> <id>                  on/off detector, exact projector statistics
//   herald <mode> <id>                  ideal presence discrimination by term partition
//   homodyne <mode> <id>
//   onclick <id> <symbol> pm <mode> <theta|pi>
//   fail_when <id> click and <id> click
// The modes line comes first, inputs precede elements, detector ids are
// unique, conditions reference earlier detectors with a compatible symbol,
// and a measured mode is dead to every later instruction.
Circuit parse_circuit(const std::string& text);

// Canonical text. Reflectivity prints with 7 decimals, theta as "pi" when
// within 1e-12 of it, other reals with up to 12 significant digits, loss
// placement always spelled out. parse(format(parse(t))) == parse(t).
std::string format_circuit(const Circuit& c);

bool circuit_equal(const Circuit& a, const Circuit& b);

struct BranchResult {
  core::KetSuperposition state;  // normalized post-state
  double probability = 1.0;
  // (detector id, symbol) in measurement order
  std::vector<std::pair<std::string, std::string>> outcomes;
  bool failed = false;
  double max_raw_deficit = 0.0;
};

struct RunReport {
  std::vector<BranchResult> branches;
  double p_success = 1.0;
};

// Full analytic branch evaluation, no sampling. alpha_scale multiplies every
// declared input amplitude (corpus files are written at a base amplitude).
// A branch matching fail_when freezes: no later instruction touches it.
// Branches of probability <= 1e-14 are dropped; a branch exceeding 64 terms
// raises ExecError.
RunReport run_circuit(const Circuit& c, double alpha_scale = 1.0);

// { "branches": [ { "outcomes": {...}, "prob": p, "failed": b } ],
//   "p_success": p }  with probabilities at 12 significant digits.
std::string report_json(const RunReport& r);

}  // namespace csq::dsl

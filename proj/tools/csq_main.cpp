#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "csq/dsl.hpp"
#include "csq/experiments.hpp"
#include "csq/fock.hpp"

namespace {

// circuit files in the corpus are written at base amplitude 2; --alpha
// rescales every input by alpha/2
constexpr double kBaseAmplitude = 2.0;

int write_or_print(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::fputs(text.c_str(), stdout);
    return 0;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) {
    std::fprintf(stderr, "error: cannot open output file '%s'\n", out_path.c_str());
    return 3;
  }
  f << text;
  return f.good() ? 0 : 3;
}

int cmd_run(const std::string& path, double alpha, const std::string& out_path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    std::fprintf(stderr, "error: cannot read circuit file '%s'\n", path.c_str());
    return 2;
  }
  std::ostringstream buf;
  buf << f.rdbuf();

  csq::dsl::Circuit circuit;
  try {
    circuit = csq::dsl::parse_circuit(buf.str());
  } catch (const csq::dsl::DslError& e) {
    std::fprintf(stderr, "%s: %s\n", path.c_str(), e.what());
    return 2;
  }
  csq::dsl::RunReport report =
      csq::dsl::run_circuit(circuit, alpha / kBaseAmplitude);
  return write_or_print(csq::dsl::report_json(report) + "\n", out_path);
}

int cmd_xor(int K, int R, double alpha) {
  auto run = csq::experiments::optical_xor_protocol(K, R, alpha);
  std::fputs((csq::experiments::xor_json(run) + "\n").c_str(), stdout);
  if (!run.consistent) {
    std::fprintf(stderr, "error: a branch violated A xor B xor C = K xor R\n");
    return 3;
  }
  return 0;
}

int cmd_sweep(double alpha, double start, double stop, double step,
              const std::string& out_path) {
  if (!(start > 0.0) || start > stop || stop > 1.0 || !(step > 0.0)) {
    std::fprintf(stderr,
                 "error: eta range must satisfy 0 < start <= stop <= 1 with "
                 "step > 0\n");
    return 64;
  }
  std::vector<double> grid;
  for (int i = 0;; ++i) {
    double v = start + i * step;
    v = std::round(v * 1e9) / 1e9;
    if (v > stop + 1e-9) break;
    grid.push_back(std::min(v, stop));
    if (grid.size() > 10000) {
      std::fprintf(stderr, "error: eta grid exceeds 10000 points\n");
      return 64;
    }
  }
  auto rows = csq::experiments::success_sweep(alpha, grid);
  return write_or_print(csq::experiments::sweep_csv(rows), out_path);
}

int cmd_validate(int circuits, int cutoff) {
  auto res = csq::fock::agreement_suite(circuits, cutoff, 7);
  std::printf("circuits_run %d\n", res.circuits_run);
  std::printf("max_overlap_deficit %.6g\n", res.max_overlap_deficit);
  std::printf("max_prob_gap %.6g\n", res.max_prob_gap);
  bool ok = res.max_overlap_deficit <= 1e-8 && res.max_prob_gap <= 1e-8;
  std::printf("status %s\n", ok ? "ok" : "fail");
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"analytic simulator for coherent-state optical circuits"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "execute a circuit file, print the branch report as JSON");
  std::string run_file;
  double run_alpha = kBaseAmplitude;
  std::string run_out;
  run->add_option("file", run_file, "circuit file")->required();
  run->add_option("--alpha", run_alpha,
                  "base amplitude: inputs scale by alpha/2 (files are written at 2)")
      ->capture_default_str();
  run->add_option("--out", run_out, "write the JSON here instead of stdout");

  auto* xorc = app.add_subcommand("xor", "run the non-local XOR protocol on two bits");
  int K = 0, R = 0;
  double xor_alpha = kBaseAmplitude;
  xorc->add_option("--K", K, "first input bit")->required()->check(CLI::Range(0, 1));
  xorc->add_option("--R", R, "second input bit")->required()->check(CLI::Range(0, 1));
  xorc->add_option("--alpha", xor_alpha, "coherent amplitude")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "success probability versus transmissivity, as CSV");
  double sw_alpha = kBaseAmplitude, sw_start = 0.8, sw_stop = 1.0, sw_step = 0.01;
  std::string sw_out;
  sweep->add_option("--alpha", sw_alpha, "coherent amplitude")->capture_default_str();
  sweep->add_option("--eta-start", sw_start, "first transmissivity")->capture_default_str();
  sweep->add_option("--eta-stop", sw_stop, "last transmissivity")->capture_default_str();
  sweep->add_option("--eta-step", sw_step, "grid step")->capture_default_str();
  sweep->add_option("--out", sw_out, "write the CSV here instead of stdout");

  auto* validate = app.add_subcommand("validate", "engine versus number-basis oracle on random circuits");
  int va_circuits = 200, va_cutoff = 40;
  validate->add_option("--circuits", va_circuits, "number of random circuits")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  validate->add_option("--cutoff", va_cutoff, "oracle photon-number cutoff")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 64;
  }

  try {
    if (run->parsed()) return cmd_run(run_file, run_alpha, run_out);
    if (xorc->parsed()) return cmd_xor(K, R, xor_alpha);
    if (sweep->parsed()) return cmd_sweep(sw_alpha, sw_start, sw_stop, sw_step, sw_out);
    if (validate->parsed()) return cmd_validate(va_circuits, va_cutoff);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 64;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 64;
}

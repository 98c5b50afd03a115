// Times the dense truncated-basis kernels under both schedules and checks
// that they agree bitwise. The serial path is the reference implementation
// kept for exactly this comparison; any amplitude mismatch is a bug, not
// a rounding question, because both schedules perform the same arithmetic
// per output element.
#include <chrono>
#include <cstdio>
#include <cstring>

#include "csq/core.hpp"
#include "csq/fock.hpp"
#include "csq/optics.hpp"

namespace {

using csq::fock::ExecPolicy;
using csq::fock::FockState;

template <typename Fn>
double min_ms_of(int reps, Fn&& fn) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

bool bitwise_equal(const FockState& a, const FockState& b) {
  if (a.mode_count != b.mode_count || a.cutoff != b.cutoff) return false;
  return std::memcmp(a.amps.data(), b.amps.data(),
                     a.amps.size() * sizeof(csq::core::cplx)) == 0;
}

FockState three_mode_state(int cutoff) {
  auto src = csq::optics::tensor(
      csq::optics::tensor(csq::optics::cat_state(2.0, +1),
                          csq::core::vacuum_state(1)),
      csq::core::vacuum_state(1));
  return csq::fock::embed_superposition(src, cutoff);
}

void report(const char* kernel, int cutoff, double serial_ms,
            double parallel_ms, bool identical) {
  std::printf("%-10s cutoff %-3d serial %8.2f ms   parallel %8.2f ms   "
              "speedup %5.2fx   identical %s\n",
              kernel, cutoff, serial_ms, parallel_ms,
              serial_ms / parallel_ms, identical ? "yes" : "NO");
}

}  // namespace

int main() {
  constexpr int kReps = 5;

  for (int cutoff : {40, 60}) {
    FockState s = three_mode_state(cutoff);

    FockState serial_out, parallel_out;
    double ts = min_ms_of(kReps, [&] {
      serial_out = csq::fock::bs_unitary_fock(s, 0, 1, 0.7853981633974483,
                                              ExecPolicy::Serial);
    });
    double tp = min_ms_of(kReps, [&] {
      parallel_out = csq::fock::bs_unitary_fock(s, 0, 1, 0.7853981633974483,
                                                ExecPolicy::Parallel);
    });
    bool same = bitwise_equal(serial_out, parallel_out);
    report("bs_unitary", cutoff, ts, tp, same);
    if (!same) return 1;
  }

  {
    const int cutoff = 40;
    FockState s = three_mode_state(cutoff);

    FockState serial_out, parallel_out;
    double ts = min_ms_of(kReps, [&] {
      serial_out = csq::fock::loss_fock(s, 0, 0.9, ExecPolicy::Serial);
    });
    double tp = min_ms_of(kReps, [&] {
      parallel_out = csq::fock::loss_fock(s, 0, 0.9, ExecPolicy::Parallel);
    });
    bool same = bitwise_equal(serial_out, parallel_out);
    report("loss", cutoff, ts, tp, same);
    if (!same) return 1;
  }

  return 0;
}

// Compares the OpenMP kernels against their serial reference implementations:
// batch generation, the dense transfer-matrix product, and the coupling
// replicas. Verifies bit-identical results before timing.

#include <chrono>
#include <cstdio>
#include <cstring>

#include <omp.h>

#include "siplab/coupling.hpp"
#include "siplab/experiment.hpp"
#include "siplab/process.hpp"
#include "siplab/transfer.hpp"

using namespace siplab;

namespace {

template <class F>
double time_ms(F&& f, int reps = 3) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    auto t0 = std::chrono::steady_clock::now();
    f();
    auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

void report(const char* name, double serial_ms, double parallel_ms, bool identical) {
  std::printf("%-28s serial %9.2f ms   omp %9.2f ms   speedup %5.2fx   %s\n", name,
              serial_ms, parallel_ms, serial_ms / parallel_ms,
              identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());

  {
    DmrSpec spec{1.0, "sqrt_sign"};
    TrajectoryBatch a, b;
    double ts = time_ms([&] { a = simulate_batch_serial(spec, 1 << 14, 64, 7); });
    double tp = time_ms([&] { b = simulate_batch(spec, 1 << 14, 64, 7); });
    report("dmr batch 64 x 16384", ts, tp, a.values == b.values);
  }
  {
    CircleSpec spec;
    TrajectoryBatch a, b;
    double ts = time_ms([&] { a = simulate_batch_serial(spec, 1 << 13, 64, 7); });
    double tp = time_ms([&] { b = simulate_batch(spec, 1 << 13, 64, 7); });
    report("circle batch 64 x 8192", ts, tp, a.values == b.values);
  }
  {
    PmSpec spec;
    spec.ulam_cells = 512;
    ChainModel model = pm_chain_model(spec);
    Eigen::MatrixXd cs, cp;
    double ts = time_ms([&] { cs = serial_matmul(model.K, model.K); });
    double tp = time_ms([&] { cp = par_matmul(model.K, model.K); });
    report("ulam matmul 512x512", ts, tp, cs == cp);
  }
  {
    CoupleExperimentOptions co;
    co.family = "rademacher";
    co.horizons = parse_horizons("2^6..2^10");
    co.replicas = 8;
    CouplingResult r1, r2;
    double tp = time_ms([&] { r1 = couple_experiment(co); }, 2);
    omp_set_num_threads(1);
    double ts = time_ms([&] { r2 = couple_experiment(co); }, 2);
    report("skorokhod 8 x 1024", ts, tp, r1.mean_sup == r2.mean_sup);
  }
  return 0;
}

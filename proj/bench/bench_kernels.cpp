// Serial vs OpenMP timings for the matmul kernels and a head's batch gradient.
//   siphi_bench [reps]
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include <omp.h>

#include "siphi/data/synth.hpp"
#include "siphi/heads.hpp"
#include "siphi/kernels.hpp"
#include "siphi/rng.hpp"
#include "siphi/trainer.hpp"

using namespace siphi;
using Clock = std::chrono::steady_clock;

template <class F>
static double best_ms(int reps, F&& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = Clock::now();
        f();
        const std::chrono::duration<double, std::milli> dt = Clock::now() - t0;
        best = std::min(best, dt.count());
    }
    return best;
}

static void bench_matmul(int reps, std::size_t m, std::size_t k, std::size_t n) {
    Rng rng(1);
    std::vector<double> a(m * k), b(k * n), c1(m * n), c2(m * n);
    for (auto& v : a) v = rng.uniform(-1, 1);
    for (auto& v : b) v = rng.uniform(-1, 1);
    const double ts = best_ms(reps, [&] { kernels::serial::matmul(a, b, c1, m, k, n); });
    const double tp = best_ms(reps, [&] { kernels::parallel::matmul(a, b, c2, m, k, n); });
    std::printf("matmul %4zux%4zux%4zu  serial %9.3f ms  parallel %9.3f ms  speedup %5.2f  %s\n", m, k, n, ts, tp,
                ts / tp, c1 == c2 ? "identical" : "MISMATCH");
}

static void bench_gradient(int reps, heads::Arch arch) {
    data::SynthSpec spec;
    spec.samples = 128;
    spec.frames = 100;
    spec.channels = 32;
    const auto syn = data::synth_dataset(spec);
    heads::HeadConfig cfg;
    cfg.arch = arch;
    cfg.embed_dim = 64;
    const heads::HeadDims dims{static_cast<int>(spec.layers), static_cast<int>(spec.channels), spec.audiogram_bins};
    const auto p = heads::init_head(cfg, syn.manifests[0].sfm, spec.audiogram_bins);
    std::vector<train::Example> ex;
    for (std::size_t i = 0; i < spec.samples; ++i)
        ex.push_back({syn.manifests[0].samples[i].sample_id,
                      heads::prepare_input(syn.features[0][i], syn.manifests[0].samples[i].audiogram, cfg, dims),
                      syn.manifests[0].samples[i].score});
    std::vector<std::size_t> idx(ex.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    train::BatchGradient gs, gp;
    const double ts = best_ms(reps, [&] { gs = train::batch_gradient(p, ex, idx, 1.0, kernels::Exec::serial); });
    const double tp = best_ms(reps, [&] { gp = train::batch_gradient(p, ex, idx, 1.0, kernels::Exec::parallel); });
    std::printf("grad   %-6s batch %3zu     serial %9.3f ms  parallel %9.3f ms  speedup %5.2f  %s\n",
                heads::to_string(arch).c_str(), idx.size(), ts, tp, ts / tp,
                gs.loss == gp.loss && gs.grads == gp.grads ? "identical" : "MISMATCH");
}

int main(int argc, char** argv) {
    const int reps = argc > 1 ? std::atoi(argv[1]) : 5;
    std::printf("threads %d\n", omp_get_max_threads());
    bench_matmul(reps, 64, 64, 64);
    bench_matmul(reps, 256, 256, 256);
    bench_matmul(reps, 512, 384, 384);
    for (auto arch : {heads::Arch::wa_tgp, heads::Arch::wa_tt, heads::Arch::dt}) bench_gradient(reps, arch);
    return 0;
}

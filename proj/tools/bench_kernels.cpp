// Production (par_for) kernels against their serial reference twins.
// Both accumulate in the same index order, so any timing gap is pure
// scheduling overhead or parallel speedup — never a numeric difference.
#include <benchmark/benchmark.h>

#include "taac/encryptor.hpp"
#include "taac/kernels.hpp"
#include "taac/rng.hpp"
#include "taac/tensor.hpp"

namespace {

using taac::Tensor;

Tensor<float> rand_tensor(std::vector<std::size_t> shape, std::uint64_t seed) {
    Tensor<float> t(std::move(shape));
    taac::Rng rng(seed);
    for (auto& v : t.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    return t;
}

void bm_fc_forward(benchmark::State& state, bool parallel) {
    const std::size_t n = 32, in = 2000, out = 512;
    const auto x = rand_tensor({n, in}, 1);
    const auto w = rand_tensor({out, in}, 2);
    const auto b = rand_tensor({out}, 3);
    Tensor<float> y;
    for (auto _ : state) {
        if (parallel)
            taac::kernels::fc_forward(x, w, b, y);
        else
            taac::reference::fc_forward(x, w, b, y);
        benchmark::DoNotOptimize(y.data.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * n * in * out);
}

void bm_conv1d_forward(benchmark::State& state, bool parallel) {
    const std::size_t n = 32, cin = 16, cout = 32, len = 500, k = 9;
    const auto x = rand_tensor({n, cin, len}, 4);
    const auto kr = rand_tensor({cout, cin, k}, 5);
    Tensor<float> y;
    for (auto _ : state) {
        if (parallel)
            taac::kernels::conv1d_forward(x, kr, 1, k / 2, y);
        else
            taac::reference::conv1d_forward(x, kr, 1, k / 2, y);
        benchmark::DoNotOptimize(y.data.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * n * cin * cout * len * k);
}

void bm_encrypt(benchmark::State& state) {
    const std::size_t len = 2000;
    std::vector<double> x(len);
    taac::Rng rng(6);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    const auto key = taac::crypt::keygen(7);
    const auto strength = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        auto y = taac::crypt::encrypt(x, key, strength);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * len);
}

}  // namespace

BENCHMARK_CAPTURE(bm_fc_forward, parallel, true);
BENCHMARK_CAPTURE(bm_fc_forward, serial, false);
BENCHMARK_CAPTURE(bm_conv1d_forward, parallel, true);
BENCHMARK_CAPTURE(bm_conv1d_forward, serial, false);
BENCHMARK(bm_encrypt)->Arg(1)->Arg(10)->Arg(25);

BENCHMARK_MAIN();

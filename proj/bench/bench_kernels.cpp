// Reference (serial direct loops) vs im2col/GEMM kernels on layer shapes
// taken from the 128x128 configuration, plus one full generator pass.

#include <benchmark/benchmark.h>

#include <vector>

#include "wgain/kernels.hpp"
#include "wgain/model.hpp"
#include "wgain/rng.hpp"

using namespace wgain;
namespace k = wgain::kernels;

namespace {

// {in_c, side, out_c, kernel, stride, dilation}
const int kShapes[][6] = {
    {7, 128, 32, 5, 1, 1},   // first encoder block
    {64, 32, 64, 5, 1, 2},   // dilated block at 1/4 resolution
    {128, 16, 128, 5, 1, 4}, // bottleneck
    {4, 128, 64, 5, 2, 1},   // first critic layer
};

k::ConvGeometry geometry(int idx) {
  const auto* s = kShapes[idx];
  k::ConvGeometry g;
  g.in_c = s[0];
  g.in_h = g.in_w = s[1];
  g.out_c = s[2];
  g.kernel = s[3];
  g.stride = s[4];
  g.dilation = s[5];
  g.pad = g.dilation * (g.kernel - 1) / 2;
  return g;
}

std::vector<Real> random_vec(std::size_t n, Rng& rng) {
  std::vector<Real> v(n);
  for (auto& x : v) x = rng.uniform(-1, 1);
  return v;
}

template <bool Reference>
void BM_forward(benchmark::State& state) {
  const auto g = geometry(static_cast<int>(state.range(0)));
  Rng rng(1);
  auto in = random_vec(g.in_size(), rng), w = random_vec(g.weight_size(), rng), b = random_vec(g.out_c, rng);
  std::vector<Real> out(g.out_size());
  for (auto _ : state) {
    if constexpr (Reference)
      k::reference::conv2d_forward(g, in, w, b, out);
    else
      k::conv2d_forward(g, in, w, b, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["MFLOP"] = 2.0 * g.out_size() * g.in_c * g.kernel * g.kernel / 1e6;
}

template <bool Reference>
void BM_backward(benchmark::State& state) {
  const auto g = geometry(static_cast<int>(state.range(0)));
  Rng rng(2);
  auto in = random_vec(g.in_size(), rng), w = random_vec(g.weight_size(), rng), go = random_vec(g.out_size(), rng);
  std::vector<Real> gi(g.in_size()), gw(g.weight_size()), gb(g.out_c);
  for (auto _ : state) {
    if constexpr (Reference) {
      k::reference::conv2d_backward_input(g, go, w, gi);
      k::reference::conv2d_backward_weight(g, in, go, gw, gb);
    } else {
      k::conv2d_backward_input(g, go, w, gi);
      k::conv2d_backward_weight(g, in, go, gw, gb);
    }
    benchmark::DoNotOptimize(gi.data());
    benchmark::DoNotOptimize(gw.data());
  }
}

void BM_generator_forward(benchmark::State& state) {
  GeneratorConfig gc;
  gc.input_side = static_cast<int>(state.range(0));
  Model model = Model::create(gc, CriticConfig{}, 3);
  Rng rng(3);
  ImageTensor x(gc.input_side, gc.input_side, 0.5);
  MaskMatrix m = MaskMatrix::ones(gc.input_side, gc.input_side);
  m.clear_rect(gc.input_side / 4, gc.input_side / 4, gc.input_side / 2, gc.input_side / 2);
  auto z = mask_noise(sample_noise(gc.input_side, gc.input_side, 0.1, rng), m);
  for (auto _ : state) benchmark::DoNotOptimize(generator_forward(model, mask_image(x, m), z, m));
}

}  // namespace

BENCHMARK(BM_forward<true>)->Name("conv_forward/reference")->DenseRange(0, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_forward<false>)->Name("conv_forward/gemm")->DenseRange(0, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_backward<true>)->Name("conv_backward/reference")->DenseRange(0, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_backward<false>)->Name("conv_backward/gemm")->DenseRange(0, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_generator_forward)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

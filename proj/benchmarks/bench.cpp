// Microbenchmarks for the hot paths: scene rendering, dataset
// augmentation, network forward/backward, and quantized inference.

#include <benchmark/benchmark.h>

#include <vector>

#include "vsf/augment.hpp"
#include "vsf/nnet.hpp"
#include "vsf/quant.hpp"
#include "vsf/scenegen.hpp"
#include "vsf/train.hpp"

using namespace vsf;

namespace {

Dataset small_dataset(int n, std::uint64_t seed) {
  SceneConfig cfg;
  cfg.seed = seed;
  return generate_dataset(cfg, CameraIntrinsics{}, std::uint32_t(n));
}

void fill_batch(std::vector<float>& img, std::vector<float>& st, int n) {
  const Dataset ds = small_dataset(n, 17);
  const BatchData bd = BatchData::from_dataset(ds);
  img = bd.images;
  st = bd.states;
}

}  // namespace

static void BM_RenderScene(benchmark::State& state) {
  const SceneConfig cfg;
  const CameraIntrinsics in;
  const ScenePoses sp = sample_scene(cfg, 3);
  for (auto _ : state) {
    auto img = render(in, cfg, sp.observer, sp.target, sp.group_id);
    benchmark::DoNotOptimize(img);
  }
}
BENCHMARK(BM_RenderScene);

static void BM_GenerateSample(benchmark::State& state) {
  SceneConfig cfg;
  const CameraIntrinsics in;
  std::uint64_t seed = 1;
  for (auto _ : state) {
    cfg.seed = seed++;
    auto ds = generate_dataset(cfg, in, 1);
    benchmark::DoNotOptimize(ds);
  }
}
BENCHMARK(BM_GenerateSample);

static void BM_AugmentPipeline(benchmark::State& state) {
  const Dataset ds = small_dataset(1, 5);
  AugmentConfig cfg;
  cfg.copies = 1;
  const CameraIntrinsics in;
  std::uint64_t index = 0;
  for (auto _ : state) {
    auto out = augment_pipeline(ds.samples[0], index++, cfg, in);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_AugmentPipeline);

static void BM_ForwardEval(benchmark::State& state) {
  const int batch = int(state.range(0));
  Model<float> m(desknet_arch(), FusionVariant::MlpBranch, 1, 1);
  std::vector<float> img, st;
  fill_batch(img, st, batch);
  for (auto _ : state) {
    auto out = m.forward(img, st, batch, RunMode::Eval);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_ForwardEval)->Arg(1)->Arg(64);

static void BM_ForwardBackward(benchmark::State& state) {
  const int batch = int(state.range(0));
  Model<float> m(desknet_arch(), FusionVariant::MlpBranch, 1, 1);
  std::vector<float> img, st;
  fill_batch(img, st, batch);
  for (auto _ : state) {
    auto out = m.forward(img, st, batch, RunMode::Train);
    std::vector<float> grad(out.size(), 1.0f / float(out.size()));
    m.zero_grads();
    m.backward(grad, batch);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_ForwardBackward)->Arg(64);

static void BM_QuantForward(benchmark::State& state) {
  const int batch = int(state.range(0));
  Model<float> m(desknet_arch(), FusionVariant::MlpBranch, 1, 1);
  std::vector<float> img, st;
  fill_batch(img, st, batch);
  const QuantModel qm = quantize(m, img, st, batch);
  for (auto _ : state) {
    auto out = q_forward(qm, img, st, batch);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_QuantForward)->Arg(1)->Arg(64);

BENCHMARK_MAIN();

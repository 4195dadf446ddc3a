#include <benchmark/benchmark.h>

#include <random>

#include "m2t/decoder.hpp"
#include "m2t/ops.hpp"
#include "m2t/training.hpp"

using namespace m2t;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng) {
  Tensor t(shape);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = u(rng);
  return t;
}

ModelConfig bench_config(EncoderKind enc) {
  ModelConfig c;
  c.encoder.kind = enc;
  c.decoder.vocab_size = 40;
  return c;
}

void BM_MatmulForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const Tensor a = random_tensor({n, n}, rng), b = random_tensor({n, n}, rng);
  for (auto _ : state) {
    Tape tape;
    auto loss = sum(matmul(tape.leaf(a), tape.leaf(b)));
    benchmark::DoNotOptimize(tape.backward(loss));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_MatmulForwardBackward)->RangeMultiplier(2)->Range(16, 128)->Complexity();

void BM_LogSoftmax(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const Tensor x = random_tensor({static_cast<std::size_t>(state.range(0))}, rng);
  for (auto _ : state) {
    Tape tape(false);
    benchmark::DoNotOptimize(log_softmax(tape.leaf(x)).value());
  }
}
BENCHMARK(BM_LogSoftmax)->Arg(64)->Arg(1024);

void BM_DecodeStep(benchmark::State& state) {
  const auto enc = static_cast<EncoderKind>(state.range(0));
  Model model = Model::create(bench_config(enc), 3);
  std::mt19937_64 rng(3);
  const Tensor motion = random_tensor({60, 63}, rng);
  Tape tape(false);
  ParamBinding binding(tape, model.params());
  DecodingContext ctx(model, binding, motion);
  const auto h0 = ctx.initial_state();
  for (auto _ : state) benchmark::DoNotOptimize(ctx.decode_step(h0, special::sos));
  state.SetLabel(to_string(enc));
}
BENCHMARK(BM_DecodeStep)->Arg(static_cast<int>(EncoderKind::mlp))->Arg(static_cast<int>(EncoderKind::gru));

void BM_GreedyDecode(benchmark::State& state) {
  Model model = Model::create(bench_config(EncoderKind::mlp), 4);
  std::mt19937_64 rng(4);
  const Tensor motion = random_tensor({60, 63}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(greedy_decode(model, motion, 20));
}
BENCHMARK(BM_GreedyDecode)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const auto enc = static_cast<EncoderKind>(state.range(0));
  Model model = Model::create(bench_config(enc), 5);
  std::mt19937_64 rng(5);
  std::vector<TrainingExample> batch;
  for (int i = 0; i < 16; ++i) {
    TrainingExample e;
    e.motion = random_tensor({60, 63}, rng);
    e.targets = {4, 5, 6, 7, 8, 9, 10, 11, 12, 13, special::eos};
    batch.push_back(std::move(e));
  }
  TrainingConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = batch.size();
  for (auto _ : state) benchmark::DoNotOptimize(train(model, batch, cfg));
  state.SetLabel(to_string(enc));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}
BENCHMARK(BM_TrainStep)
    ->Arg(static_cast<int>(EncoderKind::mlp))
    ->Arg(static_cast<int>(EncoderKind::gru))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

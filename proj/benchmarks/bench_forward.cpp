#include "daud/dsra.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

daud::Tensor random_row(std::mt19937_64& rng, size_t d) {
  daud::Tensor t(1, d);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (size_t i = 0; i < d; ++i) t.at(0, i) = dist(rng);
  return t;
}

daud::NewsBundle make_bundle(size_t d_in, size_t users, size_t engagements) {
  std::mt19937_64 rng(99);
  daud::NewsBundle b;
  b.news_id = "bench";
  b.h_x = random_row(rng, d_in);
  b.h_d = random_row(rng, d_in);
  b.domain_index = 0;
  b.label = 1.0;
  for (size_t u = 0; u < users; ++u) {
    daud::UserInputs ui;
    ui.user_id = "u" + std::to_string(u);
    ui.h_p = random_row(rng, d_in);
    for (size_t e = 0; e < engagements; ++e) {
      ui.h_e.push_back(random_row(rng, d_in));
      ui.h_c.push_back(random_row(rng, d_in));
    }
    b.users.push_back(std::move(ui));
  }
  return b;
}

void BM_ForwardFull(benchmark::State& state) {
  daud::ModelConfig config;
  config.d_in = 64;
  config.d_z = 32;
  config.heads = 2;
  config.layers = 1;
  config.n_domains = 3;
  config.k_cap = 8;
  config.m_cap = 8;
  daud::DsraModel model(config, daud::ModelVariant::Full, 1);
  auto bundle = make_bundle(config.d_in, static_cast<size_t>(state.range(0)), 4);
  for (auto _ : state) {
    daud::Tape tape(0);
    benchmark::DoNotOptimize(model.forward(tape, bundle, false));
  }
}
BENCHMARK(BM_ForwardFull)->Arg(1)->Arg(4)->Arg(8);

void BM_ForwardBackward(benchmark::State& state) {
  daud::ModelConfig config;
  config.d_in = 64;
  config.d_z = 32;
  config.heads = 2;
  config.layers = 1;
  config.n_domains = 3;
  config.k_cap = 8;
  config.m_cap = 8;
  daud::DsraModel model(config, daud::ModelVariant::Full, 1);
  auto bundle = make_bundle(config.d_in, 4, 4);
  daud::Tensor target(1, 1, bundle.label);
  for (auto _ : state) {
    daud::Tape tape(0);
    auto result = model.forward(tape, bundle, false);
    daud::Var loss = tape.bce_mean(result.prob, target);
    tape.backward(loss);
    model.params().zero_grads();
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(1);

}  // namespace

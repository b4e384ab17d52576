#include "daud/embedder.hpp"

#include <benchmark/benchmark.h>

#include <sstream>
#include <string>

namespace {

std::string sample_text(size_t words) {
  std::ostringstream os;
  for (size_t i = 0; i < words; ++i) os << (i ? " " : "") << "token" << (i % 97);
  return os.str();
}

void BM_HashEmbed(benchmark::State& state) {
  daud::HashingEmbedder embedder(static_cast<int>(state.range(0)));
  std::string text = sample_text(120);
  for (auto _ : state) {
    benchmark::DoNotOptimize(embedder.embed(text));
  }
}
BENCHMARK(BM_HashEmbed)->Arg(64)->Arg(256)->Arg(768);

void BM_Cosine(benchmark::State& state) {
  daud::HashingEmbedder embedder(static_cast<int>(state.range(0)));
  auto a = embedder.embed(sample_text(120));
  auto b = embedder.embed(sample_text(121));
  for (auto _ : state) {
    benchmark::DoNotOptimize(daud::cosine(a, b));
  }
}
BENCHMARK(BM_Cosine)->Arg(64)->Arg(768);

}  // namespace

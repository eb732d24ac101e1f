#include <benchmark/benchmark.h>

#include "requests.hpp"
#include "rfseq/wire.hpp"

namespace {

using namespace rfseq;

ExperimentRequest sweep_request() {
  auto r = benchmarks::rabi(1024);
  r.operation_code = OperationCode::kExecuteSweeps;
  r.sweepers = {Sweeper{{Parameter::kFrequency}, {0}, {4.99e9}, {5.01e9}, 101}};
  return r;
}

void BM_EncodeRequest(benchmark::State& state) {
  const auto r = sweep_request();
  for (auto _ : state) benchmark::DoNotOptimize(wire::encode_request(r));
}
BENCHMARK(BM_EncodeRequest);

void BM_DecodeRequest(benchmark::State& state) {
  const auto payload = wire::encode_request(sweep_request());
  for (auto _ : state) benchmark::DoNotOptimize(wire::decode_request(payload));
}
BENCHMARK(BM_DecodeRequest);

void BM_FrameRoundTrip(benchmark::State& state) {
  const wire::Bytes payload(static_cast<std::size_t>(state.range(0)), 'x');
  for (auto _ : state) {
    wire::MemorySource source(wire::frame_write(payload));
    benchmark::DoNotOptimize(wire::frame_read(source));
  }
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FrameRoundTrip)->Range(64, 1 << 20);

void BM_EncodeResults(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  AcquisitionResult result{{n}, std::vector<double>(n, 0.123456789), std::vector<double>(n, -0.98765)};
  const wire::ResponseEnvelope envelope = result;
  for (auto _ : state) benchmark::DoNotOptimize(wire::encode_results(envelope));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EncodeResults)->Range(1, 1 << 14);

}  // namespace

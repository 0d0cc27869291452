#include <benchmark/benchmark.h>

#include "tristab/linalg.hpp"
#include "tristab/random.hpp"
#include "tristab/stability.hpp"
#include "tristab/triple.hpp"

using namespace tristab;

namespace {

stability::PerturbedMap perturbed(std::size_t n, stability::Scheme scheme, double eps, double p) {
  Rng rng(1);
  const auto theta = triple::make_triple_homomorphism(random_unitary(n, rng));
  const auto D = triple::make_theta_derivation(theta, triple::make_triple_derivation(random_skew_adjoint(n, rng)));
  return stability::make_perturbation(D, eps, p, stability::hypothesis_form(scheme), 2);
}

void BM_SpectralNorm(benchmark::State& state) {
  Rng rng(3);
  const auto x = random_matrix(static_cast<std::size_t>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(linalg::norm(x));
}
BENCHMARK(BM_SpectralNorm)->Arg(2)->Arg(4)->Arg(8)->Arg(16);

void BM_TripleProduct(benchmark::State& state) {
  Rng rng(4);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_matrix(n, rng), y = random_matrix(n, rng), z = random_matrix(n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(triple::triple_product(x, y, z));
}
BENCHMARK(BM_TripleProduct)->Arg(2)->Arg(4)->Arg(8)->Arg(16);

void BM_DirectMethod(benchmark::State& state) {
  const auto scheme = static_cast<stability::Scheme>(state.range(0));
  const bool jc = scheme == stability::Scheme::kJensen3Contractive;
  const bool cc = scheme == stability::Scheme::kCauchy2Contractive;
  const auto f = perturbed(2, scheme, jc ? 1.0 : 0.1, jc ? 4.0 : (cc ? 2.0 : 0.5));
  Rng rng(5);
  const auto x = random_matrix(2, rng);
  for (auto _ : state) benchmark::DoNotOptimize(stability::direct_method(f, scheme, x));
}
BENCHMARK(BM_DirectMethod)->DenseRange(0, 3);

void BM_Recover(benchmark::State& state) {
  const auto f = perturbed(static_cast<std::size_t>(state.range(0)), stability::Scheme::kCauchy2, 0.1, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(stability::recover_linear_map(f, stability::Scheme::kCauchy2));
}
BENCHMARK(BM_Recover)->Arg(2)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

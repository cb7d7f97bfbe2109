#include <benchmark/benchmark.h>

#include <random>

#include "skelsql/hyperbolic.hpp"
#include "skelsql/relevance.hpp"
#include "skelsql/skeleton_index.hpp"
#include "skelsql/spider.hpp"

namespace {

using namespace skelsql;

Vector random_vector(std::mt19937_64& rng, std::size_t dim, double scale) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vector v(dim);
  for (auto& x : v) x = n(rng) * scale;
  return v;
}

void BM_PoincareDistance(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const auto a = hyperbolic::project(random_vector(rng, dim, 0.1));
  const auto b = hyperbolic::project(random_vector(rng, dim, 0.1));
  for (auto _ : state) benchmark::DoNotOptimize(hyperbolic::poincare_distance(a, b));
}
BENCHMARK(BM_PoincareDistance)->Arg(64)->Arg(768);

void BM_ProtonMatrixFrom(benchmark::State& state) {
  const auto q = static_cast<std::size_t>(state.range(0));
  const std::size_t s = 40, dim = 64;
  std::mt19937_64 rng(2);
  SchemaRepresentations unmasked{{}, dim, std::nullopt};
  for (std::size_t j = 0; j < s; ++j) unmasked.vectors.push_back(random_vector(rng, dim, 0.2));
  std::vector<SchemaRepresentations> masked;
  for (std::size_t i = 0; i < q; ++i) {
    SchemaRepresentations reps{{}, dim, i};
    for (std::size_t j = 0; j < s; ++j) reps.vectors.push_back(random_vector(rng, dim, 0.2));
    masked.push_back(std::move(reps));
  }
  for (auto _ : state) benchmark::DoNotOptimize(proton_matrix_from(unmasked, masked));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * q * s));
}
BENCHMARK(BM_ProtonMatrixFrom)->Arg(12)->Arg(30);

void BM_DesemanticizeReference(benchmark::State& state) {
  const auto schemas = load_schemas(SKELSQL_BENCH_TABLES, "/nonexistent");
  const auto& schema = find_schema(schemas, "concert_singer");
  Example question;
  question.db_id = schema.db_id;
  question.question_text = "What are the names of the singers who are not French?";
  question.question_tokens = tokenize(question.question_text);
  const ReferenceEncoder encoder;
  const ValueStore values;
  for (auto _ : state) benchmark::DoNotOptimize(desemanticize(question, schema, values, encoder, {}));
}
BENCHMARK(BM_DesemanticizeReference);

void BM_SearchKnn(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t dim = 64;
  std::mt19937_64 rng(3);
  SkeletonIndex index;
  for (std::size_t i = 0; i < n; ++i) index.add(make_entry(i, random_vector(rng, dim, 1.0), ""));
  const auto query = random_vector(rng, dim, 1.0);
  const auto unit = hyperbolic::norm(query);
  Vector q(query);
  for (auto& x : q) x /= unit;
  for (auto _ : state) benchmark::DoNotOptimize(index.search_knn(q, 8));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_SearchKnn)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();

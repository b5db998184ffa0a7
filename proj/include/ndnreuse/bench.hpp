#pragma once

#include "ndnreuse/common.hpp"
#include "ndnreuse/descriptor.hpp"
#include "ndnreuse/hnsw.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

namespace ndnreuse {

/// n points with i.i.d. uniform [0,1) coordinates, row-major.
inline std::vector<float>
random_points(std::size_t n, std::size_t dim, Rng& rng)
{
  std::vector<float> out(n * dim);
  for (auto& v : out)
    v = static_cast<float>(rng.uniform());
  return out;
}

/// Exact nearest neighbour of `q` among rows of `data` (ties to lower id).
inline std::uint64_t
exact_nearest(const std::vector<float>& data, std::size_t dim, std::span<const float> q)
{
  std::uint64_t best = 0;
  float best_d = std::numeric_limits<float>::infinity();
  std::size_t n = data.size() / dim;
  for (std::size_t i = 0; i < n; ++i) {
    float d = squared_distance(std::span<const float>(data.data() + i * dim, dim), q);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

struct AnnBenchRow {
  std::size_t n = 0;
  std::size_t queries = 0;
  double build_seconds = 0;
  double mean_query_seconds = 0;
  double recall_at_1 = std::numeric_limits<double>::quiet_NaN();
};

/// Builds an index over n uniform random points and times k = 1 queries
/// with fresh uniform query points; recall against exact search is optional.
inline AnnBenchRow
bench_ann(std::size_t n, std::size_t queries, std::size_t dim, const HnswParams& params, std::uint64_t seed,
          bool with_recall)
{
  Rng rng(derive_seed(seed, n));
  auto data = random_points(n, dim, rng);
  auto qs = random_points(queries, dim, rng);

  AnnBenchRow row;
  row.n = n;
  row.queries = queries;
  HnswIndex index(dim, params, derive_seed(seed, 7));
  auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < n; ++i)
    index.insert(i, std::span<const float>(data.data() + i * dim, dim));
  auto t1 = std::chrono::steady_clock::now();
  row.build_seconds = std::chrono::duration<double>(t1 - t0).count();

  std::vector<std::uint64_t> found(queries);
  t0 = std::chrono::steady_clock::now();
  for (std::size_t q = 0; q < queries; ++q) {
    auto r = index.search_knn(std::span<const float>(qs.data() + q * dim, dim), 1);
    found[q] = r.empty() ? std::numeric_limits<std::uint64_t>::max() : r.front().id;
  }
  t1 = std::chrono::steady_clock::now();
  row.mean_query_seconds = std::chrono::duration<double>(t1 - t0).count() / static_cast<double>(queries);

  if (with_recall) {
    std::size_t hits = 0;
    for (std::size_t q = 0; q < queries; ++q)
      hits += exact_nearest(data, dim, std::span<const float>(qs.data() + q * dim, dim)) == found[q] ? 1 : 0;
    row.recall_at_1 = static_cast<double>(hits) / static_cast<double>(queries);
  }
  return row;
}

} // namespace ndnreuse

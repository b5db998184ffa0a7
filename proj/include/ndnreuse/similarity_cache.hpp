#pragma once

#include "ndnreuse/descriptor.hpp"
#include "ndnreuse/hnsw.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <list>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace ndnreuse {

/// Opaque computation result; the cache never interprets the bytes.
struct ResultPayload {
  std::vector<std::uint8_t> bytes;
  std::uint64_t size_bits = 1;
};

struct CacheEntry {
  std::uint64_t key = 0; ///< cache-internal id, also the index node id
  std::string name;
  std::string tag;       ///< service partition; lookups only match their own tag
  Descriptor descriptor{};
  ResultPayload result;
  std::uint64_t last_use = 0;
};

struct CacheHit {
  const CacheEntry* entry;
  double distance;
};

struct CacheStats {
  std::uint64_t lookups = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t evictions = 0;
  std::uint64_t inserts = 0;
  std::uint64_t rebuilds = 0;
  double search_seconds = 0; ///< wall clock spent in index searches

  double hit_rate() const { return lookups ? static_cast<double>(hits) / static_cast<double>(lookups) : 0.0; }
  double mean_search_time() const { return lookups ? search_seconds / static_cast<double>(lookups) : 0.0; }
};

/// Capacity-bounded LRU store of computed results keyed by descriptor
/// similarity. A lookup hits when the nearest live descriptor (same tag) is
/// within `theta`; hits refresh recency. Each tag has its own HNSW index,
/// recency and capacity are shared by all tags.
class SimilarityCache {
public:
  SimilarityCache(std::size_t capacity, double theta, HnswParams params = {}, std::uint64_t seed = 1)
    : m_capacity(capacity), m_theta(theta), m_params(params), m_seed(seed)
  {
    if (theta < 0)
      throw std::invalid_argument("SimilarityCache: negative theta");
    m_params.resolved().validate();
  }

  std::size_t capacity() const noexcept { return m_capacity; }
  std::size_t size() const noexcept { return m_entries.size(); }
  double theta() const noexcept { return m_theta; }
  const CacheStats& stats() const noexcept { return m_stats; }

  /// k = 1 search; touches the entry on a hit, leaves the cache unchanged on
  /// a miss (apart from counters).
  std::optional<CacheHit> lookup(const Descriptor& d, std::uint64_t now, const std::string& tag = {})
  {
    ++m_stats.lookups;
    auto best = nearest(d, tag);
    if (!best || best->distance > m_theta) {
      ++m_stats.misses;
      return std::nullopt;
    }
    ++m_stats.hits;
    auto& slot = m_entries.at(best->id);
    slot.entry.last_use = now;
    m_lru.splice(m_lru.begin(), m_lru, slot.pos);
    return CacheHit{&slot.entry, best->distance};
  }

  /// Nearest live entry of `tag` without touching recency or counters.
  std::optional<CacheHit> peek(const Descriptor& d, const std::string& tag = {}) const
  {
    auto it = m_indices.find(tag);
    if (it == m_indices.end() || it->second.size() == 0)
      return std::nullopt;
    auto r = it->second.search_knn(d, 1);
    if (r.empty())
      return std::nullopt;
    return CacheHit{&m_entries.at(r.front().id).entry, r.front().distance};
  }

  /// Inserts as most recent; evicts the least recently used entry first when
  /// full. Returns the evicted entry.
  std::optional<CacheEntry> insert(std::string name, const Descriptor& d, ResultPayload result, std::uint64_t now,
                                   const std::string& tag = {})
  {
    if (result.size_bits == 0)
      throw std::invalid_argument("SimilarityCache::insert: result size must be positive");
    if (m_capacity == 0)
      return std::nullopt;
    ++m_stats.inserts;
    std::optional<CacheEntry> evicted;
    if (m_entries.size() >= m_capacity)
      evicted = evict_lru();

    std::uint64_t key = m_next_key++;
    m_lru.push_front(key);
    Slot slot{CacheEntry{key, std::move(name), tag, d, std::move(result), now}, m_lru.begin()};
    index_for(tag).insert(key, d);
    m_entries.emplace(key, std::move(slot));
    return evicted;
  }

  /// Live entries, most recent first.
  std::vector<const CacheEntry*> entries_by_recency() const
  {
    std::vector<const CacheEntry*> out;
    for (auto key : m_lru)
      out.push_back(&m_entries.at(key).entry);
    return out;
  }

  /// Entry/index/recency consistency plus each index's structural audit.
  AuditReport audit() const
  {
    if (m_entries.size() > m_capacity)
      return {false, "capacity exceeded"};
    if (m_lru.size() != m_entries.size())
      return {false, "recency list is not a permutation of live entries"};
    std::size_t indexed = 0;
    for (const auto& [tag, index] : m_indices) {
      auto a = index.audit();
      if (!a.ok)
        return {false, "index '" + tag + "': " + a.problem};
      indexed += index.size();
    }
    if (indexed != m_entries.size())
      return {false, "index live count differs from entry count"};
    for (auto key : m_lru) {
      auto it = m_entries.find(key);
      if (it == m_entries.end())
        return {false, "recency list holds an unknown key"};
      auto idx = m_indices.find(it->second.entry.tag);
      if (idx == m_indices.end() || !idx->second.contains(key))
        return {false, "entry missing from its index"};
    }
    return {};
  }

private:
  struct Slot {
    CacheEntry entry;
    std::list<std::uint64_t>::iterator pos;
  };

  HnswIndex& index_for(const std::string& tag)
  {
    auto it = m_indices.find(tag);
    if (it == m_indices.end())
      it = m_indices.emplace(tag, HnswIndex(kDescriptorSize, m_params, derive_seed(m_seed, m_indices.size()))).first;
    return it->second;
  }

  std::optional<Neighbor> nearest(const Descriptor& d, const std::string& tag)
  {
    auto it = m_indices.find(tag);
    if (it == m_indices.end() || it->second.size() == 0)
      return std::nullopt;
    auto t0 = std::chrono::steady_clock::now();
    auto r = it->second.search_knn(d, 1);
    m_stats.search_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (r.empty())
      return std::nullopt;
    return r.front();
  }

  CacheEntry evict_lru()
  {
    std::uint64_t key = m_lru.back();
    m_lru.pop_back();
    auto node = m_entries.extract(key);
    CacheEntry victim = std::move(node.mapped().entry);
    auto& index = m_indices.at(victim.tag);
    index.remove(key);
    if (index.needs_rebuild()) {
      index = index.rebuild();
      ++m_stats.rebuilds;
    }
    ++m_stats.evictions;
    return victim;
  }

  std::size_t m_capacity;
  double m_theta;
  HnswParams m_params;
  std::uint64_t m_seed;
  std::uint64_t m_next_key = 0;
  std::list<std::uint64_t> m_lru;
  std::unordered_map<std::uint64_t, Slot> m_entries;
  std::map<std::string, HnswIndex> m_indices;
  CacheStats m_stats;
};

// ---------------------------------------------------------------------------
// Threshold calibration

struct LabeledPair {
  double distance = 0;
  bool same_result = false;
};

struct Calibration {
  double theta = 0;
  double false_match_rate = 0;
  double true_match_rate = 0;
  std::size_t n_pairs = 0;
};

class CalibrationError : public std::runtime_error {
public:
  CalibrationError(const std::string& what, double best_rate) : std::runtime_error(what), m_best(best_rate) {}
  double best_achievable_rate() const noexcept { return m_best; }

private:
  double m_best;
};

/// Largest theta whose false-match rate (different-result pairs with
/// distance <= theta) stays within `max_false_match`.
inline Calibration
calibrate_theta(std::vector<LabeledPair> pairs, double max_false_match)
{
  if (pairs.empty())
    throw std::invalid_argument("calibrate_theta: no pairs");
  std::vector<double> same, diff;
  for (const auto& p : pairs)
    (p.same_result ? same : diff).push_back(p.distance);
  std::sort(same.begin(), same.end());
  std::sort(diff.begin(), diff.end());

  auto rate = [](const std::vector<double>& sorted, double theta) {
    if (sorted.empty())
      return 0.0;
    auto n = std::upper_bound(sorted.begin(), sorted.end(), theta) - sorted.begin();
    return static_cast<double>(n) / static_cast<double>(sorted.size());
  };

  Calibration c;
  c.n_pairs = pairs.size();
  double max_seen = std::max(same.empty() ? 0.0 : same.back(), diff.empty() ? 0.0 : diff.back());
  auto allowed = static_cast<std::size_t>(std::floor(max_false_match * static_cast<double>(diff.size()) + 1e-9));
  if (allowed >= diff.size()) {
    c.theta = max_seen;
  } else {
    // The (allowed+1)-th smallest cross distance must stay outside theta.
    double limit = diff[allowed];
    if (limit <= 0)
      throw CalibrationError("calibrate_theta: no threshold meets the false-match bound", rate(diff, 0.0));
    c.theta = std::nextafter(limit, 0.0);
  }
  c.false_match_rate = rate(diff, c.theta);
  c.true_match_rate = rate(same, c.theta);
  return c;
}

} // namespace ndnreuse

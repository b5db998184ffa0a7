#pragma once

#include "ndnreuse/common.hpp"
#include "ndnreuse/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace ndnreuse {

struct HnswParams {
  std::size_t M = 5;               ///< max neighbors per node on layers > 0
  std::size_t M_max0 = 0;          ///< max neighbors on layer 0; 0 means 2*M
  std::size_t ef_construction = 10;
  std::size_t ef_search = 50;
  double mL = 0;                   ///< level multiplier; 0 means 1/ln(M)

  HnswParams resolved() const
  {
    HnswParams p = *this;
    if (p.M_max0 == 0)
      p.M_max0 = 2 * p.M;
    if (p.mL == 0 && p.M > 1)
      p.mL = 1.0 / std::log(static_cast<double>(p.M));
    return p;
  }

  void validate() const
  {
    if (M < 2)
      throw std::invalid_argument("HnswParams: M must be >= 2");
    if (ef_construction < M)
      throw std::invalid_argument("HnswParams: ef_construction must be >= M");
    if (ef_search < 1)
      throw std::invalid_argument("HnswParams: ef_search must be >= 1");
    if (mL < 0)
      throw std::invalid_argument("HnswParams: mL must be positive");
  }
};

struct Neighbor {
  std::uint64_t id = 0;
  double distance = 0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct AuditReport {
  bool ok = true;
  std::string problem;
};

/// Exact k nearest by linear scan. `items` is a range of (id, vector) pairs;
/// ties are broken by smaller id.
template <typename Range>
std::vector<Neighbor>
brute_force_knn(const Range& items, std::span<const float> query, std::size_t k)
{
  std::vector<std::pair<float, std::uint64_t>> all;
  for (const auto& [id, v] : items)
    all.emplace_back(squared_distance(std::span<const float>(v), query), id);
  std::size_t n = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end());
  std::vector<Neighbor> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({all[i].second, std::sqrt(static_cast<double>(all[i].first))});
  return out;
}

/// Hierarchical navigable small-world graph over fixed-dimension float
/// vectors, L2 metric.
///
/// Neighbor lists keep the closest M (M_max0 on layer 0) candidates and are
/// kept symmetric: when a list overflows, the pruned edge is removed from both
/// endpoints. Removal is by tombstone; tombstoned nodes keep routing searches
/// but are never returned. Searches may run concurrently with each other, not
/// with insert/remove.
class HnswIndex {
public:
  explicit HnswIndex(std::size_t dim, HnswParams params = {}, std::uint64_t seed = 42)
    : m_dim(dim), m_params(params.resolved()), m_seed(seed), m_rng(seed), m_pool(std::make_unique<VisitPool>())
  {
    if (dim == 0)
      throw std::invalid_argument("HnswIndex: zero dimension");
    m_params.validate();
  }

  HnswIndex(HnswIndex&&) noexcept = default;
  HnswIndex& operator=(HnswIndex&&) noexcept = default;

  std::size_t dim() const noexcept { return m_dim; }
  const HnswParams& params() const noexcept { return m_params; }
  std::size_t size() const noexcept { return m_live; }
  std::size_t tombstones() const noexcept { return m_nodes.size() - m_live; }
  std::size_t total_nodes() const noexcept { return m_nodes.size(); }
  int max_level() const noexcept { return m_max_level; }

  std::optional<std::uint64_t> entry_point() const
  {
    if (!m_entry)
      return std::nullopt;
    return m_nodes[*m_entry].id;
  }

  bool contains(std::uint64_t id) const
  {
    auto it = m_slot.find(id);
    return it != m_slot.end() && !m_nodes[it->second].deleted;
  }

  /// floor(-ln(u) * mL) for u in (0, 1].
  static int level_for(double u, double mL) { return static_cast<int>(std::floor(-std::log(u) * mL)); }

  int assign_level() { return level_for(m_rng.uniform_pos(), m_params.mL); }

  void insert(std::uint64_t id, std::span<const float> v) { insert(id, v, assign_level()); }

  void insert(std::uint64_t id, std::span<const float> v, int level)
  {
    if (v.size() != m_dim)
      throw std::invalid_argument("HnswIndex::insert: dimension mismatch");
    if (m_slot.count(id))
      throw std::invalid_argument("HnswIndex::insert: duplicate id " + std::to_string(id));
    if (level < 0)
      throw std::invalid_argument("HnswIndex::insert: negative level");

    auto slot = static_cast<std::uint32_t>(m_nodes.size());
    m_nodes.push_back({id, level, false, std::vector<std::vector<std::uint32_t>>(static_cast<std::size_t>(level) + 1)});
    m_data.insert(m_data.end(), v.begin(), v.end());
    m_slot.emplace(id, slot);
    ++m_live;

    if (!m_entry) {
      m_entry = slot;
      m_max_level = level;
      return;
    }

    std::uint32_t ep = *m_entry;
    for (int layer = m_max_level; layer > level; --layer)
      ep = greedy_closest(v, ep, layer);

    std::vector<std::uint32_t> eps{ep};
    for (int layer = std::min(level, m_max_level); layer >= 0; --layer) {
      auto found = search_layer(v, eps, m_params.ef_construction, layer, false);
      std::size_t cap = layer_cap(layer);
      auto& mine = m_nodes[slot].links[static_cast<std::size_t>(layer)];
      for (std::size_t i = 0; i < found.size() && mine.size() < cap; ++i)
        if (found[i].slot != slot)
          mine.push_back(found[i].slot);
      auto selected = mine;
      for (std::uint32_t e : selected) {
        m_nodes[e].links[static_cast<std::size_t>(layer)].push_back(slot);
        shrink(e, layer);
      }
      eps.clear();
      for (const auto& c : found)
        eps.push_back(c.slot);
    }

    if (level > m_max_level) {
      m_max_level = level;
      m_entry = slot;
    }
  }

  /// k nearest live nodes, nearest first, ties by smaller id. ef == 0 uses
  /// params().ef_search.
  std::vector<Neighbor> search_knn(std::span<const float> query, std::size_t k, std::size_t ef = 0) const
  {
    if (k == 0)
      throw std::invalid_argument("search_knn: k must be >= 1");
    if (query.size() != m_dim)
      throw std::invalid_argument("search_knn: dimension mismatch");
    std::vector<Neighbor> out;
    if (!m_entry || m_live == 0)
      return out;
    if (ef == 0)
      ef = m_params.ef_search;
    ef = std::max(ef, k);

    std::uint32_t ep = *m_entry;
    for (int layer = m_max_level; layer > 0; --layer)
      ep = greedy_closest(query, ep, layer);
    auto found = search_layer(query, {ep}, ef, 0, true);
    for (std::size_t i = 0; i < found.size() && out.size() < k; ++i)
      out.push_back({found[i].id, std::sqrt(static_cast<double>(found[i].d))});
    return out;
  }

  void remove(std::uint64_t id)
  {
    auto it = m_slot.find(id);
    if (it == m_slot.end() || m_nodes[it->second].deleted)
      throw std::invalid_argument("HnswIndex::remove: unknown id " + std::to_string(id));
    m_nodes[it->second].deleted = true;
    --m_live;
    if (m_entry && *m_entry == it->second)
      reassign_entry();
  }

  /// More than half of all nodes are tombstones.
  bool needs_rebuild() const noexcept { return tombstones() * 2 > m_nodes.size(); }

  /// Fresh index over the live nodes, inserted in ascending id order.
  HnswIndex rebuild() const
  {
    HnswIndex fresh(m_dim, m_params, derive_seed(m_seed, m_generation + 1));
    fresh.m_generation = m_generation + 1;
    std::vector<std::pair<std::uint64_t, std::uint32_t>> live;
    for (std::uint32_t s = 0; s < m_nodes.size(); ++s)
      if (!m_nodes[s].deleted)
        live.emplace_back(m_nodes[s].id, s);
    std::sort(live.begin(), live.end());
    for (auto [id, s] : live)
      fresh.insert(id, vec(s));
    return fresh;
  }

  std::span<const float> vector(std::uint64_t id) const { return vec(m_slot.at(id)); }

  /// Neighbor ids of `id` on `layer` (empty above the node's level).
  std::vector<std::uint64_t> neighbors(std::uint64_t id, int layer) const
  {
    const auto& n = m_nodes[m_slot.at(id)];
    std::vector<std::uint64_t> out;
    if (layer <= n.level)
      for (auto s : n.links[static_cast<std::size_t>(layer)])
        out.push_back(m_nodes[s].id);
    return out;
  }

  int level_of(std::uint64_t id) const { return m_nodes[m_slot.at(id)].level; }

  /// Degree caps, symmetry, layer containment and entry-point liveness.
  AuditReport audit() const
  {
    auto fail = [](std::string msg) { return AuditReport{false, std::move(msg)}; };
    for (std::uint32_t s = 0; s < m_nodes.size(); ++s) {
      const auto& n = m_nodes[s];
      if (n.links.size() != static_cast<std::size_t>(n.level) + 1)
        return fail("node " + std::to_string(n.id) + " has links outside its layers");
      for (int layer = 0; layer <= n.level; ++layer) {
        const auto& adj = n.links[static_cast<std::size_t>(layer)];
        if (adj.size() > layer_cap(layer))
          return fail("node " + std::to_string(n.id) + " exceeds degree cap on layer " + std::to_string(layer));
        for (std::size_t i = 0; i < adj.size(); ++i) {
          auto t = adj[i];
          if (t == s)
            return fail("self loop at node " + std::to_string(n.id));
          if (std::find(adj.begin() + static_cast<std::ptrdiff_t>(i) + 1, adj.end(), t) != adj.end())
            return fail("duplicate edge at node " + std::to_string(n.id));
          const auto& other = m_nodes[t];
          if (other.level < layer)
            return fail("edge to node " + std::to_string(other.id) + " above its top level");
          const auto& back = other.links[static_cast<std::size_t>(layer)];
          if (std::find(back.begin(), back.end(), s) == back.end())
            return fail("asymmetric edge " + std::to_string(n.id) + "->" + std::to_string(other.id) + " on layer " +
                        std::to_string(layer));
        }
      }
    }
    if (m_live > 0) {
      if (!m_entry || m_nodes[*m_entry].deleted)
        return fail("entry point missing or tombstoned while live nodes exist");
      if (m_nodes[*m_entry].level != m_max_level)
        return fail("entry point level differs from max level");
    }
    return {};
  }

private:
  struct Node {
    std::uint64_t id;
    int level;
    bool deleted;
    std::vector<std::vector<std::uint32_t>> links;
  };

  struct Cand {
    float d;
    std::uint64_t id;
    std::uint32_t slot;
  };
  struct Closer {
    bool operator()(const Cand& a, const Cand& b) const { return a.d < b.d || (a.d == b.d && a.id < b.id); }
  };
  struct Farther {
    bool operator()(const Cand& a, const Cand& b) const { return Closer{}(b, a); }
  };

  struct VisitList {
    std::vector<std::uint32_t> mark;
    std::uint32_t gen = 0;
  };
  struct VisitPool {
    std::mutex mutex;
    std::vector<std::unique_ptr<VisitList>> free;
  };

  class VisitGuard {
  public:
    VisitGuard(VisitPool& pool, std::size_t n) : m_pool(pool)
    {
      {
        std::lock_guard lock(pool.mutex);
        if (!pool.free.empty()) {
          m_list = std::move(pool.free.back());
          pool.free.pop_back();
        }
      }
      if (!m_list)
        m_list = std::make_unique<VisitList>();
      if (m_list->mark.size() < n)
        m_list->mark.resize(n, 0);
      if (++m_list->gen == 0) {
        std::fill(m_list->mark.begin(), m_list->mark.end(), 0);
        m_list->gen = 1;
      }
    }
    ~VisitGuard()
    {
      std::lock_guard lock(m_pool.mutex);
      m_pool.free.push_back(std::move(m_list));
    }
    VisitGuard(const VisitGuard&) = delete;
    VisitGuard& operator=(const VisitGuard&) = delete;

    bool test_and_set(std::uint32_t s)
    {
      if (m_list->mark[s] == m_list->gen)
        return true;
      m_list->mark[s] = m_list->gen;
      return false;
    }

  private:
    VisitPool& m_pool;
    std::unique_ptr<VisitList> m_list;
  };

  std::size_t layer_cap(int layer) const noexcept { return layer == 0 ? m_params.M_max0 : m_params.M; }

  std::span<const float> vec(std::uint32_t slot) const
  {
    return {m_data.data() + static_cast<std::size_t>(slot) * m_dim, m_dim};
  }

  float dist(std::span<const float> q, std::uint32_t slot) const { return squared_distance(q, vec(slot)); }

  std::uint32_t greedy_closest(std::span<const float> q, std::uint32_t ep, int layer) const
  {
    float best = dist(q, ep);
    for (bool moved = true; moved;) {
      moved = false;
      for (auto s : m_nodes[ep].links[static_cast<std::size_t>(layer)]) {
        float d = dist(q, s);
        if (d < best) {
          best = d;
          ep = s;
          moved = true;
        }
      }
    }
    return ep;
  }

  /// Best-first search bounded by ef; returns results nearest first. With
  /// live_only, tombstones are expanded but excluded from the result set.
  std::vector<Cand> search_layer(std::span<const float> q, const std::vector<std::uint32_t>& eps, std::size_t ef,
                                 int layer, bool live_only) const
  {
    VisitGuard visited(*m_pool, m_nodes.size());
    std::priority_queue<Cand, std::vector<Cand>, Farther> candidates; // nearest on top
    std::priority_queue<Cand, std::vector<Cand>, Closer> results;     // farthest on top
    auto bound = [&] {
      return results.empty() ? std::numeric_limits<float>::infinity() : results.top().d;
    };

    for (auto s : eps) {
      if (visited.test_and_set(s))
        continue;
      Cand c{dist(q, s), m_nodes[s].id, s};
      candidates.push(c);
      if (!live_only || !m_nodes[s].deleted) {
        results.push(c);
        if (results.size() > ef)
          results.pop();
      }
    }

    while (!candidates.empty()) {
      Cand c = candidates.top();
      if (c.d > bound() && results.size() >= ef)
        break;
      candidates.pop();
      for (auto s : m_nodes[c.slot].links[static_cast<std::size_t>(layer)]) {
        if (visited.test_and_set(s))
          continue;
        float d = dist(q, s);
        if (results.size() < ef || d < bound()) {
          Cand e{d, m_nodes[s].id, s};
          candidates.push(e);
          if (!live_only || !m_nodes[s].deleted) {
            results.push(e);
            if (results.size() > ef)
              results.pop();
          }
        }
      }
    }

    std::vector<Cand> out(results.size());
    for (auto i = out.size(); i-- > 0; results.pop())
      out[i] = results.top();
    return out;
  }

  void unlink(std::uint32_t a, std::uint32_t b, int layer)
  {
    auto& adj = m_nodes[a].links[static_cast<std::size_t>(layer)];
    adj.erase(std::remove(adj.begin(), adj.end(), b), adj.end());
  }

  /// Trims an over-full list to its cap, dropping the farthest neighbors and
  /// the matching reverse edges. Neighbors whose only edge is this one are
  /// skipped while others are available, so no node is cut off.
  void shrink(std::uint32_t slot, int layer)
  {
    auto& adj = m_nodes[slot].links[static_cast<std::size_t>(layer)];
    std::size_t cap = layer_cap(layer);
    if (adj.size() <= cap)
      return;
    auto from = vec(slot);
    std::vector<Cand> ranked;
    for (auto s : adj)
      ranked.push_back({dist(from, s), m_nodes[s].id, s});
    std::sort(ranked.begin(), ranked.end(), Closer{});

    std::size_t excess = ranked.size() - cap;
    std::vector<bool> drop(ranked.size(), false);
    for (std::size_t i = ranked.size(); i-- > 0 && excess > 0;) {
      if (m_nodes[ranked[i].slot].links[static_cast<std::size_t>(layer)].size() > 1) {
        drop[i] = true;
        --excess;
      }
    }
    for (std::size_t i = ranked.size(); i-- > 0 && excess > 0;) {
      if (!drop[i]) {
        drop[i] = true;
        --excess;
      }
    }

    adj.clear();
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      if (drop[i])
        unlink(ranked[i].slot, slot, layer);
      else
        adj.push_back(ranked[i].slot);
    }
  }

  void reassign_entry()
  {
    std::optional<std::uint32_t> best;
    for (std::uint32_t s = 0; s < m_nodes.size(); ++s) {
      const auto& n = m_nodes[s];
      if (n.deleted)
        continue;
      if (!best || n.level > m_nodes[*best].level ||
          (n.level == m_nodes[*best].level && n.id < m_nodes[*best].id))
        best = s;
    }
    m_entry = best;
    m_max_level = best ? m_nodes[*best].level : -1;
  }

  std::size_t m_dim;
  HnswParams m_params;
  std::uint64_t m_seed;
  std::uint64_t m_generation = 0;
  Rng m_rng;
  std::vector<float> m_data;
  std::vector<Node> m_nodes;
  std::unordered_map<std::uint64_t, std::uint32_t> m_slot;
  std::optional<std::uint32_t> m_entry;
  int m_max_level = -1;
  std::size_t m_live = 0;
  std::unique_ptr<VisitPool> m_pool;
};

} // namespace ndnreuse

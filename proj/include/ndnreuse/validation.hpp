#pragma once

#include "ndnreuse/model.hpp"
#include "ndnreuse/sim.hpp"

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ndnreuse {

/// Model inputs that the closed form cannot supply on its own.
struct Estimates {
  std::vector<double> first_hop_miss;   ///< p_k(1) by class, at the first node of the path
  std::map<std::string, double> P_S;    ///< full-reuse probability at each service's producer
  double P_CN = 1;                      ///< fraction of requests answered by a producer
};

/// Pools counters over runs: p_k(1) from the first node past the consumer,
/// P_S from CS hits over probes at each producer, P_CN from the answering
/// node of satisfied requests.
inline Estimates
estimate(const SimConfig& cfg, const std::vector<Metrics>& runs)
{
  const auto& topo = cfg.topo;
  NodeId consumer = topo.consumers().front();
  auto first = topo.path(consumer, topo.services.front().producer).at(1);
  auto K = static_cast<std::size_t>(cfg.zipf.K);

  std::vector<std::uint64_t> probes(K, 0), hits(K, 0);
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> at_producer;
  std::uint64_t satisfied = 0, by_producer = 0;
  for (const auto& m : runs) {
    const auto& nm = m.nodes.at(static_cast<std::size_t>(first));
    for (std::size_t k = 0; k < K; ++k) {
      probes[k] += nm.class_probes.at(k);
      hits[k] += nm.class_hits.at(k);
    }
    for (const auto& s : topo.services) {
      const auto& pn = m.nodes.at(static_cast<std::size_t>(s.producer));
      auto it = pn.service_probes_hits.find(s.name);
      if (it != pn.service_probes_hits.end()) {
        at_producer[s.name].first += it->second.first;
        at_producer[s.name].second += it->second.second;
      }
    }
    for (const auto& r : m.requests) {
      if (r.status != RequestStatus::Satisfied)
        continue;
      ++satisfied;
      if (r.answered_by == topo.services.at(r.service).producer)
        ++by_producer;
    }
  }

  Estimates e;
  for (std::size_t k = 0; k < K; ++k)
    e.first_hop_miss.push_back(probes[k] ? 1.0 - static_cast<double>(hits[k]) / static_cast<double>(probes[k]) : 1.0);
  for (const auto& s : topo.services) {
    auto [p, h] = at_producer[s.name];
    e.P_S[s.name] = p ? static_cast<double>(h) / static_cast<double>(p) : 0.0;
  }
  e.P_CN = satisfied ? static_cast<double>(by_producer) / static_cast<double>(satisfied) : 1.0;
  return e;
}

/// Closed-form parameters for one service path of a scenario.
inline ModelParams
model_params(const SimConfig& cfg, std::size_t service = 0, std::size_t per_class = 800)
{
  const auto& topo = cfg.topo;
  const auto& svc = topo.services.at(service);
  auto path = topo.path(topo.consumers().front(), svc.producer);
  const auto& producer = topo.nodes.at(static_cast<std::size_t>(svc.producer));

  ModelParams p;
  p.alpha = cfg.zipf.alpha;
  p.K = cfg.zipf.K;
  p.m = static_cast<double>(per_class);
  p.lambda = mean_rate(cfg.arrivals);
  p.c = producer.servers;
  p.C_cn = producer.flops;
  p.b_cn = topo.link(path[path.size() - 2], path.back())->bandwidth_bps;
  p.b_cs = topo.link(path[0], path[1])->bandwidth_bps;
  p.P = cfg.packet_bits;
  p.j = cfg.mode == ReuseMode::None ? 0 : 1;
  p.l = cfg.mode == ReuseMode::None ? 0.0 : cfg.cache.search_cost_s;
  p.x = cfg.mode == ReuseMode::None ? 0.0 : static_cast<double>(topo.nodes.at(static_cast<std::size_t>(path[1])).cache_capacity);
  p.n = static_cast<int>(path.size()) - 1;
  p.task = cfg.task;
  p.f = 0;
  return p;
}

struct PathPrediction {
  std::string service;
  double weight = 0;
  std::vector<NodeId> path;    ///< excludes the consumer
  std::vector<double> c_total; ///< cost when node i answers
  MissMatrix miss;
  double P_S = 0;
  double vrtt = 0;
};

struct Prediction {
  Estimates inputs;
  std::vector<PathPrediction> paths;
  double completion = 0; ///< weight-averaged VRTT over services
};

/// Expected completion time per service path.
///
/// Node i's cost is the round-trip propagation and per-hop transfer of the
/// hops before it, the search cost of the caches it passed, and its own
/// total cost from the closed form: a router answers by full reuse
/// (P_CN = 0, P_S = 1); the producer answers with P_CN = 1 and its measured
/// full-reuse probability. Per-class miss rates start from the measured
/// first-hop values and follow the cascade recursion downstream; the
/// producer always answers.
inline Prediction
predict(const SimConfig& cfg, const Estimates& est, std::size_t per_class = 800)
{
  const auto& topo = cfg.topo;
  double wsum = 0;
  for (const auto& s : topo.services)
    wsum += s.weight;

  Prediction out;
  out.inputs = est;
  for (std::size_t si = 0; si < topo.services.size(); ++si) {
    const auto& svc = topo.services[si];
    auto full = topo.path(topo.consumers().front(), svc.producer);
    ModelParams base = model_params(cfg, si, per_class);

    PathPrediction pp;
    pp.service = svc.name;
    pp.weight = svc.weight / wsum;
    pp.path.assign(full.begin() + 1, full.end());
    pp.P_S = cfg.mode == ReuseMode::None ? 0.0 : est.P_S.count(svc.name) ? est.P_S.at(svc.name) : 0.0;

    double prop = 0, transfer = 0, searched = 0;
    for (std::size_t i = 1; i < full.size(); ++i) {
      const auto* link = topo.link(full[i - 1], full[i]);
      const auto& node = topo.nodes.at(static_cast<std::size_t>(full[i]));
      bool last = i + 1 == full.size();

      ModelParams p = base;
      p.b_cn = p.b_cs = link->bandwidth_bps;
      if (last) {
        p.P_CN = 1;
        p.P_S = pp.P_S;
      } else {
        p.P_CN = 0;
        p.P_S = 1;
      }
      prop += link->delay_s;
      pp.c_total.push_back(2 * prop + transfer + searched + total_cost(p));
      transfer += (cfg.task.input_bits + cfg.task.output_bits) / link->bandwidth_bps;
      bool probes = cfg.mode != ReuseMode::None && node.cache_capacity > 0;
      if (probes)
        searched += cfg.cache.search_cost_s;
    }

    ModelParams mp = base;
    if (cfg.mode == ReuseMode::None) {
      pp.miss.assign(static_cast<std::size_t>(mp.K), std::vector<double>(static_cast<std::size_t>(mp.n), 1.0));
    } else {
      pp.miss = miss_matrix(mp, est.first_hop_miss);
    }
    pp.vrtt = vrtt(mp, pp.c_total, pp.miss);
    out.completion += pp.weight * pp.vrtt;
    out.paths.push_back(std::move(pp));
  }
  return out;
}

inline double
relative_error(double model, double sim)
{
  if (sim == 0)
    return model == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::abs(model - sim) / std::abs(sim);
}

struct CompareRow {
  double value = 0;
  double sim_mean = 0;
  double model = 0;
  double rel_error = 0;
};

} // namespace ndnreuse

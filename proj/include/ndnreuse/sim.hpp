#pragma once

#include "ndnreuse/common.hpp"
#include "ndnreuse/descriptor.hpp"
#include "ndnreuse/model.hpp"
#include "ndnreuse/ndn.hpp"
#include "ndnreuse/similarity_cache.hpp"
#include "ndnreuse/workload.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <queue>
#include <string>
#include <thread>
#include <unordered_map>
#include <variant>
#include <vector>

namespace ndnreuse {

enum class ReuseMode { Similarity, Exact, None };
enum class CachePolicy { Everywhere, Edge };
enum class ServiceDist { Deterministic, Exponential };

inline const char*
to_string(ReuseMode m)
{
  switch (m) {
  case ReuseMode::Similarity: return "similarity";
  case ReuseMode::Exact: return "exact";
  case ReuseMode::None: return "none";
  }
  return "?";
}

inline ReuseMode
parse_mode(std::string_view s)
{
  if (s == "similarity" || s == "similarity_reuse")
    return ReuseMode::Similarity;
  if (s == "exact" || s == "exact_match")
    return ReuseMode::Exact;
  if (s == "none" || s == "no_reuse")
    return ReuseMode::None;
  throw ConfigError("unknown mode '" + std::string(s) + "' (similarity|exact|none)");
}

// ---------------------------------------------------------------------------
// Topology

struct NodeSpec {
  std::string name;
  NodeKind kind = NodeKind::Router;
  std::size_t cache_capacity = 0;
  int servers = 4;       ///< c, compute nodes only
  double flops = 1e9;    ///< C_CN, compute nodes only
};

struct LinkSpec {
  NodeId a = 0;
  NodeId b = 0;
  double delay_s = 0.01;
  double bandwidth_bps = 10e6;
};

struct ServiceSpec {
  std::string name;
  NodeId producer = 0;
  double weight = 1;
};

struct Topology {
  std::vector<NodeSpec> nodes;
  std::vector<LinkSpec> links;
  std::vector<ServiceSpec> services;

  NodeId find(std::string_view name) const
  {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].name == name)
        return static_cast<NodeId>(i);
    return -1;
  }

  const LinkSpec* link(NodeId a, NodeId b) const
  {
    for (const auto& l : links)
      if ((l.a == a && l.b == b) || (l.a == b && l.b == a))
        return &l;
    return nullptr;
  }

  std::vector<NodeId> neighbors(NodeId a) const
  {
    std::vector<NodeId> out;
    for (const auto& l : links) {
      if (l.a == a)
        out.push_back(l.b);
      else if (l.b == a)
        out.push_back(l.a);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Fewest-hop path from -> to inclusive (BFS, lower ids first); empty when
  /// unreachable.
  std::vector<NodeId> path(NodeId from, NodeId to) const
  {
    std::vector<NodeId> prev(nodes.size(), -2);
    std::deque<NodeId> q{from};
    prev[static_cast<std::size_t>(from)] = -1;
    while (!q.empty()) {
      NodeId u = q.front();
      q.pop_front();
      if (u == to)
        break;
      for (NodeId v : neighbors(u)) {
        if (prev[static_cast<std::size_t>(v)] == -2) {
          prev[static_cast<std::size_t>(v)] = u;
          q.push_back(v);
        }
      }
    }
    if (prev[static_cast<std::size_t>(to)] == -2)
      return {};
    std::vector<NodeId> p;
    for (NodeId v = to; v != -1; v = prev[static_cast<std::size_t>(v)])
      p.push_back(v);
    std::reverse(p.begin(), p.end());
    return p;
  }

  std::vector<NodeId> consumers() const
  {
    std::vector<NodeId> out;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].kind == NodeKind::Consumer)
        out.push_back(static_cast<NodeId>(i));
    return out;
  }

  std::size_t service_index(std::string_view name) const
  {
    for (std::size_t i = 0; i < services.size(); ++i)
      if (services[i].name == name)
        return i;
    return services.size();
  }

  void validate() const
  {
    if (nodes.empty())
      throw ConfigError("topology: no nodes");
    auto in_range = [&](NodeId v) { return v >= 0 && static_cast<std::size_t>(v) < nodes.size(); };
    for (const auto& n : nodes) {
      if (n.kind == NodeKind::Consumer && n.cache_capacity > 0)
        throw ConfigError("topology: consumer '" + n.name + "' must not have a cache");
      if (n.kind == NodeKind::ComputeNode && (n.servers < 1 || !(n.flops > 0)))
        throw ConfigError("topology: compute node '" + n.name + "' needs servers >= 1 and flops > 0");
    }
    for (const auto& l : links) {
      if (!in_range(l.a) || !in_range(l.b) || l.a == l.b)
        throw ConfigError("topology: link endpoints invalid");
      if (!(l.delay_s > 0) || !(l.bandwidth_bps > 0))
        throw ConfigError("topology: link " + nodes[l.a].name + "-" + nodes[l.b].name +
                          " needs positive delay and bandwidth");
    }
    for (std::size_t i = 1; i < nodes.size(); ++i)
      if (path(0, static_cast<NodeId>(i)).empty())
        throw ConfigError("topology: node '" + nodes[i].name + "' is not connected");
    if (consumers().empty())
      throw ConfigError("topology: no consumer");
    if (services.empty())
      throw ConfigError("topology: no service");
    double wsum = 0;
    for (const auto& s : services) {
      if (s.name.empty() || s.name.find('/') != std::string::npos)
        throw ConfigError("topology: invalid service name '" + s.name + "'");
      if (!in_range(s.producer) || nodes[s.producer].kind != NodeKind::ComputeNode)
        throw ConfigError("topology: producer of service '" + s.name + "' is not a compute node");
      if (!(s.weight >= 0))
        throw ConfigError("topology: negative service weight");
      wsum += s.weight;
    }
    if (!(wsum > 0))
      throw ConfigError("topology: service weights sum to zero");
  }
};

/// Consumer - R1 - R2 - R3 - CN1, 10 ms links at 10 Mb/s.
inline Topology
build_scenario1()
{
  Topology t;
  t.nodes = {{"consumer", NodeKind::Consumer, 0, 0, 0},
             {"R1", NodeKind::Router, 100, 0, 0},
             {"R2", NodeKind::Router, 100, 0, 0},
             {"R3", NodeKind::Router, 100, 0, 0},
             {"CN1", NodeKind::ComputeNode, 12000, 4, 1e9}};
  for (NodeId i = 0; i < 4; ++i)
    t.links.push_back({i, i + 1, 0.010, 10e6});
  t.services = {{"recognition", 4, 1.0}};
  return t;
}

/// Consumer - R1 - CN1 - R2 - CN2 with 5/10/15/20 ms links; CN1 serves
/// "recognition" and sits on the path to CN2, which serves "detection".
inline Topology
build_scenario2()
{
  Topology t;
  t.nodes = {{"consumer", NodeKind::Consumer, 0, 0, 0},
             {"R1", NodeKind::Router, 100, 0, 0},
             {"CN1", NodeKind::ComputeNode, 10000, 4, 1e9},
             {"R2", NodeKind::Router, 100, 0, 0},
             {"CN2", NodeKind::ComputeNode, 12000, 4, 1e9}};
  const double delays[] = {0.005, 0.010, 0.015, 0.020};
  for (NodeId i = 0; i < 4; ++i)
    t.links.push_back({i, i + 1, delays[i], 10e6});
  t.services = {{"recognition", 2, 0.5}, {"detection", 4, 0.5}};
  return t;
}

// ---------------------------------------------------------------------------
// Configuration and results

struct CacheConfig {
  double theta = 0.33;
  HnswParams hnsw;
  double search_cost_s = 0.001; ///< l, charged per CS probe
  CachePolicy policy = CachePolicy::Everywhere;
};

struct SimConfig {
  Topology topo = build_scenario1();
  ZipfSpec zipf;
  ArrivalProcess arrivals = PoissonArrivals{40};
  std::size_t requests = 2000; ///< per consumer
  double duration_s = 0;       ///< stop emitting after this time; 0 = no limit
  TaskSpec task;
  ServiceDist service_dist = ServiceDist::Deterministic;
  CacheConfig cache;
  ReuseMode mode = ReuseMode::Similarity;
  double packet_bits = 81920;
  double pit_timeout_s = 4;
  bool keep_log = true;

  void validate() const
  {
    topo.validate();
    zipf.validate();
    task.validate();
    if (auto* m = std::get_if<MmppArrivals>(&arrivals))
      m->validate();
    else if (!(std::get<PoissonArrivals>(arrivals).lambda > 0))
      throw ConfigError("workload: lambda must be positive");
    if (requests == 0 && !(duration_s > 0))
      throw ConfigError("workload: need requests > 0 or duration > 0");
    if (cache.theta < 0 || !(cache.search_cost_s >= 0))
      throw ConfigError("cache: theta and search_cost must be >= 0");
    cache.hnsw.resolved().validate();
    if (!(packet_bits > 0) || !(pit_timeout_s > 0))
      throw ConfigError("packet_bits and pit_timeout must be positive");
  }
};

/// Dataset plus the descriptor of every record, shared read-only by all
/// nodes of all runs.
class Workload {
public:
  explicit Workload(const Dataset& ds) : m_ds(&ds)
  {
    m_desc.reserve(ds.size());
    for (const auto& r : ds.records)
      m_desc.push_back(describe_image(r.pixels));
  }

  const Dataset& dataset() const noexcept { return *m_ds; }
  const Descriptor& descriptor(std::size_t record_index) const { return m_desc.at(record_index); }

  const Descriptor* resolve(const Name& n) const
  {
    if (n.size() != 3)
      return nullptr;
    auto id = parse_image_name(n.components[2]);
    if (id < 0)
      return nullptr;
    auto idx = m_ds->find(static_cast<std::uint32_t>(id));
    return idx < 0 ? nullptr : &m_desc[static_cast<std::size_t>(idx)];
  }

private:
  const Dataset* m_ds;
  std::vector<Descriptor> m_desc;
};

enum class RequestStatus { Pending, Satisfied, Dropped };

struct RequestRecord {
  std::uint64_t seq = 0;
  std::uint64_t nonce = 0;
  NodeId consumer = 0;
  std::string name;
  std::size_t service = 0;
  int class_id = 0;
  std::uint32_t content_id = 0;
  double emit = 0;
  double done = std::numeric_limits<double>::quiet_NaN();
  RequestStatus status = RequestStatus::Pending;
  NodeId answered_by = -1;
  bool from_reuse = false;
  bool result_correct = false;

  double completion() const { return done - emit; }
};

struct NodeMetrics {
  std::string name;
  NodeKind kind = NodeKind::Router;
  CacheStats cs;
  std::uint64_t probes = 0;
  std::uint64_t hits = 0;
  std::vector<std::uint64_t> class_probes; ///< by class_id - 1
  std::vector<std::uint64_t> class_hits;
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> service_probes_hits;
  std::uint64_t interests_in = 0;
  std::uint64_t executions = 0;
  double exec_wait_total = 0;
  double busy_time = 0;

  double mean_exec_wait() const { return executions ? exec_wait_total / static_cast<double>(executions) : 0.0; }
};

struct Metrics {
  std::uint64_t seed = 0;
  int rep = 0;
  std::string rng_algorithm{Rng::algorithm};
  std::vector<RequestRecord> requests;
  std::vector<NodeMetrics> nodes;
  std::uint64_t emitted = 0, satisfied = 0, dropped = 0, pending = 0;
  double mean_completion = 0, p50 = 0, p95 = 0;
  double hit_rate = 0;       ///< satisfied requests answered from a CS
  double reuse_accuracy = 0; ///< of those, fraction with the correct result
  double mean_search_time = 0;
  double mean_exec_wait = 0;
  double end_time = 0;
  std::uint64_t events = 0;
};

struct RunResult {
  Metrics metrics;
  std::vector<LogRecord> log;
};

namespace detail {

struct EvEmit {
  NodeId consumer;
};
struct EvArrive {
  NodeId node;
  FaceId from;
  std::variant<Interest, Data> msg;
};
struct EvProbe {
  NodeId node;
  FaceId from;
  Interest interest;
};
struct EvExecDone {
  NodeId node;
  Interest interest;
  double enqueued;
  double started;
};
struct EvPitExpire {
  NodeId node;
  Name name;
  double created;
};

using EvPayload = std::variant<EvEmit, EvArrive, EvProbe, EvExecDone, EvPitExpire>;

struct Event {
  double time;
  std::uint64_t seq;
  EvPayload payload;
};

struct EventLater {
  bool operator()(const Event& a, const Event& b) const
  {
    if (a.time != b.time)
      return a.time > b.time;
    return a.seq > b.seq;
  }
};

class Simulation {
public:
  Simulation(const SimConfig& cfg, const Workload& wl, std::uint64_t seed)
    : m_cfg(cfg), m_wl(wl), m_seed(seed), m_sampler(wl.dataset(), cfg.zipf)
  {
    cfg.validate();
    if (cfg.zipf.K != wl.dataset().K)
      throw ConfigError("workload: zipf K differs from the dataset class count");
    const auto& topo = cfg.topo;
    std::size_t n = topo.nodes.size();
    auto resolver = [&w = m_wl](const Name& name) { return w.resolve(name); };

    for (std::size_t i = 0; i < n; ++i) {
      const auto& spec = topo.nodes[i];
      NdnNode node(static_cast<NodeId>(i), spec.kind, resolver);
      if (cfg.mode != ReuseMode::None && spec.kind != NodeKind::Consumer && spec.cache_capacity > 0) {
        double theta = cfg.mode == ReuseMode::Exact ? 0.0 : cfg.cache.theta;
        node.set_cs(SimilarityCache(spec.cache_capacity, theta, cfg.cache.hnsw, derive_seed(seed, 1000 + i)));
      }
      node.set_caches_data(cfg.cache.policy == CachePolicy::Everywhere || spec.kind == NodeKind::ComputeNode);
      if (cfg.keep_log)
        node.set_logger([this](const LogRecord& r) { m_log.push_back(r); });
      m_nodes.push_back(std::move(node));

      NodeMetrics nm;
      nm.name = spec.name;
      nm.kind = spec.kind;
      nm.class_probes.assign(static_cast<std::size_t>(cfg.zipf.K), 0);
      nm.class_hits.assign(static_cast<std::size_t>(cfg.zipf.K), 0);
      m_metrics.nodes.push_back(std::move(nm));
    }
    m_servers.resize(n);
    m_queues.resize(n);

    // FIB: next hop towards each service's producer.
    for (const auto& svc : topo.services) {
      m_nodes[static_cast<std::size_t>(svc.producer)].serve(svc.name);
      for (std::size_t i = 0; i < n; ++i) {
        if (static_cast<NodeId>(i) == svc.producer)
          continue;
        auto p = topo.path(static_cast<NodeId>(i), svc.producer);
        if (p.size() < 2)
          throw ConfigError("topology: no route from " + topo.nodes[i].name + " to producer of " + svc.name);
        m_nodes[i].fib().add(Name{{svc.name}}, p[1]);
      }
    }

    double wsum = 0;
    for (const auto& s : topo.services)
      m_service_cdf.push_back(wsum += s.weight);
    for (double& v : m_service_cdf)
      v /= wsum;

    m_metrics.seed = seed;
  }

  RunResult run()
  {
    Rng state_rng(derive_seed(m_seed, 5));
    for (NodeId c : m_cfg.topo.consumers()) {
      Consumer st;
      st.names = Rng(derive_seed(m_seed, 100 + static_cast<std::uint64_t>(c)));
      st.arrivals = Rng(derive_seed(m_seed, 200 + static_cast<std::uint64_t>(c)));
      int initial = 0;
      if (auto* mm = std::get_if<MmppArrivals>(&m_cfg.arrivals)) {
        auto pi = mmpp_stationary(*mm);
        double u = state_rng.uniform(), acc = 0;
        initial = static_cast<int>(pi.size()) - 1;
        for (std::size_t i = 0; i < pi.size(); ++i)
          if (u < (acc += pi[i])) {
            initial = static_cast<int>(i);
            break;
          }
      }
      st.gen = std::make_unique<ArrivalGenerator>(m_cfg.arrivals, initial);
      double t0 = st.gen->next(st.arrivals);
      m_consumers.emplace(c, std::move(st));
      schedule(t0, EvEmit{c});
    }
    m_nonce_rng = Rng(derive_seed(m_seed, 3));
    m_service_rng = Rng(derive_seed(m_seed, 4));

    while (!m_queue.empty()) {
      Event ev = m_queue.top();
      m_queue.pop();
      m_now = ev.time;
      ++m_metrics.events;
      std::visit([this](auto& p) { handle(p); }, ev.payload);
    }
    finish();
    return RunResult{std::move(m_metrics), std::move(m_log)};
  }

private:
  struct Consumer {
    Rng names{0};
    Rng arrivals{0};
    std::unique_ptr<ArrivalGenerator> gen;
    std::size_t emitted = 0;
  };

  struct LinkState {
    double busy_until = 0;
  };

  void schedule(double t, EvPayload p)
  {
    if (t < m_now)
      throw std::logic_error("simulation: event scheduled in the past");
    m_queue.push(Event{t, m_seq++, std::move(p)});
  }

  void log(NodeId node, NodeEvent e, const std::string& name, std::string detail)
  {
    if (m_cfg.keep_log)
      m_log.push_back(LogRecord{m_now, node, e, name, std::move(detail)});
  }

  static double message_bits(const std::variant<Interest, Data>& msg)
  {
    if (auto* i = std::get_if<Interest>(&msg))
      return static_cast<double>(i->input_bits);
    return static_cast<double>(std::get<Data>(msg).payload_bits);
  }

  /// FIFO serialization on the directed link, then propagation.
  void send(NodeId from, NodeId to, std::variant<Interest, Data> msg)
  {
    const auto* link = m_cfg.topo.link(from, to);
    if (link == nullptr)
      throw std::logic_error("simulation: no link between forwarding neighbors");
    auto& st = m_links[{from, to}];
    double start = std::max(m_now, st.busy_until);
    double end = start + message_bits(msg) / link->bandwidth_bps;
    st.busy_until = end;
    schedule(end + link->delay_s, EvArrive{to, from, std::move(msg)});
  }

  std::size_t pick_service(Rng& rng) const
  {
    if (m_service_cdf.size() == 1)
      return 0;
    double u = rng.uniform();
    auto it = std::upper_bound(m_service_cdf.begin(), m_service_cdf.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - m_service_cdf.begin()), m_service_cdf.size() - 1);
  }

  void handle(const EvEmit& e)
  {
    auto& c = m_consumers.at(e.consumer);
    std::size_t svc = pick_service(c.names);
    std::uint64_t seq = m_next_request++;
    Request req = m_sampler.sample(c.names, m_cfg.topo.services[svc].name, seq);

    RequestRecord rec;
    rec.seq = seq;
    rec.nonce = m_nonce_rng.next();
    rec.consumer = e.consumer;
    rec.name = req.name;
    rec.service = svc;
    rec.class_id = req.class_id;
    rec.content_id = req.content_id;
    rec.emit = m_now;
    m_by_nonce[rec.nonce] = m_metrics.requests.size();
    m_by_name[rec.name] = m_metrics.requests.size();
    m_metrics.requests.push_back(rec);
    ++m_metrics.emitted;
    ++c.emitted;

    Interest interest{parse_name(req.name), rec.nonce, m_now, static_cast<std::uint64_t>(m_cfg.task.input_bits)};
    process_interest(e.consumer, kLocalFace, interest);

    bool more = m_cfg.requests == 0 || c.emitted < m_cfg.requests;
    if (more) {
      double t = m_now + c.gen->next(c.arrivals);
      if (m_cfg.duration_s <= 0 || t <= m_cfg.duration_s)
        schedule(t, EvEmit{e.consumer});
    }
  }

  void handle(EvArrive& e)
  {
    auto& node = m_nodes[static_cast<std::size_t>(e.node)];
    if (auto* interest = std::get_if<Interest>(&e.msg)) {
      ++m_metrics.nodes[static_cast<std::size_t>(e.node)].interests_in;
      log(e.node, NodeEvent::INTEREST_RX, interest->name.to_uri(), "from=" + std::to_string(e.from));
      if (node.cs() != nullptr)
        schedule(m_now + m_cfg.cache.search_cost_s, EvProbe{e.node, e.from, std::move(*interest)});
      else
        process_interest(e.node, e.from, *interest);
      return;
    }
    apply(e.node, node.process_data(e.from, std::get<Data>(e.msg), m_now), nullptr);
  }

  void handle(EvProbe& e) { process_interest(e.node, e.from, e.interest); }

  void process_interest(NodeId id, FaceId from, const Interest& interest)
  {
    auto& node = m_nodes[static_cast<std::size_t>(id)];
    std::size_t pit_before = node.pit().size();
    auto actions = node.process_interest(from, interest, m_now);

    if (node.cs() != nullptr) {
      auto& nm = m_metrics.nodes[static_cast<std::size_t>(id)];
      const auto& rec = m_metrics.requests[m_by_nonce.at(interest.nonce)];
      bool hit = !actions.empty() && std::holds_alternative<action::ReplyData>(actions.front());
      auto k = static_cast<std::size_t>(rec.class_id - 1);
      ++nm.probes;
      ++nm.class_probes[k];
      auto& sp = nm.service_probes_hits[m_cfg.topo.services[rec.service].name];
      ++sp.first;
      if (hit) {
        ++nm.hits;
        ++nm.class_hits[k];
        ++sp.second;
      }
    }
    if (node.pit().size() > pit_before)
      schedule(m_now + m_cfg.pit_timeout_s, EvPitExpire{id, interest.name, m_now});
    apply(id, std::move(actions), &interest);
  }

  void apply(NodeId id, std::vector<Action> actions, const Interest* interest)
  {
    for (auto& a : actions) {
      if (auto* r = std::get_if<action::ReplyData>(&a)) {
        deliver_or_send(id, r->face, std::move(r->data));
      } else if (auto* f = std::get_if<action::ForwardInterest>(&a)) {
        send(id, f->face, std::move(f->interest));
      } else if (auto* d = std::get_if<action::ForwardData>(&a)) {
        deliver_or_send(id, d->face, std::move(d->data));
      } else if (auto* x = std::get_if<action::Execute>(&a)) {
        enqueue_execution(id, std::move(x->interest));
      } else if (std::holds_alternative<action::Drop>(a)) {
        if (interest != nullptr)
          mark_dropped(interest->nonce);
      }
    }
  }

  void deliver_or_send(NodeId id, FaceId face, Data data)
  {
    if (face != kLocalFace) {
      send(id, face, std::move(data));
      return;
    }
    // Local face of a consumer: hand the data to the application, once per
    // pending emission of this name.
    auto it = m_by_name.find(data.name.to_uri());
    if (it == m_by_name.end())
      return;
    auto& rec = m_metrics.requests[it->second];
    m_by_name.erase(it);
    if (rec.status != RequestStatus::Pending)
      return;
    rec.status = RequestStatus::Satisfied;
    rec.done = m_now;
    rec.answered_by = data.origin;
    rec.from_reuse = data.from_reuse;
    rec.result_correct = !data.result.empty() && data.result.front() == static_cast<std::uint8_t>(rec.class_id);
    ++m_metrics.satisfied;
  }

  void mark_dropped(std::uint64_t nonce)
  {
    auto it = m_by_nonce.find(nonce);
    if (it == m_by_nonce.end())
      return;
    auto& rec = m_metrics.requests[it->second];
    if (rec.status == RequestStatus::Pending) {
      rec.status = RequestStatus::Dropped;
      ++m_metrics.dropped;
    }
  }

  void enqueue_execution(NodeId id, Interest interest)
  {
    auto idx = static_cast<std::size_t>(id);
    m_queues[idx].push_back({std::move(interest), m_now});
    start_executions(id);
  }

  void start_executions(NodeId id)
  {
    auto idx = static_cast<std::size_t>(id);
    const auto& spec = m_cfg.topo.nodes[idx];
    while (m_servers[idx] < spec.servers && !m_queues[idx].empty()) {
      auto [interest, enqueued] = std::move(m_queues[idx].front());
      m_queues[idx].pop_front();
      ++m_servers[idx];
      double service = m_cfg.task.workload_flops / spec.flops;
      if (m_cfg.service_dist == ServiceDist::Exponential)
        service = m_service_rng.exponential(1 / service);
      log(id, NodeEvent::EXEC_START, interest.name.to_uri(), "wait=" + fmt_num(m_now - enqueued));
      schedule(m_now + service, EvExecDone{id, std::move(interest), enqueued, m_now});
    }
  }

  void handle(EvExecDone& e)
  {
    auto idx = static_cast<std::size_t>(e.node);
    --m_servers[idx];
    auto& nm = m_metrics.nodes[idx];
    ++nm.executions;
    nm.exec_wait_total += e.started - e.enqueued;
    nm.busy_time += m_now - e.started;
    log(e.node, NodeEvent::EXEC_END, e.interest.name.to_uri(), "");

    int class_id = 0;
    if (auto id = parse_image_name(e.interest.name.components[2]); id >= 0) {
      auto r = m_wl.dataset().find(static_cast<std::uint32_t>(id));
      if (r >= 0)
        class_id = m_wl.dataset().records[static_cast<std::size_t>(r)].class_id;
    }
    Data data{e.interest.name, static_cast<std::uint64_t>(m_cfg.task.output_bits), false, e.node,
              {static_cast<std::uint8_t>(class_id)}};
    apply(e.node, m_nodes[idx].process_data(kLocalFace, data, m_now), nullptr);
    start_executions(e.node);
  }

  void handle(EvPitExpire& e)
  {
    auto removed = m_nodes[static_cast<std::size_t>(e.node)].expire(e.name, e.created, m_now);
    if (!removed)
      return;
    for (auto nonce : removed->nonces)
      mark_dropped(nonce);
  }

  void finish()
  {
    auto& m = m_metrics;
    m.end_time = m_now;
    std::vector<double> ct;
    std::uint64_t reuse = 0, correct = 0;
    for (const auto& r : m.requests) {
      if (r.status != RequestStatus::Satisfied)
        continue;
      ct.push_back(r.completion());
      if (r.from_reuse) {
        ++reuse;
        correct += r.result_correct ? 1 : 0;
      }
    }
    m.pending = m.emitted - m.satisfied - m.dropped;
    if (!ct.empty()) {
      double sum = 0;
      for (double v : ct)
        sum += v;
      m.mean_completion = sum / static_cast<double>(ct.size());
      std::sort(ct.begin(), ct.end());
      auto pct = [&](double q) {
        auto i = static_cast<std::size_t>(std::ceil(q * static_cast<double>(ct.size()))) - 1;
        return ct[std::min(i, ct.size() - 1)];
      };
      m.p50 = pct(0.50);
      m.p95 = pct(0.95);
      m.hit_rate = static_cast<double>(reuse) / static_cast<double>(ct.size());
      m.reuse_accuracy = reuse ? static_cast<double>(correct) / static_cast<double>(reuse) : 0.0;
    }
    double search = 0;
    std::uint64_t lookups = 0, execs = 0;
    double wait = 0;
    for (std::size_t i = 0; i < m_nodes.size(); ++i) {
      if (const auto* cs = m_nodes[i].cs()) {
        m.nodes[i].cs = cs->stats();
        search += cs->stats().search_seconds;
        lookups += cs->stats().lookups;
      }
      execs += m.nodes[i].executions;
      wait += m.nodes[i].exec_wait_total;
    }
    m.mean_search_time = lookups ? search / static_cast<double>(lookups) : 0.0;
    m.mean_exec_wait = execs ? wait / static_cast<double>(execs) : 0.0;
  }

  const SimConfig& m_cfg;
  const Workload& m_wl;
  std::uint64_t m_seed;
  RequestSampler m_sampler;
  std::vector<NdnNode> m_nodes;
  std::vector<int> m_servers;
  std::vector<std::deque<std::pair<Interest, double>>> m_queues;
  std::map<std::pair<NodeId, NodeId>, LinkState> m_links;
  std::priority_queue<Event, std::vector<Event>, EventLater> m_queue;
  std::uint64_t m_seq = 0;
  double m_now = 0;
  std::map<NodeId, Consumer> m_consumers;
  Rng m_nonce_rng{0};
  Rng m_service_rng{0};
  std::vector<double> m_service_cdf;
  std::uint64_t m_next_request = 0;
  std::unordered_map<std::uint64_t, std::size_t> m_by_nonce;
  std::unordered_map<std::string, std::size_t> m_by_name;
  Metrics m_metrics;
  std::vector<LogRecord> m_log;
};

} // namespace detail

/// One deterministic run: the event log and metrics are a pure function of
/// (config, workload, seed).
inline RunResult
run(const SimConfig& cfg, const Workload& wl, std::uint64_t seed)
{
  detail::Simulation sim(cfg, wl, seed);
  return sim.run();
}

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepAxis { Alpha, Lambda, Bandwidth, CacheCapacity };

inline const char*
to_string(SweepAxis a)
{
  switch (a) {
  case SweepAxis::Alpha: return "alpha";
  case SweepAxis::Lambda: return "lambda";
  case SweepAxis::Bandwidth: return "bandwidth";
  case SweepAxis::CacheCapacity: return "cache_capacity";
  }
  return "?";
}

inline SweepAxis
parse_axis(std::string_view s)
{
  if (s == "alpha")
    return SweepAxis::Alpha;
  if (s == "lambda")
    return SweepAxis::Lambda;
  if (s == "bandwidth")
    return SweepAxis::Bandwidth;
  if (s == "cache_capacity")
    return SweepAxis::CacheCapacity;
  throw ConfigError("unknown sweep axis '" + std::string(s) + "' (alpha|lambda|bandwidth|cache_capacity)");
}

/// Mean arrival rate of either process.
inline double
mean_rate(const ArrivalProcess& a)
{
  if (auto* p = std::get_if<PoissonArrivals>(&a))
    return p->lambda;
  const auto& m = std::get<MmppArrivals>(a);
  auto pi = mmpp_stationary(m);
  double r = 0;
  for (std::size_t i = 0; i < pi.size(); ++i)
    r += pi[i] * m.lambdas[i];
  return r;
}

/// Sets one axis. Lambda rescales MMPP state rates to the new mean;
/// bandwidth applies to every link; cache_capacity sets the capacity of the
/// farthest compute node and scales the other compute nodes by the same
/// factor.
inline SimConfig
with_axis(SimConfig cfg, SweepAxis axis, double value)
{
  switch (axis) {
  case SweepAxis::Alpha:
    cfg.zipf.alpha = value;
    break;
  case SweepAxis::Lambda:
    if (auto* p = std::get_if<PoissonArrivals>(&cfg.arrivals)) {
      p->lambda = value;
    } else {
      auto& m = std::get<MmppArrivals>(cfg.arrivals);
      double f = value / mean_rate(cfg.arrivals);
      for (double& l : m.lambdas)
        l *= f;
    }
    break;
  case SweepAxis::Bandwidth:
    for (auto& l : cfg.topo.links)
      l.bandwidth_bps = value;
    break;
  case SweepAxis::CacheCapacity: {
    NodeId far = -1;
    std::size_t far_hops = 0;
    auto consumer = cfg.topo.consumers().front();
    for (std::size_t i = 0; i < cfg.topo.nodes.size(); ++i) {
      if (cfg.topo.nodes[i].kind != NodeKind::ComputeNode)
        continue;
      auto hops = cfg.topo.path(consumer, static_cast<NodeId>(i)).size();
      if (far < 0 || hops > far_hops) {
        far = static_cast<NodeId>(i);
        far_hops = hops;
      }
    }
    if (far < 0)
      throw ConfigError("sweep: cache_capacity axis needs a compute node");
    double base = static_cast<double>(cfg.topo.nodes[static_cast<std::size_t>(far)].cache_capacity);
    double f = base > 0 ? value / base : 0.0;
    for (auto& n : cfg.topo.nodes) {
      if (n.kind != NodeKind::ComputeNode)
        continue;
      n.cache_capacity = base > 0 ? static_cast<std::size_t>(std::llround(static_cast<double>(n.cache_capacity) * f))
                                  : static_cast<std::size_t>(value);
    }
    break;
  }
  }
  return cfg;
}

struct SweepPoint {
  double value = 0;
  std::vector<Metrics> runs; ///< by repetition index
  double mean = 0;           ///< mean over runs of per-run mean completion
  double stddev = 0;         ///< sample standard deviation across runs
  double sem = 0;
  double hit_rate = 0;
};

inline void
summarize(SweepPoint& p)
{
  std::size_t n = p.runs.size();
  if (n == 0)
    return;
  double s = 0, h = 0;
  for (const auto& m : p.runs) {
    s += m.mean_completion;
    h += m.hit_rate;
  }
  p.mean = s / static_cast<double>(n);
  p.hit_rate = h / static_cast<double>(n);
  double v = 0;
  for (const auto& m : p.runs)
    v += (m.mean_completion - p.mean) * (m.mean_completion - p.mean);
  p.stddev = n > 1 ? std::sqrt(v / static_cast<double>(n - 1)) : 0.0;
  p.sem = p.stddev / std::sqrt(static_cast<double>(n));
}

/// Runs `reps` repetitions (seeds seed + rep) of `cfg`, optionally on
/// several worker threads; results are ordered by repetition.
inline std::vector<Metrics>
replicate(const SimConfig& cfg, const Workload& wl, std::uint64_t seed, int reps, unsigned threads = 1)
{
  std::vector<Metrics> out(static_cast<std::size_t>(reps));
  SimConfig quiet = cfg;
  quiet.keep_log = false;
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (int r; (r = next++) < reps;) {
      try {
        auto res = run(quiet, wl, seed + static_cast<std::uint64_t>(r));
        res.metrics.rep = r;
        out[static_cast<std::size_t>(r)] = std::move(res.metrics);
      } catch (...) {
        std::lock_guard lk(failure_mu);
        if (!failure)
          failure = std::current_exception();
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(reps)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back(worker);
    for (auto& t : pool)
      t.join();
  }
  if (failure)
    std::rethrow_exception(failure);
  return out;
}

inline std::vector<SweepPoint>
sweep(const SimConfig& base, const Workload& wl, SweepAxis axis, const std::vector<double>& values, int reps,
      std::uint64_t seed, unsigned threads = 1)
{
  if (values.empty())
    throw ConfigError("sweep: no values");
  if (reps < 1)
    throw ConfigError("sweep: reps must be >= 1");
  std::vector<SweepPoint> out;
  for (double v : values) {
    SweepPoint p;
    p.value = v;
    p.runs = replicate(with_axis(base, axis, v), wl, seed, reps, threads);
    summarize(p);
    out.push_back(std::move(p));
  }
  return out;
}

} // namespace ndnreuse

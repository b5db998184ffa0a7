#include "helpers.hpp"
#include "ndnreuse/validation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>

using namespace ndnreuse;

namespace {

const Workload&
mnist_workload()
{
  static const Workload wl(testing_support::mnist());
  return wl;
}

// Every request names the same image.
const Workload&
single_image_workload()
{
  static const Dataset ds = [] {
    Dataset d;
    d.K = 1;
    d.m = 1;
    d.records.push_back(testing_support::mnist().records.front());
    d.reindex();
    return d;
  }();
  static const Workload wl(ds);
  return wl;
}

SimConfig
small_config(ReuseMode mode, std::size_t requests = 300)
{
  SimConfig cfg;
  cfg.mode = mode;
  cfg.requests = requests;
  return cfg;
}

} // namespace

TEST(Topologies, ScenarioOne)
{
  auto t = build_scenario1();
  EXPECT_EQ(t.nodes.size(), 5u);
  EXPECT_EQ(t.nodes[static_cast<std::size_t>(t.find("CN1"))].cache_capacity, 12000u);
  for (const char* r : {"R1", "R2", "R3"})
    EXPECT_EQ(t.nodes[static_cast<std::size_t>(t.find(r))].cache_capacity, 100u);
  EXPECT_NO_THROW(t.validate());
  for (const auto& l : t.links)
    EXPECT_DOUBLE_EQ(l.delay_s, 0.01);
}

TEST(Topologies, ScenarioTwo)
{
  auto t = build_scenario2();
  EXPECT_EQ(t.nodes.size(), 5u);
  EXPECT_NO_THROW(t.validate());
  auto path = t.path(t.find("consumer"), t.find("CN2"));
  EXPECT_NE(std::find(path.begin(), path.end(), t.find("CN1")), path.end());
  EXPECT_EQ(t.nodes[static_cast<std::size_t>(t.find("CN1"))].cache_capacity, 10000u);
  EXPECT_EQ(t.nodes[static_cast<std::size_t>(t.find("CN2"))].cache_capacity, 12000u);
}

TEST(Topologies, Validation)
{
  auto t = build_scenario1();
  t.links.pop_back();
  EXPECT_THROW(t.validate(), ConfigError);
  t = build_scenario1();
  t.nodes[0].cache_capacity = 5;
  EXPECT_THROW(t.validate(), ConfigError);
  t = build_scenario1();
  t.links[0].bandwidth_bps = 0;
  EXPECT_THROW(t.validate(), ConfigError);
  t = build_scenario1();
  t.services[0].producer = 2;
  EXPECT_THROW(t.validate(), ConfigError);
}

TEST(Simulation, UnreachableProducerFailsAtStart)
{
  auto cfg = small_config(ReuseMode::Similarity);
  cfg.topo.links.pop_back();
  EXPECT_THROW(run(cfg, mnist_workload(), 1), ConfigError);
}

TEST(Simulation, SingleRequestMatchesHandComputation)
{
  auto cfg = small_config(ReuseMode::Similarity, 1);
  auto res = run(cfg, mnist_workload(), 1);
  ASSERT_EQ(res.metrics.satisfied, 1u);
  const double in = 784 * 8, out = 8192, b = 10e6, prop = 0.01, l = 0.001;
  double want = 4 * (in / b + prop) + 4 * l + 1e8 / 1e9 + 4 * (out / b + prop);
  EXPECT_NEAR(res.metrics.requests[0].completion(), want, 1e-12);
  EXPECT_EQ(res.metrics.requests[0].answered_by, cfg.topo.find("CN1"));
  EXPECT_TRUE(res.metrics.requests[0].result_correct);
}

TEST(Simulation, RepeatedImageIsServedNearer)
{
  auto cfg = small_config(ReuseMode::Similarity, 2);
  cfg.zipf.K = 1;
  cfg.arrivals = PoissonArrivals{0.5};
  auto res = run(cfg, single_image_workload(), 3);
  const auto& r = res.metrics.requests;
  ASSERT_EQ(r.size(), 2u);
  ASSERT_GT(r[1].emit, r[0].done) << "second request must start after the first completes";
  EXPECT_LT(r[1].completion(), r[0].completion());
  EXPECT_TRUE(r[1].from_reuse);
  EXPECT_EQ(r[1].answered_by, cfg.topo.find("R1"));
  const double in = 784 * 8, out = 8192, b = 10e6;
  EXPECT_NEAR(r[1].completion(), in / b + out / b + 2 * 0.01 + 0.001, 1e-12);
}

TEST(Simulation, SameSeedGivesIdenticalEventLogs)
{
  for (auto mode : {ReuseMode::Similarity, ReuseMode::Exact, ReuseMode::None}) {
    auto cfg = small_config(mode);
    auto a = run(cfg, mnist_workload(), 7);
    auto b = run(cfg, mnist_workload(), 7);
    ASSERT_FALSE(a.log.empty());
    EXPECT_EQ(a.log, b.log);
    EXPECT_EQ(a.metrics.mean_completion, b.metrics.mean_completion);
    auto c = run(cfg, mnist_workload(), 8);
    EXPECT_NE(a.log, c.log);
  }
}

TEST(Simulation, RequestsAreConservedAndPitDrains)
{
  for (int scenario : {1, 2})
    for (auto mode : {ReuseMode::Similarity, ReuseMode::Exact, ReuseMode::None}) {
      auto cfg = small_config(mode, 500);
      if (scenario == 2)
        cfg.topo = build_scenario2();
      auto res = run(cfg, mnist_workload(), 11);
      const auto& m = res.metrics;
      EXPECT_EQ(m.emitted, 500u);
      EXPECT_EQ(m.emitted, m.satisfied + m.dropped + m.pending);
      EXPECT_EQ(m.pending, 0u);
      EXPECT_EQ(m.dropped, 0u);
      // Every PIT entry created by a forward or an execution is consumed by data.
      std::map<std::pair<NodeId, std::string>, int> open;
      for (const auto& r : res.log) {
        if (r.event == NodeEvent::FWD)
          ++open[{r.node, r.name}];
        if (r.event == NodeEvent::EXEC_START)
          ++open[{r.node, r.name}];
        if (r.event == NodeEvent::DATA_RX)
          --open[{r.node, r.name}];
      }
      for (const auto& [key, n] : open)
        EXPECT_EQ(n, 0) << key.second << " at node " << key.first;
    }
}

TEST(Simulation, CompletionRespectsPropagationFloor)
{
  for (int scenario : {1, 2}) {
    auto cfg = small_config(ReuseMode::Similarity, 500);
    if (scenario == 2)
      cfg.topo = build_scenario2();
    auto res = run(cfg, mnist_workload(), 12);
    double floor = 2 * cfg.topo.links.front().delay_s;
    for (const auto& r : res.metrics.requests)
      EXPECT_GE(r.completion(), floor);
  }
}

TEST(Simulation, DataDeliveredOncePerRequest)
{
  auto res = run(small_config(ReuseMode::Similarity, 500), mnist_workload(), 13);
  std::map<std::string, int> seen;
  for (const auto& r : res.metrics.requests)
    seen[r.name]++;
  for (const auto& [name, n] : seen)
    EXPECT_EQ(n, 1) << name;
}

TEST(Simulation, CacheCountersMatchEventLog)
{
  auto cfg = small_config(ReuseMode::Similarity, 800);
  auto res = run(cfg, mnist_workload(), 14);
  std::map<NodeId, std::pair<std::uint64_t, std::uint64_t>> replay;
  for (const auto& r : res.log) {
    if (r.event == NodeEvent::CS_HIT)
      replay[r.node].first++;
    if (r.event == NodeEvent::CS_MISS)
      replay[r.node].second++;
  }
  for (std::size_t i = 0; i < res.metrics.nodes.size(); ++i) {
    const auto& cs = res.metrics.nodes[i].cs;
    EXPECT_EQ(cs.hits, replay[static_cast<NodeId>(i)].first);
    EXPECT_EQ(cs.misses, replay[static_cast<NodeId>(i)].second);
    EXPECT_EQ(cs.lookups, cs.hits + cs.misses);
    EXPECT_EQ(res.metrics.nodes[i].hits, cs.hits);
  }
}

TEST(Simulation, ZeroThetaEqualsExactMatch)
{
  auto sim = small_config(ReuseMode::Similarity, 800);
  sim.cache.theta = 0;
  auto exact = small_config(ReuseMode::Exact, 800);
  auto a = run(sim, mnist_workload(), 15);
  auto b = run(exact, mnist_workload(), 15);
  EXPECT_EQ(a.log, b.log);

  // MNIST descriptors are unique per image, so exact hits only reuse the
  // same image.
  std::size_t hits = 0;
  for (const auto& r : b.log) {
    if (r.event != NodeEvent::CS_HIT)
      continue;
    ++hits;
    auto src = r.detail.substr(r.detail.find("src=") + 4);
    EXPECT_EQ(src.substr(src.rfind('/')), r.name.substr(r.name.rfind('/')));
  }
  EXPECT_GT(hits, 0u);
}

TEST(Simulation, NoReuseHasNoCacheActivity)
{
  auto res = run(small_config(ReuseMode::None), mnist_workload(), 16);
  for (const auto& r : res.log) {
    EXPECT_NE(r.event, NodeEvent::CS_HIT);
    EXPECT_NE(r.event, NodeEvent::CS_MISS);
  }
  EXPECT_EQ(res.metrics.hit_rate, 0.0);
  EXPECT_EQ(res.metrics.nodes[4].executions, 300u);
}

TEST(Simulation, EdgePolicyCachesOnlyAtComputeNodes)
{
  auto cfg = small_config(ReuseMode::Exact, 500);
  cfg.cache.policy = CachePolicy::Edge;
  cfg.zipf.alpha = 3;
  auto res = run(cfg, mnist_workload(), 17);
  for (const auto& n : res.metrics.nodes) {
    if (n.kind == NodeKind::Router) {
      EXPECT_EQ(n.cs.hits, 0u) << n.name;
    }
  }
  EXPECT_GT(res.metrics.nodes[4].cs.hits, 0u);
}

TEST(Simulation, DurationLimitsEmission)
{
  auto cfg = small_config(ReuseMode::Similarity, 0);
  cfg.duration_s = 2;
  auto res = run(cfg, mnist_workload(), 18);
  EXPECT_GT(res.metrics.emitted, 40u);
  for (const auto& r : res.metrics.requests)
    EXPECT_LE(r.emit, 2.0);
}

TEST(Simulation, ExponentialServiceMatchesErlangWait)
{
  // M/M/4 at rho = 0.5 without reuse: mean queueing delay C(c,a) / (c mu - lambda).
  auto cfg = small_config(ReuseMode::None, 20000);
  cfg.arrivals = PoissonArrivals{20};
  cfg.service_dist = ServiceDist::Exponential;
  auto res = run(cfg, mnist_workload(), 19);
  double mu = 10, lambda = 20;
  double want = erlang_c(4, 0.5).w / (4 * mu - lambda);
  EXPECT_NEAR(res.metrics.mean_exec_wait, want, 0.15 * want);
}

TEST(Simulation, TwoServicesSplitByWeight)
{
  auto cfg = small_config(ReuseMode::None, 4000);
  cfg.topo = build_scenario2();
  auto res = run(cfg, mnist_workload(), 20);
  std::size_t recognition = 0;
  for (const auto& r : res.metrics.requests) {
    recognition += r.service == 0 ? 1 : 0;
    EXPECT_EQ(r.answered_by, cfg.topo.services[r.service].producer);
  }
  EXPECT_NEAR(static_cast<double>(recognition) / 4000, 0.5, 0.03);
}

TEST(Sweep, RepetitionsUseConsecutiveSeedsAndIgnoreThreadCount)
{
  auto cfg = small_config(ReuseMode::Similarity, 200);
  auto serial = replicate(cfg, mnist_workload(), 40, 4, 1);
  auto parallel = replicate(cfg, mnist_workload(), 40, 4, 3);
  ASSERT_EQ(serial.size(), 4u);
  for (std::size_t r = 0; r < 4; ++r) {
    EXPECT_EQ(serial[r].seed, 40 + r);
    EXPECT_EQ(serial[r].rep, static_cast<int>(r));
    EXPECT_EQ(serial[r].mean_completion, parallel[r].mean_completion);
    EXPECT_EQ(serial[r].events, parallel[r].events);
  }
}

TEST(Sweep, PointsSummarizeRuns)
{
  auto cfg = small_config(ReuseMode::Similarity, 200);
  auto pts = sweep(cfg, mnist_workload(), SweepAxis::Alpha, {0.3, 0.9}, 3, 1);
  ASSERT_EQ(pts.size(), 2u);
  for (const auto& p : pts) {
    double s = 0;
    for (const auto& m : p.runs)
      s += m.mean_completion;
    EXPECT_NEAR(p.mean, s / 3, 1e-15);
    EXPECT_GE(p.stddev, 0);
    EXPECT_NEAR(p.sem, p.stddev / std::sqrt(3.0), 1e-15);
  }
  EXPECT_THROW(sweep(cfg, mnist_workload(), SweepAxis::Alpha, {}, 3, 1), ConfigError);
}

TEST(Sweep, AxisApplication)
{
  SimConfig cfg;
  cfg.topo = build_scenario2();
  auto c = with_axis(cfg, SweepAxis::CacheCapacity, 24000);
  EXPECT_EQ(c.topo.nodes[4].cache_capacity, 24000u);
  EXPECT_EQ(c.topo.nodes[2].cache_capacity, 20000u);
  EXPECT_EQ(c.topo.nodes[1].cache_capacity, 100u);
  c = with_axis(cfg, SweepAxis::Bandwidth, 1e6);
  for (const auto& l : c.topo.links)
    EXPECT_EQ(l.bandwidth_bps, 1e6);
  cfg.arrivals = default_mmpp(40);
  c = with_axis(cfg, SweepAxis::Lambda, 10);
  EXPECT_NEAR(mean_rate(c.arrivals), 10, 1e-9);
  EXPECT_EQ(parse_axis("cache_capacity"), SweepAxis::CacheCapacity);
  EXPECT_THROW(parse_axis("theta"), ConfigError);
}

TEST(Modes, Parsing)
{
  EXPECT_EQ(parse_mode("similarity"), ReuseMode::Similarity);
  EXPECT_EQ(parse_mode("exact"), ReuseMode::Exact);
  EXPECT_EQ(parse_mode("none"), ReuseMode::None);
  EXPECT_EQ(parse_mode("no_reuse"), ReuseMode::None);
  EXPECT_THROW(parse_mode("maybe"), ConfigError);
}

TEST(Validation, EstimatesAndPrediction)
{
  auto cfg = small_config(ReuseMode::Similarity, 1000);
  auto runs = replicate(cfg, mnist_workload(), 1, 2);
  auto est = estimate(cfg, runs);
  ASSERT_EQ(est.first_hop_miss.size(), 10u);
  for (double p : est.first_hop_miss) {
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
  EXPECT_GT(est.P_CN, 0.0);
  EXPECT_LT(est.P_CN, 1.0);
  auto pred = predict(cfg, est);
  ASSERT_EQ(pred.paths.size(), 1u);
  const auto& path = pred.paths[0];
  EXPECT_EQ(path.path.size(), 4u);
  // Answering further away costs more.
  for (std::size_t i = 1; i < path.c_total.size(); ++i)
    EXPECT_GT(path.c_total[i], path.c_total[i - 1]);
  EXPECT_GT(pred.completion, path.c_total.front());
  EXPECT_LT(pred.completion, path.c_total.back());
}

TEST(Validation, PredictionWithoutReuseIsProducerCost)
{
  auto cfg = small_config(ReuseMode::None, 10);
  Estimates est;
  est.first_hop_miss.assign(10, 1.0);
  auto pred = predict(cfg, est);
  EXPECT_DOUBLE_EQ(pred.completion, pred.paths[0].c_total.back());
}

TEST(Validation, RelativeError)
{
  EXPECT_EQ(relative_error(2, 2), 0.0);
  EXPECT_NEAR(relative_error(1.15, 1.0), 0.15, 1e-12);
  EXPECT_TRUE(std::isinf(relative_error(1, 0)));
}

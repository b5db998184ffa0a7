#include "helpers.hpp"
#include "ndnreuse/config.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace ndnreuse;

namespace {

ScenarioConfig
parse(const std::string& text)
{
  std::istringstream in(text);
  return parse_config(in, "test.ini");
}

std::string
error_of(const std::string& text)
{
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

} // namespace

TEST(Config, ShippedScenariosLoad)
{
  std::string dir = std::string(NDNREUSE_SOURCE_DIR) + "/configs/";
  for (const char* f : {"scenario1.ini", "scenario2.ini", "alpha_sweep.ini", "model.ini", "mmpp.ini"})
    EXPECT_NO_THROW(load_config(dir + f)) << f;

  auto s1 = load_config(dir + "scenario1.ini");
  EXPECT_EQ(s1.scenario, 1);
  EXPECT_EQ(s1.sim.requests, 2000u);
  EXPECT_EQ(s1.reps, 10);
  EXPECT_EQ(s1.images, std::string(NDNREUSE_SOURCE_DIR) + "/data/mnist-images-idx3-ubyte.gz");

  auto s2 = load_config(dir + "scenario2.ini");
  EXPECT_EQ(s2.scenario, 2);
  EXPECT_EQ(s2.sim.topo.services.size(), 2u);

  auto sweep = load_config(dir + "alpha_sweep.ini");
  ASSERT_TRUE(sweep.sweep.has_value());
  EXPECT_EQ(sweep.sweep->axis, SweepAxis::Alpha);
  EXPECT_EQ(sweep.sweep->values, (std::vector<double>{0.3, 0.5, 0.7, 0.9}));

  auto mmpp = load_config(dir + "mmpp.ini");
  EXPECT_TRUE(std::holds_alternative<MmppArrivals>(mmpp.sim.arrivals));
  EXPECT_NEAR(mean_rate(mmpp.sim.arrivals), 20, 1e-9);
}

TEST(Config, DefaultsMatchBaseline)
{
  auto c = parse("[topology]\nscenario = 1\n");
  EXPECT_EQ(c.sim.mode, ReuseMode::Similarity);
  EXPECT_DOUBLE_EQ(c.sim.zipf.alpha, 0.9);
  EXPECT_DOUBLE_EQ(mean_rate(c.sim.arrivals), 40);
  EXPECT_DOUBLE_EQ(c.sim.cache.theta, 0.33);
  EXPECT_DOUBLE_EQ(c.sim.cache.search_cost_s, 0.001);
  EXPECT_DOUBLE_EQ(c.sim.task.input_bits, 6272);
  EXPECT_DOUBLE_EQ(c.sim.task.output_bits, 8192);
  EXPECT_DOUBLE_EQ(c.sim.task.workload_flops, 1e8);
  EXPECT_DOUBLE_EQ(c.sim.pit_timeout_s, 4);
  EXPECT_EQ(c.sim.cache.hnsw.M, 5u);
  EXPECT_EQ(c.sim.cache.hnsw.ef_construction, 10u);
  EXPECT_EQ(c.sim.cache.hnsw.ef_search, 50u);
  EXPECT_EQ(c.per_class, 800u);
  EXPECT_FALSE(c.sweep.has_value());
}

TEST(Config, OverridesApply)
{
  auto c = parse("[topology]\nbandwidth = 1e6\nrouter_cache = 7\ncn_cache = 99\nservers = 2\n"
                 "[workload]\nalpha = 1.3\nlambda = 5\n[mode]\nmode = exact\n[task]\nservice_dist = exponential\n");
  for (const auto& l : c.sim.topo.links)
    EXPECT_EQ(l.bandwidth_bps, 1e6);
  EXPECT_EQ(c.sim.topo.nodes[1].cache_capacity, 7u);
  EXPECT_EQ(c.sim.topo.nodes[4].cache_capacity, 99u);
  EXPECT_EQ(c.sim.topo.nodes[4].servers, 2);
  EXPECT_EQ(c.sim.mode, ReuseMode::Exact);
  EXPECT_EQ(c.sim.service_dist, ServiceDist::Exponential);
  EXPECT_DOUBLE_EQ(mean_rate(c.sim.arrivals), 5);
}

TEST(Config, UnknownNamesAreRejected)
{
  EXPECT_NE(error_of("[topolgy]\nscenario = 1\n").find("unknown section [topolgy]"), std::string::npos);
  EXPECT_NE(error_of("[workload]\nlamda = 3\n").find("unknown key workload.lamda"), std::string::npos);
  EXPECT_NE(error_of("stray = 1\n").find("outside any section"), std::string::npos);
}

TEST(Config, BadValuesNameTheField)
{
  auto e = error_of("[workload]\nlambda = fast\n");
  EXPECT_NE(e.find("test.ini"), std::string::npos);
  EXPECT_NE(e.find("workload.lambda"), std::string::npos);
  EXPECT_NE(error_of("[workload]\nlambda = -1\n").find("workload.lambda: must be positive"), std::string::npos);
  EXPECT_NE(error_of("[topology]\nscenario = 3\n").find("topology.scenario"), std::string::npos);
  EXPECT_NE(error_of("[topology]\ndelays = 0.1, 0.1\n").find("topology.delays"), std::string::npos);
  EXPECT_NE(error_of("[mode]\nmode = fuzzy\n").find("mode.mode"), std::string::npos);
  EXPECT_NE(error_of("[cache]\ntheta = -0.1\n").find("cache.theta"), std::string::npos);
  EXPECT_NE(error_of("[cache]\nM = 1\n").find("cache:"), std::string::npos);
  EXPECT_NE(error_of("[seeds]\nreps = 0\n").find("seeds.reps"), std::string::npos);
  EXPECT_NE(error_of("[workload]\nrequests = 2.5\n").find("expected an integer"), std::string::npos);
  EXPECT_NE(error_of("[sweep]\naxis = theta\nvalues = 1\n").find("sweep.axis"), std::string::npos);
  EXPECT_NE(error_of("[sweep]\naxis = alpha\n").find("sweep.values"), std::string::npos);
  EXPECT_NE(error_of("[workload]\narrival = bursty\n").find("workload.arrival"), std::string::npos);
}

TEST(Config, SyntaxErrorsReportTheLine)
{
  auto e = error_of("[topology]\nscenario = 1\n[workload\n");
  EXPECT_NE(e.find("test.ini:3"), std::string::npos) << e;
}

TEST(Config, ModelSection)
{
  auto c = parse("[model]\nP_S = 0.25\nP_CN = 0.75\np1 = 0.6\n");
  EXPECT_EQ(*c.model.P_S, 0.25);
  EXPECT_EQ(*c.model.P_CN, 0.75);
  ASSERT_TRUE(c.model.first_hop_miss.has_value());
  EXPECT_EQ(c.model.first_hop_miss->size(), 10u);
  EXPECT_EQ(c.model.first_hop_miss->back(), 0.6);

  auto p = configured_model(c);
  EXPECT_EQ(p.P_S, 0.25);
  EXPECT_EQ(p.P_CN, 0.75);
  EXPECT_EQ(p.n, 4);
  EXPECT_EQ(p.c, 4);
  EXPECT_EQ(p.x, 100);

  EXPECT_NE(error_of("[model]\np1 = 0.1, 0.2\n").find("model.p1"), std::string::npos);
  auto d = parse("[topology]\nscenario = 1\n");
  EXPECT_EQ(configured_model(d).P_S, 0.0);
  EXPECT_EQ(configured_model(d).P_CN, 1.0);
}

TEST(Config, SubtasksAndDag)
{
  auto c = parse("[task]\nsubtasks = 5e7:6272:4000; 5e7:4000:8192\ndag = 1-2\n");
  ASSERT_EQ(c.sim.task.subtasks.size(), 2u);
  EXPECT_EQ(c.sim.task.H(), 2u);
  EXPECT_THROW(parse("[task]\nsubtasks = 5e7:6272:4000; 5e7:4000:8192\ndag = 1-2, 2-1\n"), ConfigError);
  EXPECT_THROW(parse("[task]\nsubtasks = 1:2\n"), ConfigError);
}

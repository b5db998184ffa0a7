#pragma once

#include "ndnreuse/sim.hpp"
#include "ndnreuse/validation.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace ndnreuse {

struct SweepSpec {
  SweepAxis axis = SweepAxis::Alpha;
  std::vector<double> values;
};

/// Fixed model inputs for evaluating the closed form without a simulation.
struct ModelOverrides {
  std::optional<double> P_S;
  std::optional<double> P_CN;
  std::optional<std::vector<double>> first_hop_miss;
  std::size_t f = 0;
};

/// One scenario file drives the simulator, the model and sweeps.
struct ScenarioConfig {
  std::string source;
  int scenario = 1;
  SimConfig sim;
  std::string images;
  std::string labels;
  std::size_t per_class = 800;
  std::uint64_t seed = 1;
  int reps = 10;
  std::optional<SweepSpec> sweep;
  ModelOverrides model;
};

namespace detail {

using boost::property_tree::ptree;

inline const std::map<std::string, std::set<std::string>>&
config_schema()
{
  static const std::map<std::string, std::set<std::string>> schema = {
    {"topology", {"scenario", "bandwidth", "delays", "router_cache", "cn_cache", "servers", "flops", "service_weights"}},
    {"workload", {"images", "labels", "per_class", "alpha", "classes", "arrival", "lambda", "mmpp_sojourn", "requests",
                  "duration"}},
    {"task", {"input_bits", "output_bits", "workload_flops", "deadline", "service_dist", "subtasks", "dag"}},
    {"cache", {"theta", "M", "M_max0", "ef_construction", "ef_search", "search_cost", "policy", "pit_timeout",
               "packet_bits"}},
    {"mode", {"mode"}},
    {"seeds", {"seed", "reps"}},
    {"model", {"P_S", "P_CN", "p1", "f"}},
    {"sweep", {"axis", "values"}},
  };
  return schema;
}

inline std::vector<std::string>
split(const std::string& s, char sep)
{
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) {
    auto b = item.find_first_not_of(" \t");
    auto e = item.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? "" : item.substr(b, e - b + 1));
  }
  return out;
}

class Reader {
public:
  explicit Reader(const ptree& root) : m_root(root) {}

  std::optional<std::string> text(const std::string& section, const std::string& key) const
  {
    auto sec = m_root.get_child_optional(section);
    if (!sec)
      return std::nullopt;
    auto v = sec->get_optional<std::string>(key);
    if (!v)
      return std::nullopt;
    return *v;
  }

  double number(const std::string& section, const std::string& key, double fallback) const
  {
    auto t = text(section, key);
    return t ? to_number(section, key, *t) : fallback;
  }

  double positive(const std::string& section, const std::string& key, double fallback) const
  {
    double v = number(section, key, fallback);
    if (!(v > 0))
      throw fail(section, key, "must be positive");
    return v;
  }

  long long integer(const std::string& section, const std::string& key, long long fallback) const
  {
    auto t = text(section, key);
    if (!t)
      return fallback;
    try {
      std::size_t used = 0;
      long long v = std::stoll(*t, &used);
      if (used != t->size())
        throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw fail(section, key, "expected an integer, got '" + *t + "'");
    }
  }

  std::vector<double> numbers(const std::string& section, const std::string& key) const
  {
    std::vector<double> out;
    if (auto t = text(section, key))
      for (const auto& item : split(*t, ','))
        out.push_back(to_number(section, key, item));
    return out;
  }

  static ConfigError fail(const std::string& section, const std::string& key, const std::string& what)
  {
    return ConfigError(section + "." + key + ": " + what);
  }

private:
  static double to_number(const std::string& section, const std::string& key, const std::string& t)
  {
    try {
      std::size_t used = 0;
      double v = std::stod(t, &used);
      if (used != t.size())
        throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw fail(section, key, "expected a number, got '" + t + "'");
    }
  }

  const ptree& m_root;
};

} // namespace detail

/// Parses the INI scenario format; relative dataset paths resolve against
/// `base_dir`.
inline ScenarioConfig
parse_config(std::istream& in, const std::string& source = "<config>", const std::filesystem::path& base_dir = {})
{
  using detail::Reader;
  detail::ptree root;
  try {
    boost::property_tree::ini_parser::read_ini(in, root);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }

  const auto& schema = detail::config_schema();
  for (const auto& [section, body] : root) {
    if (!body.data().empty() && body.empty())
      throw ConfigError(source + ": key '" + section + "' outside any section");
    auto it = schema.find(section);
    if (it == schema.end())
      throw ConfigError(source + ": unknown section [" + section + "]");
    for (const auto& [key, value] : body)
      if (!it->second.count(key))
        throw ConfigError(source + ": unknown key " + section + "." + key);
  }

  Reader r(root);
  ScenarioConfig c;
  c.source = source;
  try {
    c.scenario = static_cast<int>(r.integer("topology", "scenario", 1));
    if (c.scenario != 1 && c.scenario != 2)
      throw Reader::fail("topology", "scenario", "must be 1 or 2");
    auto& sim = c.sim;
    auto& topo = sim.topo;
    topo = c.scenario == 1 ? build_scenario1() : build_scenario2();

    if (r.text("topology", "bandwidth")) {
      double bw = r.positive("topology", "bandwidth", 0);
      for (auto& l : topo.links)
        l.bandwidth_bps = bw;
    }
    auto delays = r.numbers("topology", "delays");
    if (!delays.empty()) {
      if (delays.size() != topo.links.size())
        throw Reader::fail("topology", "delays", "need " + std::to_string(topo.links.size()) + " values");
      for (std::size_t i = 0; i < delays.size(); ++i) {
        if (!(delays[i] > 0))
          throw Reader::fail("topology", "delays", "must be positive");
        topo.links[i].delay_s = delays[i];
      }
    }
    long long router_cache = r.integer("topology", "router_cache", 100);
    if (router_cache < 0)
      throw Reader::fail("topology", "router_cache", "must be >= 0");
    auto cn_cache = r.numbers("topology", "cn_cache");
    long long servers = r.integer("topology", "servers", 4);
    if (servers < 1)
      throw Reader::fail("topology", "servers", "must be >= 1");
    double flops = r.positive("topology", "flops", 1e9);
    std::size_t cn = 0;
    for (auto& n : topo.nodes) {
      if (n.kind == NodeKind::Router)
        n.cache_capacity = static_cast<std::size_t>(router_cache);
      if (n.kind != NodeKind::ComputeNode)
        continue;
      if (!cn_cache.empty()) {
        if (cn_cache.size() <= cn)
          throw Reader::fail("topology", "cn_cache", "need one capacity per compute node");
        if (cn_cache[cn] < 0)
          throw Reader::fail("topology", "cn_cache", "must be >= 0");
        n.cache_capacity = static_cast<std::size_t>(cn_cache[cn]);
      }
      n.servers = static_cast<int>(servers);
      n.flops = flops;
      ++cn;
    }
    auto weights = r.numbers("topology", "service_weights");
    if (!weights.empty()) {
      if (weights.size() != topo.services.size())
        throw Reader::fail("topology", "service_weights", "need one weight per service");
      for (std::size_t i = 0; i < weights.size(); ++i)
        topo.services[i].weight = weights[i];
    }

    auto resolve = [&](const std::string& p) {
      std::filesystem::path path(p);
      return (path.is_relative() && !base_dir.empty() ? base_dir / path : path).lexically_normal().string();
    };
    // Defaults are relative to the working directory, explicit paths to the file.
    auto images = r.text("workload", "images");
    auto labels = r.text("workload", "labels");
    c.images = images ? resolve(*images) : "data/mnist-images-idx3-ubyte.gz";
    c.labels = labels ? resolve(*labels) : "data/mnist-labels-idx1-ubyte.gz";
    long long per_class = r.integer("workload", "per_class", 800);
    if (per_class < 1)
      throw Reader::fail("workload", "per_class", "must be >= 1");
    c.per_class = static_cast<std::size_t>(per_class);
    sim.zipf.alpha = r.number("workload", "alpha", 0.9);
    if (sim.zipf.alpha < 0)
      throw Reader::fail("workload", "alpha", "must be >= 0");
    sim.zipf.K = static_cast<int>(r.integer("workload", "classes", 10));
    if (sim.zipf.K < 1)
      throw Reader::fail("workload", "classes", "must be >= 1");
    double lambda = r.positive("workload", "lambda", 40);
    auto arrival = r.text("workload", "arrival").value_or("poisson");
    if (arrival == "poisson")
      sim.arrivals = PoissonArrivals{lambda};
    else if (arrival == "mmpp")
      sim.arrivals = default_mmpp(lambda, r.positive("workload", "mmpp_sojourn", kDefaultMmppSojourn));
    else
      throw Reader::fail("workload", "arrival", "expected poisson or mmpp, got '" + arrival + "'");
    long long requests = r.integer("workload", "requests", 2000);
    if (requests < 0)
      throw Reader::fail("workload", "requests", "must be >= 0");
    sim.requests = static_cast<std::size_t>(requests);
    sim.duration_s = r.number("workload", "duration", 0);
    if (sim.requests == 0 && !(sim.duration_s > 0))
      throw Reader::fail("workload", "requests", "need requests > 0 or a positive duration");

    auto& task = sim.task;
    task.input_bits = r.number("task", "input_bits", 784 * 8);
    if (task.input_bits < 0)
      throw Reader::fail("task", "input_bits", "must be >= 0");
    task.output_bits = r.positive("task", "output_bits", 1024 * 8);
    task.workload_flops = r.positive("task", "workload_flops", 1e8);
    task.deadline_s = r.positive("task", "deadline", 1.0);
    auto dist = r.text("task", "service_dist").value_or("deterministic");
    if (dist == "deterministic")
      sim.service_dist = ServiceDist::Deterministic;
    else if (dist == "exponential")
      sim.service_dist = ServiceDist::Exponential;
    else
      throw Reader::fail("task", "service_dist", "expected deterministic or exponential");
    if (auto subs = r.text("task", "subtasks")) {
      for (const auto& item : detail::split(*subs, ';')) {
        auto parts = detail::split(item, ':');
        if (parts.size() != 3)
          throw Reader::fail("task", "subtasks", "expected w:input:output items separated by ';'");
        try {
          task.subtasks.push_back({std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2])});
        } catch (const std::exception&) {
          throw Reader::fail("task", "subtasks", "non-numeric entry '" + item + "'");
        }
      }
    }
    if (auto dag = r.text("task", "dag")) {
      for (const auto& item : detail::split(*dag, ',')) {
        auto parts = detail::split(item, '-');
        if (parts.size() != 2)
          throw Reader::fail("task", "dag", "expected edges like 1-2");
        try {
          task.dag_edges.emplace_back(std::stoi(parts[0]), std::stoi(parts[1]));
        } catch (const std::exception&) {
          throw Reader::fail("task", "dag", "non-numeric edge '" + item + "'");
        }
      }
    }
    try {
      task.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("task: ") + e.what());
    }

    auto& cache = sim.cache;
    cache.theta = r.number("cache", "theta", 0.33);
    if (cache.theta < 0)
      throw Reader::fail("cache", "theta", "must be >= 0");
    cache.hnsw.M = static_cast<std::size_t>(r.integer("cache", "M", 5));
    cache.hnsw.M_max0 = static_cast<std::size_t>(r.integer("cache", "M_max0", 0));
    cache.hnsw.ef_construction = static_cast<std::size_t>(r.integer("cache", "ef_construction", 10));
    cache.hnsw.ef_search = static_cast<std::size_t>(r.integer("cache", "ef_search", 50));
    try {
      cache.hnsw.resolved().validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("cache: ") + e.what());
    }
    cache.search_cost_s = r.number("cache", "search_cost", 0.001);
    if (cache.search_cost_s < 0)
      throw Reader::fail("cache", "search_cost", "must be >= 0");
    auto policy = r.text("cache", "policy").value_or("everywhere");
    if (policy == "everywhere")
      cache.policy = CachePolicy::Everywhere;
    else if (policy == "edge")
      cache.policy = CachePolicy::Edge;
    else
      throw Reader::fail("cache", "policy", "expected everywhere or edge");
    sim.pit_timeout_s = r.positive("cache", "pit_timeout", 4);
    sim.packet_bits = r.positive("cache", "packet_bits", 81920);

    if (auto m = r.text("mode", "mode")) {
      try {
        sim.mode = parse_mode(*m);
      } catch (const ConfigError& e) {
        throw Reader::fail("mode", "mode", e.what());
      }
    }

    long long seed = r.integer("seeds", "seed", 1);
    if (seed < 0)
      throw Reader::fail("seeds", "seed", "must be >= 0");
    c.seed = static_cast<std::uint64_t>(seed);
    c.reps = static_cast<int>(r.integer("seeds", "reps", 10));
    if (c.reps < 1)
      throw Reader::fail("seeds", "reps", "must be >= 1");

    if (r.text("model", "P_S"))
      c.model.P_S = r.number("model", "P_S", 0);
    if (r.text("model", "P_CN"))
      c.model.P_CN = r.number("model", "P_CN", 0);
    auto p1 = r.numbers("model", "p1");
    if (!p1.empty()) {
      if (p1.size() == 1)
        p1.assign(static_cast<std::size_t>(sim.zipf.K), p1.front());
      if (p1.size() != static_cast<std::size_t>(sim.zipf.K))
        throw Reader::fail("model", "p1", "need 1 or K values");
      c.model.first_hop_miss = p1;
    }
    long long f = r.integer("model", "f", 0);
    if (f < 0 || static_cast<std::size_t>(f) > task.H())
      throw Reader::fail("model", "f", "must be in 0..H");
    c.model.f = static_cast<std::size_t>(f);

    if (auto axis = r.text("sweep", "axis")) {
      SweepSpec s;
      try {
        s.axis = parse_axis(*axis);
      } catch (const ConfigError& e) {
        throw Reader::fail("sweep", "axis", e.what());
      }
      s.values = r.numbers("sweep", "values");
      if (s.values.empty())
        throw Reader::fail("sweep", "values", "need at least one value");
      c.sweep = s;
    }

    sim.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return c;
}

inline ScenarioConfig
load_config(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open config " + path);
  return parse_config(in, path, std::filesystem::path(path).parent_path());
}

/// Closed-form evaluation of a scenario's first service path with the
/// configured overrides; first-hop miss rates fall back to the closed form
/// (alpha > 1 only).
inline ModelParams
configured_model(const ScenarioConfig& c, std::size_t service = 0)
{
  auto p = model_params(c.sim, service, c.per_class);
  p.P_S = c.model.P_S.value_or(0.0);
  p.P_CN = c.model.P_CN.value_or(1.0);
  p.f = c.model.f;
  return p;
}

} // namespace ndnreuse

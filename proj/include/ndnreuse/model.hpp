#pragma once

#include "ndnreuse/common.hpp"
#include "ndnreuse/workload.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ndnreuse {

struct Subtask {
  double workload_flops = 0;
  double input_bits = 0;
  double output_bits = 0;
};

struct DagReport {
  bool ok = true;
  std::vector<int> cycle; ///< 1-based subtask indices along one cycle
};

/// Subtask dependency check by depth-first search; subtasks are numbered
/// 1..count.
inline DagReport
dag_validate(std::size_t count, const std::vector<std::pair<int, int>>& edges)
{
  std::vector<std::vector<int>> adj(count + 1);
  for (auto [a, b] : edges) {
    if (a < 1 || b < 1 || static_cast<std::size_t>(a) > count || static_cast<std::size_t>(b) > count)
      throw ConfigError("dag edge " + std::to_string(a) + "->" + std::to_string(b) + " out of range");
    adj[a].push_back(b);
  }
  std::vector<int> color(count + 1, 0), parent(count + 1, 0);
  for (std::size_t start = 1; start <= count; ++start) {
    if (color[start] != 0)
      continue;
    std::vector<std::pair<int, std::size_t>> stack{{static_cast<int>(start), 0}};
    color[start] = 1;
    while (!stack.empty()) {
      auto& [u, next] = stack.back();
      if (next == adj[u].size()) {
        color[u] = 2;
        stack.pop_back();
        continue;
      }
      int v = adj[u][next++];
      if (color[v] == 1) {
        DagReport r{false, {}};
        for (int x = u; x != v; x = parent[x])
          r.cycle.push_back(x);
        r.cycle.push_back(v);
        std::reverse(r.cycle.begin(), r.cycle.end());
        return r;
      }
      if (color[v] == 0) {
        color[v] = 1;
        parent[v] = u;
        stack.push_back({v, 0});
      }
    }
  }
  return {};
}

struct TaskSpec {
  double input_bits = 784 * 8;
  double output_bits = 1024 * 8;
  double workload_flops = 1e8;
  double deadline_s = 1.0;
  std::vector<Subtask> subtasks; ///< empty means one subtask covering the whole task
  std::vector<std::pair<int, int>> dag_edges;

  std::size_t H() const noexcept { return subtasks.empty() ? 1 : subtasks.size(); }

  std::vector<Subtask> effective_subtasks() const
  {
    if (subtasks.empty())
      return {Subtask{workload_flops, input_bits, output_bits}};
    return subtasks;
  }

  void validate() const
  {
    if (!(input_bits >= 0) || !(output_bits > 0))
      throw ConfigError("task: input_bits must be >= 0 and output_bits > 0");
    if (!(workload_flops > 0) || !(deadline_s > 0))
      throw ConfigError("task: workload_flops and deadline_s must be positive");
    if (!subtasks.empty()) {
      double sum = 0;
      for (const auto& s : subtasks) {
        if (!(s.workload_flops >= 0) || !(s.input_bits >= 0) || !(s.output_bits >= 0))
          throw ConfigError("task: subtask sizes must be non-negative");
        sum += s.workload_flops;
      }
      if (std::abs(sum - workload_flops) > 1e-9 * workload_flops)
        throw ConfigError("task: subtask workloads sum to " + fmt_num(sum) + ", expected " + fmt_num(workload_flops));
    }
    auto dag = dag_validate(H(), dag_edges);
    if (!dag.ok)
      throw ConfigError("task: dependency graph has a cycle");
  }
};

/// Inputs of the closed-form cost model. `f` of the H subtasks (the first f)
/// are served from cache on partial reuse, the remaining H - f by the CN.
struct ModelParams {
  double alpha = 0.9;
  int K = 10;
  double m = 800;
  double lambda = 40;
  int c = 4;
  double b_cn = 10e6;
  double b_cs = 10e6;
  double C_cn = 1e9;
  double P = 81920;
  double P_S = 0.5;
  double P_CN = 0.5;
  int j = 1;
  double l = 0.001;
  double x = 12000;
  int n = 4;
  std::size_t f = 0;
  TaskSpec task;

  double M_total() const { return K * m; }
  std::size_t f_prime() const { return task.H() - f; }

  void validate() const
  {
    auto prob = [](double v, const char* what) {
      if (!(v >= 0 && v <= 1))
        throw ConfigError(std::string("model: ") + what + " must be in [0,1]");
    };
    prob(P_S, "P_S");
    prob(P_CN, "P_CN");
    if (j != 0 && j != 1)
      throw ConfigError("model: j must be 0 or 1");
    if (alpha < 0 || K < 1 || !(m > 0) || !(lambda > 0) || c < 1)
      throw ConfigError("model: alpha, K, m, lambda, c out of range");
    if (!(b_cn > 0) || !(b_cs > 0) || !(C_cn > 0) || !(P > 0))
      throw ConfigError("model: bandwidths, C_CN and P must be positive");
    if (!(l >= 0) || !(x >= 0) || n < 1)
      throw ConfigError("model: l, x must be >= 0 and n >= 1");
    if (f > task.H())
      throw ConfigError("model: f exceeds the subtask count H");
    task.validate();
  }
};

inline double
popularity(int k, const ModelParams& p)
{
  if (k < 1 || k > p.K)
    throw DomainError("popularity: class " + std::to_string(k) + " outside 1.." + std::to_string(p.K));
  return zipf_pmf(ZipfSpec{p.alpha, p.K})[static_cast<std::size_t>(k - 1)];
}

/// K x n matrix, miss[k-1][i-1] = p_k(i).
using MissMatrix = std::vector<std::vector<double>>;

/// Class-k share of the requests reaching node i of a cascade.
inline double
popularity_at_node(int k, int i, const MissMatrix& miss, const ModelParams& p)
{
  if (k < 1 || k > p.K || i < 1)
    throw DomainError("popularity_at_node: index out of range");
  auto q = zipf_pmf(ZipfSpec{p.alpha, p.K});
  double num = 0, den = 0;
  for (int l = 1; l <= p.K; ++l) {
    double w = q[static_cast<std::size_t>(l - 1)];
    for (int jn = 1; jn < i; ++jn)
      w *= miss.at(static_cast<std::size_t>(l - 1)).at(static_cast<std::size_t>(jn - 1));
    den += w;
    if (l == k)
      num = w;
  }
  if (den <= 0)
    throw DomainError("popularity_at_node: no requests reach node " + std::to_string(i));
  return num / den;
}

inline double
comm_cost_cn(const ModelParams& p)
{
  return (p.task.input_bits + p.task.output_bits) / p.b_cn;
}

inline double
comm_cost_cs(const ModelParams& p)
{
  return (p.task.input_bits + p.task.output_bits) / p.b_cs;
}

inline double
comm_cost_partial(const ModelParams& p)
{
  if (p.f > p.task.H())
    throw DomainError("comm_cost_partial: f + f' must equal H");
  auto subs = p.task.effective_subtasks();
  double cost = 0;
  for (std::size_t i = 0; i < subs.size(); ++i)
    cost += (subs[i].input_bits + subs[i].output_bits) / (i < p.f ? p.b_cs : p.b_cn);
  return cost;
}

/// Task complexity in flops per second of deadline.
inline double
complexity(const ModelParams& p)
{
  return p.task.workload_flops / p.task.deadline_s;
}

/// Cost of running every subtask from scratch.
inline double
beta(const ModelParams& p)
{
  double sum = 0;
  for (const auto& s : p.task.effective_subtasks())
    sum += s.workload_flops;
  return sum / (p.C_cn * p.task.deadline_s);
}

/// Cost of the f' subtasks left after partial reuse.
inline double
beta_prime(const ModelParams& p)
{
  auto subs = p.task.effective_subtasks();
  double sum = 0;
  for (std::size_t i = p.f; i < subs.size(); ++i)
    sum += subs[i].workload_flops;
  return sum / (p.C_cn * p.task.deadline_s);
}

inline double
reuse_cost_cn(const ModelParams& p)
{
  return p.P_S * p.l + (1 - p.P_S) * (p.l + beta_prime(p));
}

inline double
reuse_cost_cs(const ModelParams& p)
{
  return p.P_S * p.l + (1 - p.P_S) * (p.l + comm_cost_partial(p) + beta_prime(p));
}

struct ErlangResult {
  double mu = 0;
  double rho = 0;
  double p0 = 0;
  double w = 0; ///< probability an arrival has to wait
};

/// M/M/c delay probability for utilization rho = lambda / (c mu).
inline ErlangResult
erlang_c(int c, double rho)
{
  if (c < 1)
    throw DomainError("erlang_c: c must be >= 1");
  if (!(rho >= 0))
    throw DomainError("erlang_c: negative utilization");
  if (rho >= 1)
    throw DomainError("erlang_c: unstable queue (rho = " + fmt_num(rho) + " >= 1)");
  double a = c * rho;
  // term_k = a^k / k!, accumulated iteratively
  double term = 1, sum = 0;
  for (int k = 0; k < c; ++k) {
    sum += term;
    term *= a / (k + 1);
  }
  // w = (a^c/c!) / ((1 - rho) sum + a^c/c!), which is exactly rho for c = 1
  ErlangResult r;
  r.rho = rho;
  r.p0 = (1 - rho) / ((1 - rho) * sum + term);
  r.w = term / ((1 - rho) * sum + term);
  return r;
}

/// CN queue: service rate is the inverse of the transfer cost, utilization
/// lambda * alpha_CN / c.
inline ErlangResult
erlang_delay(const ModelParams& p)
{
  double a_cn = comm_cost_cn(p);
  double rho = p.lambda * a_cn / p.c;
  auto r = erlang_c(p.c, rho);
  r.mu = 1 / a_cn;
  return r;
}

inline double
packet_count(const ModelParams& p)
{
  return std::max(1.0, std::ceil(p.task.input_bits / p.P));
}

inline double
total_wait(const ModelParams& p)
{
  return erlang_delay(p).w * packet_count(p);
}

/// C_TOTAL = P_CN (a_CN + (1-j) beta + j R_CN) + (1-P_CN)(P_S a_CS + R_CS) + w sigma
inline double
total_cost(const ModelParams& p)
{
  double edge = comm_cost_cn(p) + (1 - p.j) * beta(p) + p.j * reuse_cost_cn(p);
  double cache = p.P_S * comm_cost_cs(p) + reuse_cost_cs(p);
  return p.P_CN * edge + (1 - p.P_CN) * cache + total_wait(p);
}

/// Closed-form scale factor g of the first-router miss rate; needs alpha > 1.
inline double
miss_scale(const ModelParams& p)
{
  if (!(p.alpha > 1))
    throw DomainError("miss_first: closed form needs alpha > 1 (got " + fmt_num(p.alpha) +
                      "); supply a measured first-hop miss rate");
  double sigma = packet_count(p);
  double gam = std::tgamma(1 - 1 / p.alpha);
  return 1 / (p.lambda * p.c * std::pow(sigma, p.alpha) * std::pow(p.m, p.alpha - 1) * std::pow(gam, p.alpha));
}

/// p_k(1) = exp(-(lambda/m) q_k g x^alpha).
inline double
miss_first(int k, const ModelParams& p)
{
  if (p.x == 0)
    return 1.0;
  double q = popularity(k, p);
  return std::exp(-(p.lambda / p.m) * q * miss_scale(p) * std::pow(p.x, p.alpha));
}

/// Per-class miss probabilities at nodes 1..n from the first-hop rates via
/// log p_k(i) = log p_k(1) * prod_{l<i} p_k(l).
inline MissMatrix
miss_matrix(const ModelParams& p, const std::optional<std::vector<double>>& first_hop = std::nullopt)
{
  if (first_hop && first_hop->size() != static_cast<std::size_t>(p.K))
    throw DomainError("miss_matrix: need one first-hop miss rate per class");
  MissMatrix out(static_cast<std::size_t>(p.K), std::vector<double>(static_cast<std::size_t>(p.n), 1.0));
  for (int k = 1; k <= p.K; ++k) {
    auto& row = out[static_cast<std::size_t>(k - 1)];
    double p1 = first_hop ? (*first_hop)[static_cast<std::size_t>(k - 1)] : miss_first(k, p);
    if (!(p1 >= 0 && p1 <= 1))
      throw DomainError("miss_matrix: first-hop miss rate outside [0,1]");
    row[0] = p1;
    if (p1 == 0)
      continue; // nothing passes node 1; downstream rates are the p1 -> 0 limit, 1
    double logp1 = std::log(p1);
    double prod = 1;
    for (int i = 2; i <= p.n; ++i) {
      prod *= row[static_cast<std::size_t>(i - 2)];
      row[static_cast<std::size_t>(i - 1)] = std::exp(logp1 * prod);
    }
  }
  return out;
}

/// Probability that node i answers, (1 - p(i)) prod_{j<i} p(j), with the
/// last node treated as the origin that always answers.
inline std::vector<double>
vrtt_weights(const std::vector<double>& miss_row)
{
  std::vector<double> w(miss_row.size());
  double reach = 1;
  for (std::size_t i = 0; i < miss_row.size(); ++i) {
    double p = i + 1 == miss_row.size() ? 0.0 : miss_row[i];
    w[i] = (1 - p) * reach;
    reach *= p;
  }
  return w;
}

inline double
vrtt_class(const std::vector<double>& c_total, const std::vector<double>& miss_row)
{
  if (c_total.size() != miss_row.size() || c_total.empty())
    throw DomainError("vrtt: cost and miss vectors must have equal, non-zero length");
  auto w = vrtt_weights(miss_row);
  double v = 0;
  for (std::size_t i = 0; i < w.size(); ++i)
    v += c_total[i] * w[i];
  return v;
}

/// Popularity-weighted VRTT over all classes.
inline double
vrtt(const ModelParams& p, const std::vector<double>& c_total, const MissMatrix& miss)
{
  auto q = zipf_pmf(ZipfSpec{p.alpha, p.K});
  double v = 0;
  for (int k = 0; k < p.K; ++k)
    v += q[static_cast<std::size_t>(k)] * vrtt_class(c_total, miss.at(static_cast<std::size_t>(k)));
  return v;
}

struct ModelOutput {
  double comm_cn = 0, comm_cs = 0, comm_partial = 0;
  double beta = 0, beta_prime = 0;
  double reuse_cn = 0, reuse_cs = 0;
  double rho = 0, mu = 0, w = 0;
  double sigma = 0, w_total = 0;
  double c_total = 0;
  MissMatrix p_k;
  double vrtt = 0;
};

/// Every closed-form quantity; VRTT uses the uniform per-node cost c_total
/// unless `node_costs` is given.
inline ModelOutput
evaluate(const ModelParams& p, const std::optional<std::vector<double>>& first_hop = std::nullopt,
         const std::optional<std::vector<double>>& node_costs = std::nullopt)
{
  p.validate();
  ModelOutput o;
  o.comm_cn = comm_cost_cn(p);
  o.comm_cs = comm_cost_cs(p);
  o.comm_partial = comm_cost_partial(p);
  o.beta = beta(p);
  o.beta_prime = beta_prime(p);
  o.reuse_cn = reuse_cost_cn(p);
  o.reuse_cs = reuse_cost_cs(p);
  auto e = erlang_delay(p);
  o.rho = e.rho;
  o.mu = e.mu;
  o.w = e.w;
  o.sigma = packet_count(p);
  o.w_total = o.w * o.sigma;
  o.c_total = total_cost(p);
  o.p_k = miss_matrix(p, first_hop);
  auto costs = node_costs.value_or(std::vector<double>(static_cast<std::size_t>(p.n), o.c_total));
  o.vrtt = vrtt(p, costs, o.p_k);
  return o;
}

} // namespace ndnreuse

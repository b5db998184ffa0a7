#pragma once

#include "ndnreuse/csv.hpp"
#include "ndnreuse/model.hpp"
#include "ndnreuse/sim.hpp"
#include "ndnreuse/validation.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace ndnreuse {

inline void
write_event_log(std::ostream& out, const std::vector<LogRecord>& log, const Topology& topo)
{
  CsvWriter w(out, {"time", "node", "event", "name", "detail"});
  for (const auto& r : log)
    w.row({r.time, topo.nodes.at(static_cast<std::size_t>(r.node)).name, std::string(to_string(r.event)), r.name,
           r.detail});
}

inline void
write_metrics(std::ostream& out, const std::vector<Metrics>& runs, ReuseMode mode)
{
  CsvWriter w(out, {"seed", "rep", "rng", "mode", "emitted", "satisfied", "dropped", "pending", "mean_completion", "p50",
                    "p95", "hit_rate", "reuse_accuracy", "mean_exec_wait", "end_time", "events"});
  for (const auto& m : runs)
    w.row({static_cast<unsigned long long>(m.seed), static_cast<long long>(m.rep), m.rng_algorithm,
           std::string(to_string(mode)), static_cast<unsigned long long>(m.emitted),
           static_cast<unsigned long long>(m.satisfied), static_cast<unsigned long long>(m.dropped),
           static_cast<unsigned long long>(m.pending), m.mean_completion, m.p50, m.p95, m.hit_rate, m.reuse_accuracy,
           m.mean_exec_wait, m.end_time, static_cast<unsigned long long>(m.events)});
}

inline void
write_node_stats(std::ostream& out, const std::vector<Metrics>& runs)
{
  CsvWriter w(out, {"seed", "rep", "node", "kind", "interests_in", "cs_lookups", "cs_hits", "cs_evictions",
                    "cs_rebuilds", "executions", "mean_exec_wait", "busy_time"});
  for (const auto& m : runs)
    for (const auto& n : m.nodes)
      w.row({static_cast<unsigned long long>(m.seed), static_cast<long long>(m.rep), n.name,
             std::string(to_string(n.kind)), static_cast<unsigned long long>(n.interests_in),
             static_cast<unsigned long long>(n.cs.lookups), static_cast<unsigned long long>(n.cs.hits),
             static_cast<unsigned long long>(n.cs.evictions), static_cast<unsigned long long>(n.cs.rebuilds),
             static_cast<unsigned long long>(n.executions), n.mean_exec_wait(), n.busy_time});
}

inline void
write_requests(std::ostream& out, const Metrics& m, const Topology& topo)
{
  CsvWriter w(out, {"seq", "name", "service", "class_id", "content_id", "emit", "done", "completion", "status",
                    "answered_by", "from_reuse", "result_correct"});
  for (const auto& r : m.requests) {
    const char* status = r.status == RequestStatus::Satisfied ? "satisfied"
                         : r.status == RequestStatus::Dropped ? "dropped"
                                                              : "pending";
    std::string by = r.answered_by >= 0 ? topo.nodes.at(static_cast<std::size_t>(r.answered_by)).name : "";
    w.row({static_cast<unsigned long long>(r.seq), r.name, topo.services.at(r.service).name,
           static_cast<long long>(r.class_id), static_cast<unsigned long long>(r.content_id), r.emit, r.done,
           r.completion(), std::string(status), by, static_cast<long long>(r.from_reuse),
           static_cast<long long>(r.result_correct)});
  }
}

inline void
write_sweep(std::ostream& out, SweepAxis axis, const std::vector<SweepPoint>& points)
{
  CsvWriter w(out, {"axis", "value", "reps", "mean", "std", "sem", "hit_rate"});
  for (const auto& p : points)
    w.row({std::string(to_string(axis)), p.value, static_cast<long long>(p.runs.size()), p.mean, p.stddev, p.sem,
           p.hit_rate});
}

/// One row per evaluated point: the closed-form outputs with the miss matrix
/// flattened as p_k<k>_<i>.
inline void
write_model(std::ostream& out, const std::string& axis, const std::vector<double>& values,
            const std::vector<ModelOutput>& outputs, const std::vector<double>& predicted)
{
  if (outputs.empty())
    return;
  std::vector<std::string> header{"axis", "value", "c_total", "vrtt", "w", "rho", "sigma", "w_total", "comm_cn",
                                  "comm_cs", "beta", "reuse_cn", "reuse_cs"};
  const auto& pk = outputs.front().p_k;
  for (std::size_t k = 0; k < pk.size(); ++k)
    for (std::size_t i = 0; i < pk[k].size(); ++i)
      header.push_back("p_k" + std::to_string(k + 1) + "_" + std::to_string(i + 1));
  if (!predicted.empty())
    header.push_back("model");
  CsvWriter w(out, header);
  for (std::size_t r = 0; r < outputs.size(); ++r) {
    const auto& o = outputs[r];
    std::vector<CsvWriter::Cell> row{axis,     values[r], o.c_total, o.vrtt,   o.w,       o.rho,    o.sigma,
                                     o.w_total, o.comm_cn, o.comm_cs, o.beta, o.reuse_cn, o.reuse_cs};
    for (const auto& rowk : o.p_k)
      for (double v : rowk)
        row.push_back(v);
    if (!predicted.empty())
      row.push_back(predicted[r]);
    w.row(row);
  }
}

inline void
write_prediction(std::ostream& out, SweepAxis axis, const std::vector<double>& values,
                 const std::vector<Prediction>& preds)
{
  CsvWriter w(out, {"axis", "value", "model", "P_CN", "P_S", "p1_mean"});
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& p = preds[i];
    double ps = 0, wsum = 0;
    for (const auto& path : p.paths) {
      ps += path.weight * path.P_S;
      wsum += path.weight;
    }
    double p1 = 0;
    for (double v : p.inputs.first_hop_miss)
      p1 += v;
    p1 /= static_cast<double>(std::max<std::size_t>(1, p.inputs.first_hop_miss.size()));
    w.row({std::string(to_string(axis)), values[i], p.completion, p.inputs.P_CN, wsum > 0 ? ps / wsum : 0.0, p1});
  }
}

inline void
write_comparison(std::ostream& out, const std::vector<CompareRow>& rows)
{
  CsvWriter w(out, {"value", "sim_mean", "model", "rel_error_pct"});
  for (const auto& r : rows)
    w.row({r.value, r.sim_mean, r.model, 100 * r.rel_error});
}

} // namespace ndnreuse

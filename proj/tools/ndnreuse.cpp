// Command-line front end: dataset ingestion, threshold calibration,
// simulation runs and sweeps, closed-form evaluation, model/simulation
// comparison and ANN benchmarking.

#include "ndnreuse/bench.hpp"
#include "ndnreuse/config.hpp"
#include "ndnreuse/report.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#ifndef NDNREUSE_VERSION
#define NDNREUSE_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using namespace ndnreuse;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kConfig = 1, kRuntime = 2, kAssert = 3 };

class AssertionFailed : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

std::string
utc_now()
{
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Collects the provenance of one invocation and writes manifest.json next
/// to its outputs.
class Manifest {
public:
  Manifest(std::string command, const fs::path& out) : m_out(out)
  {
    m_doc["command"] = std::move(command);
    m_doc["version"] = NDNREUSE_VERSION;
    m_doc["rng"] = std::string(Rng::algorithm);
    m_doc["output_dir"] = out.string();
    m_doc["started"] = utc_now();
    m_doc["files"] = json::array();
  }

  json& operator[](const char* key) { return m_doc[key]; }

  std::ofstream open(const std::string& name)
  {
    fs::create_directories(m_out);
    m_doc["files"].push_back(name);
    std::ofstream f(m_out / name);
    if (!f)
      throw std::runtime_error("cannot write " + (m_out / name).string());
    return f;
  }

  void finish()
  {
    m_doc["finished"] = utc_now();
    fs::create_directories(m_out);
    std::ofstream(m_out / "manifest.json") << m_doc.dump(2) << '\n';
  }

private:
  fs::path m_out;
  json m_doc;
};

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> reps;
  std::optional<std::string> mode;
  std::string out = "out";
  bool check = false;
  unsigned threads = 1;
};

ScenarioConfig
load(const Common& o)
{
  if (o.config.empty())
    throw ConfigError("--config is required");
  auto c = load_config(o.config);
  if (o.seed)
    c.seed = *o.seed;
  if (o.reps) {
    if (*o.reps < 1)
      throw ConfigError("--reps must be >= 1");
    c.reps = *o.reps;
  }
  if (o.mode)
    c.sim.mode = parse_mode(*o.mode);
  return c;
}

Dataset
load_dataset(const std::string& images, const std::string& labels, std::size_t per_class)
{
  try {
    return load_mnist(images, labels, per_class);
  } catch (const IdxError& e) {
    throw std::runtime_error(std::string("dataset: ") + e.what());
  }
}

void
describe_config(Manifest& man, const ScenarioConfig& c)
{
  man["config"] = c.source;
  man["seed"] = c.seed;
  man["reps"] = c.reps;
  man["mode"] = to_string(c.sim.mode);
  man["dataset"] = {{"images", c.images}, {"labels", c.labels}, {"per_class", c.per_class}};
}

// ---------------------------------------------------------------------------

int
cmd_ingest(const std::string& images, const std::string& labels, std::size_t per_class, const std::string& out)
{
  auto ds = load_dataset(images, labels, per_class);
  Manifest man("ingest", out);
  man["dataset"] = {{"images", images}, {"labels", labels}, {"per_class", ds.m}, {"classes", ds.K}};
  {
    auto f = man.open("dataset.csv");
    CsvWriter w(f, {"index", "content_id", "class_id", "name"});
    for (std::size_t i = 0; i < ds.records.size(); ++i)
      w.row({static_cast<unsigned long long>(i), static_cast<unsigned long long>(ds.records[i].content_id),
             static_cast<long long>(ds.records[i].class_id), image_name(ds.records[i].content_id)});
  }
  man.finish();
  std::cout << "ingested " << ds.size() << " images, " << ds.K << " classes x " << ds.m << "\n";
  return kOk;
}

int
cmd_calibrate(const Common& o, std::size_t pairs, double max_false_match)
{
  auto c = load(o);
  auto ds = load_dataset(c.images, c.labels, c.per_class);
  Workload wl(ds);
  Rng rng(derive_seed(c.seed, 11));
  // Equal numbers of same-class and different-class pairs.
  std::vector<LabeledPair> labeled;
  std::size_t same = 0, diff = 0;
  while (same < pairs || diff < pairs) {
    auto a = rng.below(ds.size());
    auto b = rng.below(ds.size());
    if (a == b)
      continue;
    bool s = ds.records[a].class_id == ds.records[b].class_id;
    if ((s && same >= pairs) || (!s && diff >= pairs))
      continue;
    (s ? same : diff)++;
    labeled.push_back({distance(wl.descriptor(a), wl.descriptor(b)), s});
  }
  auto cal = calibrate_theta(labeled, max_false_match);
  Manifest man("calibrate", o.out);
  describe_config(man, c);
  man["max_false_match"] = max_false_match;
  {
    auto f = man.open("calibration.csv");
    CsvWriter w(f, {"theta", "false_match_rate", "true_match_rate", "n_pairs", "max_false_match"});
    w.row({cal.theta, cal.false_match_rate, cal.true_match_rate, static_cast<unsigned long long>(cal.n_pairs),
           max_false_match});
  }
  man.finish();
  std::cout << "theta " << fmt_num(cal.theta) << " (false match " << fmt_num(cal.false_match_rate) << ", true match "
            << fmt_num(cal.true_match_rate) << ")\n";
  return kOk;
}

int
cmd_run_sim(const Common& o)
{
  auto c = load(o);
  auto ds = load_dataset(c.images, c.labels, c.per_class);
  Workload wl(ds);
  int reps = c.reps;

  Manifest man("run-sim", o.out);
  describe_config(man, c);
  man["reps"] = reps;

  // The first repetition keeps its event log; the rest run quietly.
  auto first = run(c.sim, wl, c.seed);
  first.metrics.rep = 0;
  std::vector<Metrics> runs{first.metrics};
  if (reps > 1) {
    auto more = replicate(c.sim, wl, c.seed + 1, reps - 1, o.threads);
    for (auto& m : more) {
      m.rep += 1;
      runs.push_back(std::move(m));
    }
  }
  {
    auto f = man.open("metrics.csv");
    write_metrics(f, runs, c.sim.mode);
  }
  {
    auto f = man.open("nodes.csv");
    write_node_stats(f, runs);
  }
  {
    auto f = man.open("requests.csv");
    write_requests(f, first.metrics, c.sim.topo);
  }
  {
    auto f = man.open("events.csv");
    write_event_log(f, first.log, c.sim.topo);
  }
  double search = 0;
  for (const auto& m : runs)
    search += m.mean_search_time;
  man["timing"] = {{"mean_index_search_seconds", search / static_cast<double>(runs.size())}};
  man.finish();

  for (const auto& m : runs)
    std::cout << "rep " << m.rep << " seed " << m.seed << ": mean completion " << fmt_num(m.mean_completion)
              << " s, hit rate " << fmt_num(m.hit_rate) << ", satisfied " << m.satisfied << "/" << m.emitted << "\n";

  if (o.check) {
    for (const auto& m : runs)
      if (m.emitted != m.satisfied + m.dropped + m.pending || m.pending != 0)
        throw AssertionFailed("request accounting does not close for seed " + std::to_string(m.seed));
  }
  return kOk;
}

/// Estimates for a closed-form-only evaluation: configured overrides, else
/// the closed-form first-hop miss rates.
Estimates
configured_estimates(const ScenarioConfig& c)
{
  Estimates e;
  auto p = configured_model(c);
  if (c.model.first_hop_miss) {
    e.first_hop_miss = *c.model.first_hop_miss;
  } else {
    for (int k = 1; k <= p.K; ++k)
      e.first_hop_miss.push_back(miss_first(k, p));
  }
  for (const auto& s : c.sim.topo.services)
    e.P_S[s.name] = c.model.P_S.value_or(0.0);
  e.P_CN = c.model.P_CN.value_or(1.0);
  return e;
}

int
cmd_run_model(const Common& o)
{
  auto c = load(o);
  std::vector<double> values{0};
  std::string axis = "none";
  if (c.sweep) {
    values = c.sweep->values;
    axis = to_string(c.sweep->axis);
  }
  std::vector<ModelOutput> outputs;
  std::vector<double> predicted;
  for (double v : values) {
    ScenarioConfig point = c;
    if (c.sweep)
      point.sim = with_axis(c.sim, c.sweep->axis, v);
    auto p = configured_model(point);
    auto est = configured_estimates(point);
    outputs.push_back(evaluate(p, est.first_hop_miss));
    predicted.push_back(predict(point.sim, est, point.per_class).completion);
  }
  Manifest man("run-model", o.out);
  describe_config(man, c);
  {
    auto f = man.open("model.csv");
    write_model(f, axis, values, outputs, predicted);
  }
  man.finish();
  for (std::size_t i = 0; i < values.size(); ++i)
    std::cout << axis << "=" << fmt_num(values[i]) << ": C_TOTAL " << fmt_num(outputs[i].c_total) << " s, VRTT "
              << fmt_num(outputs[i].vrtt) << " s, completion " << fmt_num(predicted[i]) << " s\n";
  return kOk;
}

int
cmd_sweep(const Common& o)
{
  auto c = load(o);
  if (!c.sweep)
    throw ConfigError(c.source + ": sweep needs a [sweep] section with axis and values");
  auto ds = load_dataset(c.images, c.labels, c.per_class);
  Workload wl(ds);
  auto points = sweep(c.sim, wl, c.sweep->axis, c.sweep->values, c.reps, c.seed, o.threads);

  std::vector<Prediction> preds;
  std::vector<Metrics> all;
  for (const auto& p : points) {
    auto cfg = with_axis(c.sim, c.sweep->axis, p.value);
    preds.push_back(predict(cfg, estimate(cfg, p.runs), c.per_class));
    all.insert(all.end(), p.runs.begin(), p.runs.end());
  }

  Manifest man("sweep", o.out);
  describe_config(man, c);
  man["axis"] = to_string(c.sweep->axis);
  man["values"] = c.sweep->values;
  {
    auto f = man.open("sweep.csv");
    write_sweep(f, c.sweep->axis, points);
  }
  {
    auto f = man.open("runs.csv");
    write_metrics(f, all, c.sim.mode);
  }
  {
    auto f = man.open("predicted.csv");
    write_prediction(f, c.sweep->axis, c.sweep->values, preds);
  }
  man.finish();
  for (std::size_t i = 0; i < points.size(); ++i)
    std::cout << to_string(c.sweep->axis) << "=" << fmt_num(points[i].value) << ": mean " << fmt_num(points[i].mean)
              << " s (sem " << fmt_num(points[i].sem) << "), model " << fmt_num(preds[i].completion) << " s\n";
  return kOk;
}

int
cmd_compare(const std::string& sim_path, const std::string& model_path, const std::string& out, bool check,
            double max_error)
{
  auto sim = read_csv(sim_path);
  auto model = read_csv(model_path);
  auto sim_mean = sim.column(sim.has("mean") ? "mean" : "sim_mean");
  auto model_col = model.column("model");
  auto sv = sim.column("value"), mv = model.column("value");
  if (sim.rows.size() != model.rows.size())
    throw ConfigError("compare: sweep axes differ (" + std::to_string(sim.rows.size()) + " vs " +
                      std::to_string(model.rows.size()) + " points)");
  if (sim.has("axis") && model.has("axis") && !sim.rows.empty() &&
      sim.rows[0][sim.column("axis")] != model.rows[0][model.column("axis")])
    throw ConfigError("compare: sweep axes differ");

  std::vector<CompareRow> rows;
  double worst = 0;
  for (std::size_t i = 0; i < sim.rows.size(); ++i) {
    if (sim.rows[i][sv] != model.rows[i][mv])
      throw ConfigError("compare: axis value " + sim.rows[i][sv] + " does not match " + model.rows[i][mv]);
    CompareRow r;
    r.value = std::stod(sim.rows[i][sv]);
    r.sim_mean = std::stod(sim.rows[i][sim_mean]);
    r.model = std::stod(model.rows[i][model_col]);
    r.rel_error = relative_error(r.model, r.sim_mean);
    worst = std::max(worst, r.rel_error);
    rows.push_back(r);
  }
  Manifest man("compare", out);
  man["sim"] = sim_path;
  man["model"] = model_path;
  man["max_rel_error"] = worst;
  {
    auto f = man.open("compare.csv");
    write_comparison(f, rows);
  }
  man.finish();
  for (const auto& r : rows)
    std::cout << "value " << fmt_num(r.value) << ": sim " << fmt_num(r.sim_mean) << " model " << fmt_num(r.model)
              << " error " << fmt_num(100 * r.rel_error) << "%\n";
  std::cout << "max error " << fmt_num(100 * worst) << "%\n";
  if (check && worst > max_error)
    throw AssertionFailed("max relative error " + fmt_num(100 * worst) + "% exceeds " + fmt_num(100 * max_error) + "%");
  return kOk;
}

int
cmd_bench_ann(const std::vector<std::size_t>& sizes, std::size_t queries, const HnswParams& params,
              std::uint64_t seed, bool recall, const std::string& out)
{
  Manifest man("bench-ann", out);
  man["seed"] = seed;
  man["params"] = {{"M", params.M}, {"ef_construction", params.ef_construction}, {"ef_search", params.ef_search}};
  auto f = man.open("bench.csv");
  CsvWriter w(f, {"n", "queries", "build_seconds", "mean_query_seconds", "recall_at_1"});
  for (auto n : sizes) {
    auto row = bench_ann(n, queries, kDescriptorSize, params, seed, recall);
    w.row({static_cast<unsigned long long>(row.n), static_cast<unsigned long long>(row.queries), row.build_seconds,
           row.mean_query_seconds, row.recall_at_1});
    std::cout << "n " << n << ": build " << fmt_num(row.build_seconds) << " s, query "
              << fmt_num(row.mean_query_seconds * 1e3) << " ms"
              << (recall ? ", recall@1 " + fmt_num(row.recall_at_1) : std::string()) << "\n";
  }
  f.close();
  man.finish();
  return kOk;
}

int
cmd_descriptor_dump(const std::string& images, const std::string& labels, std::size_t per_class,
                    const std::vector<std::uint32_t>& ids)
{
  auto ds = load_dataset(images, labels, per_class);
  std::vector<std::string> header{"content_id", "class_id"};
  for (std::size_t i = 0; i < kDescriptorSize; ++i)
    header.push_back("d" + std::to_string(i));
  CsvWriter w(std::cout, header);
  auto emit = [&](std::size_t idx) {
    const auto& rec = ds.records[idx];
    auto d = describe_image(rec.pixels);
    std::vector<CsvWriter::Cell> row{static_cast<unsigned long long>(rec.content_id),
                                     static_cast<long long>(rec.class_id)};
    for (float v : d)
      row.push_back(static_cast<double>(v));
    w.row(row);
  };
  if (ids.empty()) {
    for (std::size_t i = 0; i < ds.size(); ++i)
      emit(i);
  } else {
    for (auto id : ids) {
      auto idx = ds.find(id);
      if (idx < 0)
        throw ConfigError("descriptor dump: content id " + std::to_string(id) + " not in the dataset");
      emit(static_cast<std::size_t>(idx));
    }
  }
  return kOk;
}

void
add_common(CLI::App* app, Common& o, bool with_out = true)
{
  app->add_option("--config", o.config, "scenario config (INI)")->required();
  app->add_option("--seed", o.seed, "base seed (overrides [seeds] seed)");
  if (with_out)
    app->add_option("--out", o.out, "output directory")->capture_default_str();
}

} // namespace

int
main(int argc, char** argv)
{
  CLI::App app{"Similarity-based computation reuse over NDN: simulator, model and tools"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(NDNREUSE_VERSION));

  Common o;
  o.threads = std::max(1u, std::thread::hardware_concurrency());

  std::string images = "data/mnist-images-idx3-ubyte.gz", labels = "data/mnist-labels-idx1-ubyte.gz";
  std::size_t per_class = 0;
  auto* ingest = app.add_subcommand("ingest", "load an IDX dataset and write its class layout");
  ingest->add_option("--images", images)->capture_default_str();
  ingest->add_option("--labels", labels)->capture_default_str();
  ingest->add_option("--per-class", per_class, "images kept per class (0 = smallest class)");
  ingest->add_option("--out", o.out)->capture_default_str();

  std::size_t pairs = 20000;
  double max_fm = 0.01;
  auto* calibrate = app.add_subcommand("calibrate", "choose theta for a false-match budget");
  add_common(calibrate, o);
  calibrate->add_option("--pairs", pairs, "pairs of each kind (same / different class)")->capture_default_str();
  calibrate->add_option("--max-false-match", max_fm)->capture_default_str();

  auto* run_sim = app.add_subcommand("run-sim", "run the simulator");
  add_common(run_sim, o);
  run_sim->add_option("--reps", o.reps, "repetitions (default: [seeds] reps, 10)");
  run_sim->add_option("--mode", o.mode, "similarity|exact|none");
  run_sim->add_flag("--assert", o.check, "fail with exit 3 unless request accounting closes");
  run_sim->add_option("--threads", o.threads);

  auto* run_model = app.add_subcommand("run-model", "evaluate the closed-form model");
  add_common(run_model, o);
  run_model->add_option("--mode", o.mode, "similarity|exact|none");

  auto* sweep_cmd = app.add_subcommand("sweep", "simulate every [sweep] value with repetitions");
  add_common(sweep_cmd, o);
  sweep_cmd->add_option("--reps", o.reps, "repetitions per value (default 10)");
  sweep_cmd->add_option("--mode", o.mode, "similarity|exact|none");
  sweep_cmd->add_option("--threads", o.threads);

  std::string sim_csv, model_csv;
  double max_error = 0.25;
  auto* compare = app.add_subcommand("compare", "relative error of model against simulation");
  compare->add_option("--sim", sim_csv, "sweep.csv from `sweep`")->required();
  compare->add_option("--model", model_csv, "predicted.csv from `sweep` or model.csv from `run-model`")->required();
  compare->add_option("--out", o.out)->capture_default_str();
  compare->add_flag("--assert", o.check, "fail with exit 3 when the max error exceeds --max-error");
  compare->add_option("--max-error", max_error, "relative bound for --assert")->capture_default_str();

  std::vector<std::size_t> sizes{20000, 100000};
  std::size_t queries = 1000;
  HnswParams hp;
  std::uint64_t bench_seed = 1;
  bool recall = false;
  auto* bench = app.add_subcommand("bench-ann", "HNSW build and query timings on random points");
  bench->add_option("--sizes", sizes)->delimiter(',')->capture_default_str();
  bench->add_option("--queries", queries)->capture_default_str();
  bench->add_option("--M", hp.M)->capture_default_str();
  bench->add_option("--ef-construction", hp.ef_construction)->capture_default_str();
  bench->add_option("--ef-search", hp.ef_search)->capture_default_str();
  bench->add_option("--seed", bench_seed)->capture_default_str();
  bench->add_flag("--recall", recall, "also measure recall@1 by exact search");
  bench->add_option("--out", o.out)->capture_default_str();

  std::vector<std::uint32_t> ids;
  auto* descriptor = app.add_subcommand("descriptor", "descriptor utilities");
  descriptor->require_subcommand(1);
  auto* dump = descriptor->add_subcommand("dump", "print descriptors as CSV");
  dump->add_option("--images", images)->capture_default_str();
  dump->add_option("--labels", labels)->capture_default_str();
  dump->add_option("--per-class", per_class);
  dump->add_option("--id", ids, "content ids (default: all)")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*ingest)
      return cmd_ingest(images, labels, per_class, o.out);
    if (*calibrate)
      return cmd_calibrate(o, pairs, max_fm);
    if (*run_sim)
      return cmd_run_sim(o);
    if (*run_model)
      return cmd_run_model(o);
    if (*sweep_cmd)
      return cmd_sweep(o);
    if (*compare)
      return cmd_compare(sim_csv, model_csv, o.out, o.check, max_error);
    if (*bench)
      return cmd_bench_ann(sizes, queries, hp, bench_seed, recall, o.out);
    if (*dump)
      return cmd_descriptor_dump(images, labels, per_class, ids);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const AssertionFailed& e) {
    std::cerr << "assertion failed: " << e.what() << "\n";
    return kAssert;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}

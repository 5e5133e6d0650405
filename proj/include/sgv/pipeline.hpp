#pragma once

// Retrieve -> re-rank -> localize -> evaluate orchestration, shared by the
// `sgv` command-line tool and the acceptance suite.

#include "sgv/core.hpp"
#include "sgv/matching.hpp"
#include "sgv/metrics.hpp"
#include "sgv/parallel.hpp"
#include "sgv/registration.hpp"
#include "sgv/rerank.hpp"
#include "sgv/retrieval.hpp"
#include "sgv/storage.hpp"
#include "sgv/synthgen.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace sgv {

struct RunConfig {
  WorldConfig world;

  std::filesystem::path manifest;
  std::filesystem::path out;
  Strategy strategy = Strategy::SpectralGV;
  RerankParams rerank;
  std::size_t retrieval_depth = 25;
  DescriptorMetric metric = DescriptorMetric::Euclidean;
  std::vector<double> radii{5.0, 20.0};
  std::vector<std::size_t> k_values{1, 5};
  std::uint64_t seed = 7;
  std::size_t threads = 0;
  std::vector<std::size_t> bench_n_topk{2, 20};
  std::vector<Strategy> bench_strategies{Strategy::SpectralGV, Strategy::RansacRIR};

  std::size_t depth() const { return std::max(retrieval_depth, rerank.n_topk); }
};

// ---------------------------------------------------------------------------
// Config file: `key = value` lines, '#' starts a comment, unknown keys fail.

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& text, const std::string& where) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw Error(ErrorCode::InvalidConfig, where + ": cannot parse '" + text + "' as a number");
  }
  return value;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const std::string& where) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(trim(item), where));
  if (out.empty()) throw Error(ErrorCode::InvalidConfig, where + ": empty list");
  return out;
}

inline bool parse_bool(const std::string& text, const std::string& where) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw Error(ErrorCode::InvalidConfig, where + ": expected a boolean, got '" + text + "'");
}

inline Strategy parse_strategy_or_throw(const std::string& text, const std::string& where) {
  const auto s = parse_strategy(text);
  if (!s) throw Error(ErrorCode::InvalidConfig, where + ": unknown strategy '" + text + "'");
  return *s;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

inline const std::map<std::string, Setter>& config_setters() {
  using S = std::string;
  static const std::map<std::string, Setter> setters = {
      // world
      {"seed", [](RunConfig& c, const S& v, const S& w) { c.seed = c.world.seed = parse_number<std::uint64_t>(v, w); }},
      {"num_places", [](RunConfig& c, const S& v, const S& w) { c.world.num_places = parse_number<std::size_t>(v, w); }},
      {"num_queries", [](RunConfig& c, const S& v, const S& w) { c.world.num_queries = parse_number<std::size_t>(v, w); }},
      {"place_spacing", [](RunConfig& c, const S& v, const S& w) { c.world.place_spacing = parse_number<double>(v, w); }},
      {"points_per_scan", [](RunConfig& c, const S& v, const S& w) { c.world.points_per_scan = parse_number<std::size_t>(v, w); }},
      {"crop_radius", [](RunConfig& c, const S& v, const S& w) { c.world.crop_radius = parse_number<double>(v, w); }},
      {"alias_fraction", [](RunConfig& c, const S& v, const S& w) { c.world.alias_fraction = parse_number<double>(v, w); }},
      {"feature_noise_sigma", [](RunConfig& c, const S& v, const S& w) { c.world.feature_noise_sigma = parse_number<double>(v, w); }},
      {"outlier_rate", [](RunConfig& c, const S& v, const S& w) { c.world.outlier_rate = parse_number<double>(v, w); }},
      {"pose_noise_trans", [](RunConfig& c, const S& v, const S& w) { c.world.pose_noise_trans = parse_number<double>(v, w); }},
      {"pose_noise_rot", [](RunConfig& c, const S& v, const S& w) { c.world.pose_noise_rot = parse_number<double>(v, w); }},
      {"descriptor_dim", [](RunConfig& c, const S& v, const S& w) { c.world.descriptor_dim = parse_number<std::size_t>(v, w); }},
      {"feature_dim", [](RunConfig& c, const S& v, const S& w) { c.world.feature_dim = parse_number<std::size_t>(v, w); }},
      {"descriptor_noise_sigma", [](RunConfig& c, const S& v, const S& w) { c.world.descriptor_noise_sigma = parse_number<double>(v, w); }},
      {"point_noise_sigma", [](RunConfig& c, const S& v, const S& w) { c.world.point_noise_sigma = parse_number<double>(v, w); }},
      {"landmark_types", [](RunConfig& c, const S& v, const S& w) { c.world.landmark_types = parse_number<std::size_t>(v, w); }},
      {"alias_perturb_fraction", [](RunConfig& c, const S& v, const S& w) { c.world.alias_perturb_fraction = parse_number<double>(v, w); }},
      {"alias_perturb_min", [](RunConfig& c, const S& v, const S& w) { c.world.alias_perturb_min = parse_number<double>(v, w); }},
      {"alias_perturb_max", [](RunConfig& c, const S& v, const S& w) { c.world.alias_perturb_max = parse_number<double>(v, w); }},
      {"alias_min_separation", [](RunConfig& c, const S& v, const S& w) { c.world.alias_min_separation = parse_number<double>(v, w); }},
      {"layout_height", [](RunConfig& c, const S& v, const S& w) { c.world.layout_height = parse_number<double>(v, w); }},
      {"truth_radius", [](RunConfig& c, const S& v, const S& w) { c.world.truth_radius = parse_number<double>(v, w); }},
      // run
      {"manifest", [](RunConfig& c, const S& v, const S&) { c.manifest = v; }},
      {"out", [](RunConfig& c, const S& v, const S&) { c.out = v; }},
      {"strategy", [](RunConfig& c, const S& v, const S& w) { c.strategy = parse_strategy_or_throw(v, w); }},
      {"n_topk", [](RunConfig& c, const S& v, const S& w) { c.rerank.n_topk = parse_number<std::size_t>(v, w); }},
      {"retrieval_depth", [](RunConfig& c, const S& v, const S& w) { c.retrieval_depth = parse_number<std::size_t>(v, w); }},
      {"descriptor_metric", [](RunConfig& c, const S& v, const S& w) {
         if (v == "euclidean") c.metric = DescriptorMetric::Euclidean;
         else if (v == "cosine") c.metric = DescriptorMetric::Cosine;
         else throw Error(ErrorCode::InvalidConfig, w + ": descriptor_metric must be euclidean or cosine");
       }},
      {"d_thr", [](RunConfig& c, const S& v, const S& w) { c.rerank.spectral.d_thr = parse_number<double>(v, w); }},
      {"n_max", [](RunConfig& c, const S& v, const S& w) { c.rerank.spectral.n_max = parse_number<std::size_t>(v, w); }},
      {"power_tol", [](RunConfig& c, const S& v, const S& w) { c.rerank.spectral.tol = parse_number<double>(v, w); }},
      {"power_max_iters", [](RunConfig& c, const S& v, const S& w) { c.rerank.spectral.max_iters = parse_number<std::size_t>(v, w); }},
      {"mutual", [](RunConfig& c, const S& v, const S& w) { c.rerank.spectral.mutual = parse_bool(v, w); }},
      {"ransac_tau", [](RunConfig& c, const S& v, const S& w) { c.rerank.ransac.inlier_threshold = parse_number<double>(v, w); }},
      {"ransac_max_iters", [](RunConfig& c, const S& v, const S& w) { c.rerank.ransac.max_iterations = parse_number<std::size_t>(v, w); }},
      {"ransac_confidence", [](RunConfig& c, const S& v, const S& w) { c.rerank.ransac.confidence = parse_number<double>(v, w); }},
      {"alpha", [](RunConfig& c, const S& v, const S& w) { c.rerank.alpha = parse_number<double>(v, w); }},
      {"n_qe", [](RunConfig& c, const S& v, const S& w) { c.rerank.n_qe = parse_number<std::size_t>(v, w); }},
      {"radii", [](RunConfig& c, const S& v, const S& w) { c.radii = parse_list<double>(v, w); }},
      {"k_values", [](RunConfig& c, const S& v, const S& w) { c.k_values = parse_list<std::size_t>(v, w); }},
      {"threads", [](RunConfig& c, const S& v, const S& w) { c.threads = parse_number<std::size_t>(v, w); }},
      {"bench_n_topk", [](RunConfig& c, const S& v, const S& w) { c.bench_n_topk = parse_list<std::size_t>(v, w); }},
      {"bench_strategies", [](RunConfig& c, const S& v, const S& w) {
         c.bench_strategies.clear();
         std::stringstream ss(v);
         std::string item;
         while (std::getline(ss, item, ',')) c.bench_strategies.push_back(parse_strategy_or_throw(trim(item), w));
       }},
  };
  return setters;
}

}  // namespace detail

inline void apply_config_text(RunConfig& cfg, std::istream& in, const std::string& source = "config") {
  const auto& setters = detail::config_setters();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = source + ":" + std::to_string(lineno);
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidConfig, where + ": expected 'key = value'");
    const std::string key = detail::trim(std::string_view(body).substr(0, eq));
    const std::string value = detail::trim(std::string_view(body).substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw Error(ErrorCode::InvalidConfig, where + ": unknown key '" + key + "'");
    if (value.empty()) throw Error(ErrorCode::InvalidConfig, where + ": empty value for '" + key + "'");
    it->second(cfg, value, where);
  }
}

inline RunConfig parse_config(std::istream& in, const std::string& source = "config") {
  RunConfig cfg;
  apply_config_text(cfg, in, source);
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open config '" + path.string() + "'");
  return parse_config(in, path.string());
}

// ---------------------------------------------------------------------------
// Evaluation

inline std::string radius_key(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", r);
  return buf;
}

/// Runs every query through retrieval, the chosen re-ranker and registration
/// against the top-1 candidate. Outcomes are in query order and independent
/// of `threads`; only timings vary. `query_parallel` processes queries
/// concurrently (candidates then score sequentially); otherwise queries run
/// one at a time and the threads go to candidate scoring.
inline std::vector<QueryOutcome> evaluate_queries(const Dataset& data, const RunConfig& cfg, Strategy strategy,
                                                  std::size_t n_topk, bool query_parallel = true) {
  const DescriptorIndex index = build_index(data.database, cfg.metric);
  const ScanCatalog catalog(data.database);
  RerankParams params = cfg.rerank;
  params.strategy = strategy;
  params.n_topk = n_topk;
  params.ransac.seed = cfg.seed;
  params.validate();
  const std::size_t depth = std::max(cfg.retrieval_depth, n_topk);
  const RerankContext ctx{&index, &catalog, depth};

  const std::size_t total = resolve_threads(cfg.threads);
  const std::size_t outer = query_parallel ? std::min(total, std::max<std::size_t>(1, data.queries.size())) : 1;
  params.threads = std::max<std::size_t>(1, total / outer);

  std::vector<QueryOutcome> outcomes(data.queries.size());
  parallel_for(data.queries.size(), outer, [&](std::size_t qi) {
    const ScanRecord& q = data.queries[qi];
    QueryOutcome& o = outcomes[qi];
    o.query_id = q.id;
    for (double r : cfg.radii) o.positives[r] = ground_truth_positives(q, data.database, r);

    RankedList before, after;
    try {
      before = query_topk(index, q.global_descriptor, depth);
      const auto t0 = std::chrono::steady_clock::now();
      after = apply_strategy(q, before, ctx, params);
      const auto t1 = std::chrono::steady_clock::now();
      o.rerank_ms = strategy == Strategy::None ? 0.0 : std::chrono::duration<double, std::milli>(t1 - t0).count();
    } catch (const Error&) {
      // Re-ranking failure degrades to the retrieval order.
      after = before;
    }
    o.ranked_before = before.ids();
    o.ranked_after = after.ids();
    if (before.empty()) return;

    o.top1_distance_before = geo_distance(q.geo_location, catalog.at(before[0].id).geo_location);
    o.top1_distance_after = geo_distance(q.geo_location, catalog.at(after[0].id).geo_location);

    const ScanRecord& top1 = catalog.at(after[0].id);
    const RigidTransform gt = top1.gt_pose.inverse().compose(q.gt_pose);
    RigidTransform estimate = RigidTransform::identity();
    try {
      const CorrespondenceSet corrs = match_features(q, top1, params.spectral.n_max, params.spectral.mutual);
      RansacParams rp = params.ransac;
      rp.seed = detail::derive_seed(cfg.seed, 100, qi);
      estimate = ransac_register(corrs, rp).transform;
      o.registered = true;
    } catch (const Error&) {
      o.registered = false;
    }
    o.pose_error = pose_errors(estimate, gt);
  });
  return outcomes;
}

// ---------------------------------------------------------------------------
// Results records

inline nlohmann::ordered_json outcome_to_json(const QueryOutcome& o, bool with_after) {
  nlohmann::ordered_json j;
  j["query_id"] = o.query_id;
  j["before"] = o.ranked_before;
  if (with_after) j["after"] = o.ranked_after;
  nlohmann::ordered_json pos = nlohmann::ordered_json::object();
  for (const auto& [r, ids] : o.positives) pos[radius_key(r)] = std::vector<std::string>(ids.begin(), ids.end());
  j["positives"] = pos;
  j["top1_distance_before"] = o.top1_distance_before;
  j["top1_distance_after"] = o.top1_distance_after;
  j["registered"] = o.registered;
  if (o.pose_error) {
    j["rte"] = o.pose_error->rte;
    j["rre"] = o.pose_error->rre;
  }
  j["rerank_ms"] = o.rerank_ms;
  return j;
}

inline QueryOutcome outcome_from_json(const nlohmann::ordered_json& j) {
  QueryOutcome o;
  o.query_id = j.at("query_id").get<std::string>();
  o.ranked_before = j.at("before").get<std::vector<std::string>>();
  o.ranked_after = j.contains("after") ? j.at("after").get<std::vector<std::string>>() : o.ranked_before;
  for (const auto& [key, ids] : j.at("positives").items()) {
    const auto v = ids.get<std::vector<std::string>>();
    o.positives[std::stod(key)] = std::set<std::string>(v.begin(), v.end());
  }
  o.top1_distance_before = j.at("top1_distance_before").get<double>();
  o.top1_distance_after = j.at("top1_distance_after").get<double>();
  o.registered = j.at("registered").get<bool>();
  if (j.contains("rte")) o.pose_error = PoseError{j.at("rte").get<double>(), j.at("rre").get<double>()};
  o.rerank_ms = j.at("rerank_ms").get<double>();
  return o;
}

inline nlohmann::ordered_json retrieval_metrics_json(std::span<const QueryOutcome> outcomes,
                                                     std::span<const double> radii, std::span<const std::size_t> ks,
                                                     Stage stage) {
  const MetricReport r = compute_report(outcomes, radii, ks, stage);
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [radius, by_k] : r.recall_at) {
    nlohmann::ordered_json rec = nlohmann::ordered_json::object();
    for (const auto& [k, v] : by_k) rec["R" + std::to_string(k)] = v;
    rec["MRR"] = r.mrr.at(radius);
    j[radius_key(radius)] = rec;
  }
  return j;
}

/// Summary record. Every number is a function of the per-query records, so a
/// reader can recompute it from the same file.
inline nlohmann::ordered_json summarize(std::span<const QueryOutcome> outcomes, Strategy strategy, std::size_t n_topk,
                                        std::span<const double> radii, std::span<const std::size_t> ks) {
  nlohmann::ordered_json s;
  s["strategy"] = std::string(to_string(strategy));
  s["n_topk"] = n_topk;
  s["num_queries"] = outcomes.size();
  nlohmann::ordered_json m;
  m["before"] = retrieval_metrics_json(outcomes, radii, ks, Stage::Before);
  if (strategy != Strategy::None) m["after"] = retrieval_metrics_json(outcomes, radii, ks, Stage::After);
  const MetricReport pose = compute_report(outcomes, {}, {}, Stage::After);
  m["success_rate"] = pose.success_rate;
  m["mean_rte"] = pose.mean_rte;
  m["mean_rre"] = pose.mean_rre;
  std::size_t failures = 0;
  for (const auto& o : outcomes) failures += o.registered ? 0 : 1;
  m["registration_failures"] = failures;
  if (strategy != Strategy::None) {
    nlohmann::ordered_json eq3 = nlohmann::ordered_json::object();
    for (double r : radii) {
      const Eq3Summary e = eq3_violations(outcomes, r);
      eq3[radius_key(r)] = {{"violations", e.violations},
                            {"mean_top1_before", e.mean_top1_before},
                            {"mean_top1_after", e.mean_top1_after}};
    }
    m["eq3"] = eq3;
  }
  s["metrics"] = m;
  double total_ms = 0.0;
  for (const auto& o : outcomes) total_ms += o.rerank_ms;
  s["timing"] = {{"mean_rerank_ms", outcomes.empty() ? 0.0 : total_ms / static_cast<double>(outcomes.size())}};
  return s;
}

inline nlohmann::ordered_json config_header(const RunConfig& cfg, const std::string& command) {
  nlohmann::ordered_json h;
  h["command"] = command;
  h["manifest"] = cfg.manifest.string();
  h["strategy"] = std::string(to_string(cfg.strategy));
  h["n_topk"] = cfg.rerank.n_topk;
  h["retrieval_depth"] = cfg.retrieval_depth;
  h["d_thr"] = cfg.rerank.spectral.d_thr;
  h["n_max"] = cfg.rerank.spectral.n_max;
  h["power_tol"] = cfg.rerank.spectral.tol;
  h["power_max_iters"] = cfg.rerank.spectral.max_iters;
  h["mutual"] = cfg.rerank.spectral.mutual;
  h["ransac_tau"] = cfg.rerank.ransac.inlier_threshold;
  h["ransac_max_iters"] = cfg.rerank.ransac.max_iterations;
  h["ransac_confidence"] = cfg.rerank.ransac.confidence;
  h["alpha"] = cfg.rerank.alpha;
  h["n_qe"] = cfg.rerank.qe_depth();
  h["radii"] = cfg.radii;
  h["k_values"] = cfg.k_values;
  h["seed"] = cfg.seed;
  h["threads"] = cfg.threads;
  return h;
}

struct RunOutput {
  std::vector<QueryOutcome> outcomes;
  ResultsFile results;
};

inline RunOutput run_pipeline(const Dataset& data, const RunConfig& cfg) {
  RunOutput out;
  out.outcomes = evaluate_queries(data, cfg, cfg.strategy, cfg.rerank.n_topk);
  out.results.header = config_header(cfg, "run");
  const bool with_after = cfg.strategy != Strategy::None;
  for (const auto& o : out.outcomes) out.results.records.push_back(outcome_to_json(o, with_after));
  if (!out.outcomes.empty()) {
    out.results.summary = summarize(out.outcomes, cfg.strategy, cfg.rerank.n_topk, cfg.radii, cfg.k_values);
  }
  return out;
}

/// Recomputes the summary record of a `run` results file from its query records.
inline nlohmann::ordered_json recompute_summary(const ResultsFile& file) {
  std::vector<QueryOutcome> outcomes;
  for (const auto& rec : file.records) outcomes.push_back(outcome_from_json(rec));
  const auto strategy = parse_strategy(file.header.at("strategy").get<std::string>()).value_or(Strategy::None);
  const auto radii = file.header.at("radii").get<std::vector<double>>();
  const auto ks = file.header.at("k_values").get<std::vector<std::size_t>>();
  return summarize(outcomes, strategy, file.header.at("n_topk").get<std::size_t>(), radii, ks);
}

// ---------------------------------------------------------------------------
// Benchmark

struct BenchRow {
  Strategy strategy = Strategy::SpectralGV;
  std::size_t n_topk = 0;
  double mean_rerank_ms = 0.0;
  double recall1 = 0.0;
  double mrr = 0.0;
};

struct BenchOutput {
  std::vector<BenchRow> rows;
  ResultsFile results;
};

/// Mean per-query re-rank time and R1/MRR (first radius) for every strategy
/// x n_topk. Queries run one at a time so each timing is a single query's
/// latency with candidate scoring spread over the configured threads.
inline BenchOutput run_bench(const Dataset& data, const RunConfig& cfg) {
  BenchOutput out;
  out.results.header = config_header(cfg, "bench");
  out.results.header["bench_n_topk"] = cfg.bench_n_topk;
  std::vector<std::string> names;
  for (Strategy s : cfg.bench_strategies) names.emplace_back(to_string(s));
  out.results.header["bench_strategies"] = names;

  const double radius = cfg.radii.front();
  for (Strategy s : cfg.bench_strategies) {
    for (std::size_t n : cfg.bench_n_topk) {
      const auto outcomes = evaluate_queries(data, cfg, s, n, /*query_parallel=*/false);
      BenchRow row;
      row.strategy = s;
      row.n_topk = n;
      for (const auto& o : outcomes) row.mean_rerank_ms += o.rerank_ms;
      if (!outcomes.empty()) row.mean_rerank_ms /= static_cast<double>(outcomes.size());
      row.recall1 = recall_at_k(outcomes, 1, radius);
      row.mrr = mean_reciprocal_rank(outcomes, radius);
      out.rows.push_back(row);

      nlohmann::ordered_json j;
      j["record"] = "bench";
      j["strategy"] = std::string(to_string(s));
      j["n_topk"] = n;
      j["mean_rerank_ms"] = row.mean_rerank_ms;
      j["R1"] = row.recall1;
      j["MRR"] = row.mrr;
      out.results.records.push_back(j);
    }
  }

  nlohmann::ordered_json summary;
  summary["radius"] = radius;
  nlohmann::ordered_json ratios = nlohmann::ordered_json::object();
  if (cfg.bench_n_topk.size() >= 2) {
    const std::size_t lo = cfg.bench_n_topk.front(), hi = cfg.bench_n_topk.back();
    for (Strategy s : cfg.bench_strategies) {
      double t_lo = 0.0, t_hi = 0.0;
      for (const auto& r : out.rows) {
        if (r.strategy != s) continue;
        if (r.n_topk == lo) t_lo = r.mean_rerank_ms;
        if (r.n_topk == hi) t_hi = r.mean_rerank_ms;
      }
      ratios[std::string(to_string(s))] = t_lo > 0.0 ? t_hi / t_lo : 0.0;
    }
    summary["time_ratio_n_topk"] = {{"from", lo}, {"to", hi}};
  }
  summary["time_ratio"] = ratios;
  out.results.summary = summary;
  return out;
}

inline std::string format_bench_table(std::span<const BenchRow> rows) {
  std::ostringstream os;
  os << std::left << std::setw(14) << "strategy" << std::right << std::setw(8) << "n_topk" << std::setw(14)
     << "t_mean(ms)" << std::setw(10) << "R1" << std::setw(10) << "MRR" << '\n';
  os << std::fixed;
  for (const auto& r : rows) {
    os << std::left << std::setw(14) << to_string(r.strategy) << std::right << std::setw(8) << r.n_topk
       << std::setw(14) << std::setprecision(3) << r.mean_rerank_ms << std::setw(10) << std::setprecision(1)
       << r.recall1 << std::setw(10) << r.mrr << '\n';
  }
  return os.str();
}

/// Human-readable rendering of any results file.
inline std::string format_report(const ResultsFile& file) {
  std::ostringstream os;
  os << "command: " << file.header.value("command", "?") << '\n';
  if (file.header.value("command", "") == "bench") {
    std::vector<BenchRow> rows;
    for (const auto& rec : file.records) {
      BenchRow r;
      r.strategy = parse_strategy(rec.at("strategy").get<std::string>()).value_or(Strategy::None);
      r.n_topk = rec.at("n_topk").get<std::size_t>();
      r.mean_rerank_ms = rec.at("mean_rerank_ms").get<double>();
      r.recall1 = rec.at("R1").get<double>();
      r.mrr = rec.at("MRR").get<double>();
      rows.push_back(r);
    }
    os << format_bench_table(rows);
    if (file.summary) os << "time ratios: " << file.summary->at("time_ratio").dump() << '\n';
    return os.str();
  }
  os << "strategy: " << file.header.value("strategy", "?") << "  n_topk: " << file.header.value("n_topk", 0)
     << "  queries: " << file.records.size() << '\n';
  if (!file.summary) {
    os << "(no queries evaluated)\n";
    return os.str();
  }
  const auto& m = file.summary->at("metrics");
  os << std::fixed << std::setprecision(2);
  for (const char* stage : {"before", "after"}) {
    if (!m.contains(stage)) continue;
    for (const auto& [radius, vals] : m.at(stage).items()) {
      os << std::left << std::setw(8) << stage << std::right << " @" << std::setw(4) << radius << " m:";
      for (const auto& [name, v] : vals.items()) os << "  " << name << "=" << v.get<double>();
      os << '\n';
    }
  }
  os << "success rate: " << m.at("success_rate").get<double>() << " %  mean RTE: " << m.at("mean_rte").get<double>()
     << " m  mean RRE: " << m.at("mean_rre").get<double>() << " deg  registration failures: "
     << m.at("registration_failures").get<std::size_t>() << '\n';
  if (m.contains("eq3")) {
    for (const auto& [radius, e] : m.at("eq3").items()) {
      os << "top-1 distance @" << radius << " m: " << e.at("mean_top1_before").get<double>() << " -> "
         << e.at("mean_top1_after").get<double>() << " m, violations " << e.at("violations").get<std::size_t>()
         << '\n';
    }
  }
  os << "mean re-rank time: " << std::setprecision(3) << file.summary->at("timing").at("mean_rerank_ms").get<double>()
     << " ms\n";
  return os.str();
}

}  // namespace sgv

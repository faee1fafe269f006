#include "icl/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "icl/dataio.hpp"

namespace icl {

using nlohmann::json;

std::string to_string(Pipeline p) {
  switch (p) {
    case Pipeline::icl:
      return "icl";
    case Pipeline::listwise_deletion:
      return "listwise_deletion";
    case Pipeline::impute_then_discover:
      break;
  }
  return "impute_then_discover";
}

Pipeline parse_pipeline(const std::string& s) {
  if (s == "icl") return Pipeline::icl;
  if (s == "listwise_deletion") return Pipeline::listwise_deletion;
  if (s == "impute_then_discover") return Pipeline::impute_then_discover;
  throw ConfigError("unknown pipeline '" + s + "' (icl, listwise_deletion, impute_then_discover)");
}

void ExperimentConfig::validate() const {
  sem.validate();
  validate_missing_rate(missing.rate);
  for (double m : missing_rates) validate_missing_rate(m);
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ConfigError("seeds must be distinct");
  }
  if (pipelines.empty()) throw ConfigError("pipelines must not be empty");
  imputer.validate();
  structure.validate();
  direction.validate();
}

// ---------------------------------------------------------------- config I/O

namespace {

class Reader {
 public:
  Reader(const json& j, std::string context) : j_(j), ctx_(std::move(context)) {
    if (!j_.is_object()) throw ConfigError(ctx_ + ": expected a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        if (!v.is_number_unsigned()) throw ConfigError(path(key) + ": expected a non-negative integer");
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError(path(key) + ": expected a number");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(path(key) + ": expected true or false");
      }
      out = v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path(key) + ": " + e.what());
    }
  }

  template <typename Parse>
  void get_enum(const char* key, Parse parse) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    if (!j_.at(key).is_string()) throw ConfigError(path(key) + ": expected a string");
    parse(j_.at(key).get<std::string>());
  }

  const json* sub(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.contains(k)) throw ConfigError("unknown config key '" + path(k.c_str()) + "'");
  }

  std::string path(const char* key) const { return ctx_.empty() ? key : ctx_ + "." + key; }

 private:
  const json& j_;
  std::string ctx_;
  std::set<std::string> seen_;
};

json sem_json(const SemSpec& s) {
  return {{"d", s.d},
          {"s", s.s},
          {"n", s.n},
          {"mechanism", to_string(s.mechanism)},
          {"noise", to_string(s.noise)},
          {"weight_low", s.weight_low},
          {"weight_high", s.weight_high}};
}

void read_sem(const json& j, SemSpec& s) {
  Reader r(j, "sem");
  r.get("d", s.d);
  r.get("s", s.s);
  r.get("n", s.n);
  r.get_enum("mechanism", [&](const std::string& v) { s.mechanism = parse_mechanism(v); });
  r.get_enum("noise", [&](const std::string& v) { s.noise = parse_noise(v); });
  r.get("weight_low", s.weight_low);
  r.get("weight_high", s.weight_high);
  r.finish();
}

json missing_json(const MissingSpec& m) {
  return {{"mechanism", to_string(m.mechanism)},
          {"rate", m.rate},
          {"max_pairs", m.max_pairs},
          {"source", to_string(m.source)}};
}

void read_missing(const json& j, MissingSpec& m) {
  Reader r(j, "missing");
  r.get_enum("mechanism", [&](const std::string& v) { m.mechanism = parse_missing_mechanism(v); });
  r.get("rate", m.rate);
  r.get("max_pairs", m.max_pairs);
  r.get_enum("source", [&](const std::string& v) { m.source = parse_mar_source(v); });
  r.finish();
}

json imputer_json(const GanConfig& g) {
  return {{"hidden", g.hidden},
          {"g_learning_rate", g.g_learning_rate},
          {"d_learning_rate", g.d_learning_rate},
          {"batch_size", g.batch_size},
          {"d_steps", g.d_steps}};
}

void read_imputer(const json& j, GanConfig& g) {
  Reader r(j, "imputer");
  r.get("hidden", g.hidden);
  r.get("g_learning_rate", g.g_learning_rate);
  r.get("d_learning_rate", g.d_learning_rate);
  r.get("batch_size", g.batch_size);
  r.get("d_steps", g.d_steps);
  r.finish();
}

json structure_json(const StructureConfig& s) {
  return {{"hidden", s.hidden},
          {"learning_rate", s.learning_rate},
          {"scale_lr_with_penalty", s.scale_lr_with_penalty},
          {"min_learning_rate", s.min_learning_rate},
          {"max_learning_rate", s.max_learning_rate},
          {"batch_size", s.batch_size},
          {"inner_steps", s.inner_steps},
          {"max_outer", s.max_outer},
          {"lambda0", s.lambda0},
          {"c0", s.c0},
          {"eta", s.eta},
          {"shrink", s.shrink},
          {"c_max", s.c_max},
          {"h_tol", s.h_tol},
          {"loss_rtol", s.loss_rtol},
          {"alpha", s.alpha},
          {"omega", s.omega},
          {"feedback_weight", s.feedback_weight},
          {"divergence_limit", s.divergence_limit},
          {"l1_penalty", s.l1_penalty},
          {"learn_encoder", s.learn_encoder},
          {"sample_latent", s.sample_latent},
          {"standardize", s.standardize}};
}

void read_structure(const json& j, StructureConfig& s) {
  Reader r(j, "structure");
  r.get("hidden", s.hidden);
  r.get("learning_rate", s.learning_rate);
  r.get("scale_lr_with_penalty", s.scale_lr_with_penalty);
  r.get("min_learning_rate", s.min_learning_rate);
  r.get("max_learning_rate", s.max_learning_rate);
  r.get("batch_size", s.batch_size);
  r.get("inner_steps", s.inner_steps);
  r.get("max_outer", s.max_outer);
  r.get("lambda0", s.lambda0);
  r.get("c0", s.c0);
  r.get("eta", s.eta);
  r.get("shrink", s.shrink);
  r.get("c_max", s.c_max);
  r.get("h_tol", s.h_tol);
  r.get("loss_rtol", s.loss_rtol);
  r.get("alpha", s.alpha);
  r.get("omega", s.omega);
  r.get("feedback_weight", s.feedback_weight);
  r.get("divergence_limit", s.divergence_limit);
  r.get("l1_penalty", s.l1_penalty);
  r.get("learn_encoder", s.learn_encoder);
  r.get("sample_latent", s.sample_latent);
  r.get("standardize", s.standardize);
  r.finish();
}

json direction_json(const DirectionConfig& c) {
  return {{"latent_dim", c.latent_dim},   {"hidden", c.hidden},
          {"steps", c.steps},             {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate}, {"eval_samples", c.eval_samples},
          {"delta_factor", c.delta_factor},   {"min_samples", c.min_samples}};
}

void read_direction(const json& j, DirectionConfig& c) {
  Reader r(j, "direction");
  r.get("latent_dim", c.latent_dim);
  r.get("hidden", c.hidden);
  r.get("steps", c.steps);
  r.get("batch_size", c.batch_size);
  r.get("learning_rate", c.learning_rate);
  r.get("eval_samples", c.eval_samples);
  r.get("delta_factor", c.delta_factor);
  r.get("min_samples", c.min_samples);
  r.finish();
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  json pipelines = json::array();
  for (Pipeline p : c.pipelines) pipelines.push_back(to_string(p));
  return {{"sem", sem_json(c.sem)},
          {"missing", missing_json(c.missing)},
          {"pipeline", to_string(c.pipeline)},
          {"seeds", c.seeds},
          {"imputer", imputer_json(c.imputer)},
          {"structure", structure_json(c.structure)},
          {"direction", direction_json(c.direction)},
          {"output_dir", c.output_dir},
          {"missing_rates", c.missing_rates},
          {"pipelines", pipelines}};
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  Reader r(j, "");
  if (const json* v = r.sub("sem")) read_sem(*v, c.sem);
  if (const json* v = r.sub("missing")) read_missing(*v, c.missing);
  r.get_enum("pipeline", [&](const std::string& v) { c.pipeline = parse_pipeline(v); });
  r.get("seeds", c.seeds);
  if (const json* v = r.sub("imputer")) read_imputer(*v, c.imputer);
  if (const json* v = r.sub("structure")) read_structure(*v, c.structure);
  if (const json* v = r.sub("direction")) read_direction(*v, c.direction);
  r.get("output_dir", c.output_dir);
  r.get("missing_rates", c.missing_rates);
  if (const json* v = r.sub("pipelines")) {
    if (!v->is_array()) throw ConfigError("pipelines: expected an array of names");
    c.pipelines.clear();
    for (const auto& p : *v) {
      if (!p.is_string()) throw ConfigError("pipelines: expected an array of names");
      c.pipelines.push_back(parse_pipeline(p.get<std::string>()));
    }
  }
  r.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------- scenarios

Scenario make_scenario(const ExperimentConfig& config, std::uint64_t seed) {
  config.sem.validate();
  validate_missing_rate(config.missing.rate);
  const RngStream root(seed);
  RngStream data_rng = root.split(1);
  RngStream mask_rng = root.split(2);

  Scenario s;
  s.seed = seed;
  s.truth = assign_weights(sample_er_dag(config.sem.d, config.sem.s, data_rng), data_rng, config.sem.weight_low,
                           config.sem.weight_high);
  s.data = sample_sem(s.truth, config.sem, data_rng);
  s.missing = config.missing;

  Mask mask(s.data.rows(), s.data.cols());
  if (config.missing.rate > 0.0) {
    if (config.missing.mechanism == MissingMechanism::mcar) {
      mask = mcar_mask(s.data.rows(), s.data.cols(), config.missing.rate, mask_rng);
    } else {
      MarResult mar = mar_mask(s.truth, s.data, config.missing.rate, mask_rng, config.missing);
      mask = std::move(mar.mask);
      s.missing = std::move(mar.spec);
    }
  }
  s.observed = apply_mask(s.data, mask);
  s.achieved_rate = mask.missing_fraction();
  s.data_checksum = checksum(s.data);
  s.mask_checksum = checksum(mask);
  s.train_seed = root.split(3).seed();
  s.orient_seed = root.split(4).seed();
  return s;
}

// ---------------------------------------------------------------- pipelines

MaskedDataset listwise_delete(const MaskedDataset& data) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < data.rows(); ++i)
    if (data.mask.row_complete(i)) keep.push_back(i);
  if (keep.size() < 2) {
    throw InfeasibleError("listwise deletion leaves " + std::to_string(keep.size()) +
                          " complete row(s), need at least 2");
  }
  return {data.values.select_rows(keep), data.mask.select_rows(keep)};
}

PipelineOutput run_pipeline_stages(const ExperimentConfig& config, const MaskedDataset& observed, Pipeline pipeline,
                                   std::uint64_t train_seed, std::uint64_t orient_seed) {
  JointTrainConfig jt{config.imputer, config.structure, TrainingSchedule::interleaved};
  const MaskedDataset* input = &observed;
  MaskedDataset reduced;
  if (pipeline == Pipeline::listwise_deletion) {
    reduced = listwise_delete(observed);
    input = &reduced;
  } else if (pipeline == Pipeline::impute_then_discover) {
    jt.schedule = TrainingSchedule::impute_then_discover;
  }
  PipelineOutput out;
  out.rows_used = input->rows();
  out.trained = joint_train(*input, jt, train_seed);
  out.oriented = orient_skeleton(out.trained.skeleton, out.trained.xhat, config.direction, orient_seed);
  out.dag = finalize_dag(out.oriented.graph, out.oriented.scores);
  return out;
}

bool RunResult::operator==(const RunResult& o) const {
  return seed == o.seed && pipeline == o.pipeline && missing_rate == o.missing_rate && success == o.success &&
         error == o.error && error_kind == o.error_kind && shd == o.shd && skeleton_shd == o.skeleton_shd &&
         achieved_rate == o.achieved_rate && converged == o.converged && final_h == o.final_h &&
         rows_used == o.rows_used && undetermined == o.undetermined && data_checksum == o.data_checksum &&
         mask_checksum == o.mask_checksum;
}

void write_history(std::ostream& os, const std::vector<HistoryEntry>& history) {
  json arr = json::array();
  for (const auto& e : history) {
    arr.push_back({{"stage", e.stage},
                   {"outer", e.outer},
                   {"elbo", e.elbo},
                   {"h", e.h},
                   {"lambda", e.lambda},
                   {"c", e.c},
                   {"d_loss", e.d_loss},
                   {"g_loss", e.g_loss},
                   {"learning_rate", e.learning_rate}});
  }
  os << arr.dump(2) << '\n';
}

void write_artifacts(const std::filesystem::path& dir, const PipelineOutput& out) {
  {
    auto f = open_output(dir / "skeleton.tsv");
    write_edge_list(f, out.trained.skeleton);
  }
  {
    auto f = open_output(dir / "B.csv");
    write_csv(f, out.trained.b.weights());
  }
  {
    auto f = open_output(dir / "xhat.csv");
    write_csv(f, out.trained.xhat);
  }
  {
    auto f = open_output(dir / "history.json");
    write_history(f, out.trained.history);
  }
  {
    auto f = open_output(dir / "scores.csv");
    write_pair_scores(f, out.oriented.pairs);
  }
  {
    auto f = open_output(dir / "dag.tsv");
    write_edge_list(f, out.dag, &out.oriented.scores);
  }
  {
    auto f = open_output(dir / "dag.dot");
    write_dot(f, out.dag, &out.oriented.scores);
  }
}

namespace {

json run_json(const RunResult& r) {
  auto opt = [](const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); };
  return {{"seed", r.seed},
          {"pipeline", to_string(r.pipeline)},
          {"missing_rate", r.missing_rate},
          {"success", r.success},
          {"error", r.error},
          {"error_kind", r.error_kind},
          {"shd", opt(r.shd)},
          {"skeleton_shd", opt(r.skeleton_shd)},
          {"achieved_rate", r.achieved_rate},
          {"converged", r.converged},
          {"final_h", r.final_h},
          {"rows_used", r.rows_used},
          {"undetermined", r.undetermined},
          {"data_checksum", r.data_checksum},
          {"mask_checksum", r.mask_checksum}};
}

RunResult run_from_json(const json& j) {
  RunResult r;
  try {
    r.seed = j.at("seed").get<std::uint64_t>();
    r.pipeline = parse_pipeline(j.at("pipeline").get<std::string>());
    r.missing_rate = j.at("missing_rate").get<double>();
    r.success = j.at("success").get<bool>();
    r.error = j.at("error").get<std::string>();
    r.error_kind = j.at("error_kind").get<std::string>();
    if (!j.at("shd").is_null()) r.shd = j.at("shd").get<std::size_t>();
    if (!j.at("skeleton_shd").is_null()) r.skeleton_shd = j.at("skeleton_shd").get<std::size_t>();
    r.achieved_rate = j.at("achieved_rate").get<double>();
    r.converged = j.at("converged").get<bool>();
    r.final_h = j.at("final_h").get<double>();
    r.rows_used = j.at("rows_used").get<std::size_t>();
    r.undetermined = j.at("undetermined").get<std::size_t>();
    r.data_checksum = j.at("data_checksum").get<std::uint64_t>();
    r.mask_checksum = j.at("mask_checksum").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("report run entry: ") + e.what());
  }
  return r;
}

std::string rate_label(double m) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", m);
  return buf;
}

}  // namespace

RunResult run_pipeline(const ExperimentConfig& config, const Scenario& scenario, Pipeline pipeline,
                       const std::optional<std::filesystem::path>& artifacts) {
  RunResult r;
  r.seed = scenario.seed;
  r.pipeline = pipeline;
  r.missing_rate = config.missing.rate;
  r.achieved_rate = scenario.achieved_rate;
  r.data_checksum = scenario.data_checksum;
  r.mask_checksum = scenario.mask_checksum;
  const auto start = std::chrono::steady_clock::now();
  try {
    const PipelineOutput out =
        run_pipeline_stages(config, scenario.observed, pipeline, scenario.train_seed, scenario.orient_seed);
    r.success = true;
    r.shd = shd(out.dag, scenario.truth.structure());
    r.skeleton_shd = skeleton_shd(out.trained.skeleton, skeleton_of(scenario.truth.structure()));
    r.converged = out.trained.converged;
    r.final_h = out.trained.final_h;
    r.rows_used = out.rows_used;
    for (const auto& p : out.oriented.pairs) r.undetermined += p.flagged ? 1 : 0;
    if (artifacts) write_artifacts(*artifacts, out);
  } catch (const InfeasibleError& e) {
    r.error = e.what();
    r.error_kind = "infeasible";
  } catch (const TrainingError& e) {
    r.error = e.what();
    r.error_kind = "training";
  } catch (const NumericError& e) {
    r.error = e.what();
    r.error_kind = "training";
  }
  r.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

namespace {

RunResult run_single(const ExperimentConfig& config, std::uint64_t seed, Pipeline pipeline) {
  const Scenario s = make_scenario(config, seed);
  std::optional<std::filesystem::path> dir;
  if (!config.output_dir.empty()) {
    dir = std::filesystem::path(config.output_dir) / to_string(pipeline) / ("m" + rate_label(config.missing.rate)) /
          ("seed" + std::to_string(seed));
  }
  return run_pipeline(config, s, pipeline, dir);
}

}  // namespace

RunResult run_icl(const ExperimentConfig& config, std::uint64_t seed) {
  return run_single(config, seed, Pipeline::icl);
}

RunResult run_baseline_listwise(const ExperimentConfig& config, std::uint64_t seed) {
  return run_single(config, seed, Pipeline::listwise_deletion);
}

RunResult run_baseline_impute_then_discover(const ExperimentConfig& config, std::uint64_t seed) {
  return run_single(config, seed, Pipeline::impute_then_discover);
}

// ---------------------------------------------------------------- reports

ShdSummary summarize(const std::vector<RunResult>& results) {
  ShdSummary s;
  if (!results.empty()) {
    s.pipeline = results.front().pipeline;
    s.missing_rate = results.front().missing_rate;
  }
  std::vector<double> values;
  for (const auto& r : results) {
    if (r.success && r.shd) {
      values.push_back(static_cast<double>(*r.shd));
    } else {
      ++s.failures;
    }
  }
  if (values.empty()) throw DomainError("aggregate: no successful runs to summarize");
  s.successes = values.size();
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  s.mean = mean;
  s.std = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
  return s;
}

Report aggregate(const std::vector<RunResult>& results, json metadata) {
  Report report;
  report.runs = results;
  report.metadata = std::move(metadata);
  std::vector<std::pair<Pipeline, double>> keys;
  std::map<std::pair<Pipeline, double>, std::vector<RunResult>> groups;
  for (const auto& r : results) {
    const auto key = std::make_pair(r.pipeline, r.missing_rate);
    if (!groups.contains(key)) keys.push_back(key);
    groups[key].push_back(r);
  }
  bool any = false;
  for (const auto& key : keys) {
    const auto& group = groups[key];
    try {
      report.summaries.push_back(summarize(group));
      any = true;
    } catch (const DomainError&) {
      ShdSummary s;
      s.pipeline = key.first;
      s.missing_rate = key.second;
      s.failures = group.size();
      report.summaries.push_back(s);
    }
  }
  if (!any) throw DomainError("aggregate: every run failed");
  return report;
}

ReportFormat parse_report_format(const std::string& s) {
  if (s == "json") return ReportFormat::json;
  if (s == "markdown" || s == "md") return ReportFormat::markdown;
  if (s == "csv") return ReportFormat::csv;
  throw ConfigError("unknown report format '" + s + "' (json, markdown, csv)");
}

std::string extension(ReportFormat f) {
  switch (f) {
    case ReportFormat::json:
      return ".json";
    case ReportFormat::markdown:
      return ".md";
    case ReportFormat::csv:
      break;
  }
  return ".csv";
}

namespace {

std::string render_markdown(const Report& report) {
  std::vector<Pipeline> pipelines;
  std::vector<double> rates;
  for (const auto& s : report.summaries) {
    if (std::find(pipelines.begin(), pipelines.end(), s.pipeline) == pipelines.end()) pipelines.push_back(s.pipeline);
    if (std::find(rates.begin(), rates.end(), s.missing_rate) == rates.end()) rates.push_back(s.missing_rate);
  }
  std::sort(rates.begin(), rates.end());
  std::ostringstream os;
  os << "| pipeline |";
  for (double m : rates) os << " m = " << rate_label(m) << " |";
  os << "\n|---|";
  for (std::size_t k = 0; k < rates.size(); ++k) os << "---|";
  os << '\n';
  char buf[96];
  for (Pipeline p : pipelines) {
    os << "| " << to_string(p) << " |";
    for (double m : rates) {
      const auto it = std::find_if(report.summaries.begin(), report.summaries.end(),
                                   [&](const ShdSummary& s) { return s.pipeline == p && s.missing_rate == m; });
      if (it == report.summaries.end()) {
        os << " |";
      } else if (!it->mean) {
        std::snprintf(buf, sizeof buf, " failed (0/%zu) |", it->failures);
        os << buf;
      } else {
        std::snprintf(buf, sizeof buf, " %.2f ± %.2f (%zu/%zu) |", *it->mean, *it->std, it->successes,
                      it->successes + it->failures);
        os << buf;
      }
    }
    os << '\n';
  }
  os << "\nSHD, mean ± sample std over successful runs (successes/runs).\n";
  return os.str();
}

std::string render_csv(const Report& report) {
  std::ostringstream os;
  os << "pipeline,missing_rate,seed,success,shd,skeleton_shd,achieved_rate,converged,final_h,rows_used,undetermined,"
        "error_kind\n";
  for (const auto& r : report.runs) {
    os << to_string(r.pipeline) << ',' << format_double(r.missing_rate) << ',' << r.seed << ','
       << (r.success ? 1 : 0) << ',';
    if (r.shd) os << *r.shd;
    os << ',';
    if (r.skeleton_shd) os << *r.skeleton_shd;
    os << ',' << format_double(r.achieved_rate) << ',' << (r.converged ? 1 : 0) << ',' << format_double(r.final_h)
       << ',' << r.rows_used << ',' << r.undetermined << ',' << r.error_kind << '\n';
  }
  return os.str();
}

json report_json(const Report& report) {
  json summaries = json::array();
  for (const auto& s : report.summaries) {
    summaries.push_back({{"pipeline", to_string(s.pipeline)},
                         {"missing_rate", s.missing_rate},
                         {"successes", s.successes},
                         {"failures", s.failures},
                         {"mean", s.mean ? json(*s.mean) : json(nullptr)},
                         {"std", s.std ? json(*s.std) : json(nullptr)}});
  }
  json runs = json::array();
  for (const auto& r : report.runs) runs.push_back(run_json(r));
  return {{"summaries", summaries}, {"runs", runs}, {"metadata", report.metadata}};
}

}  // namespace

std::string render_report(const Report& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::json:
      return report_json(report).dump(2) + "\n";
    case ReportFormat::markdown:
      return render_markdown(report);
    case ReportFormat::csv:
      break;
  }
  return render_csv(report);
}

void emit_report(const Report& report, ReportFormat format, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << render_report(report, format);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Report report_from_json(const json& j) {
  Report report;
  try {
    for (const auto& s : j.at("summaries")) {
      ShdSummary sum;
      sum.pipeline = parse_pipeline(s.at("pipeline").get<std::string>());
      sum.missing_rate = s.at("missing_rate").get<double>();
      sum.successes = s.at("successes").get<std::size_t>();
      sum.failures = s.at("failures").get<std::size_t>();
      if (!s.at("mean").is_null()) sum.mean = s.at("mean").get<double>();
      if (!s.at("std").is_null()) sum.std = s.at("std").get<double>();
      report.summaries.push_back(sum);
    }
    for (const auto& r : j.at("runs")) report.runs.push_back(run_from_json(r));
    report.metadata = j.at("metadata");
  } catch (const json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  } catch (const ConfigError& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
  return report;
}

Report load_report(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  try {
    return report_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

Report run_bench(const ExperimentConfig& config, std::ostream* progress) {
  config.validate();
  std::vector<RunResult> results;
  for (double m : config.missing_rates) {
    ExperimentConfig cfg = config;
    cfg.missing.rate = m;
    for (std::uint64_t seed : config.seeds) {
      const Scenario s = make_scenario(cfg, seed);
      for (Pipeline p : config.pipelines) {
        std::optional<std::filesystem::path> dir;
        if (!config.output_dir.empty()) {
          dir = std::filesystem::path(config.output_dir) / "runs" / to_string(p) / ("m" + rate_label(m)) /
                ("seed" + std::to_string(seed));
        }
        RunResult r = run_pipeline(cfg, s, p, dir);
        if (progress) {
          *progress << to_string(p) << " m=" << rate_label(m) << " seed=" << seed << ": "
                    << (r.success ? "shd " + std::to_string(*r.shd) : "failed (" + r.error_kind + ")") << " in "
                    << r.runtime_seconds << "s\n";
        }
        results.push_back(std::move(r));
      }
    }
  }
  // The output location is not part of the experiment.
  ExperimentConfig recorded = config;
  recorded.output_dir.clear();
  return aggregate(results, {{"config", to_json(recorded)}});
}

}  // namespace icl

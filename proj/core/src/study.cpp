#include "eelink/study.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "eelink/config.hpp"
#include "eelink/csv.hpp"
#include "eelink/errors.hpp"
#include "eelink/parallel.hpp"
#include "eelink/sandwich.hpp"

namespace eelink {

using nlohmann::json;

std::string to_string(Method m) {
  switch (m) {
    case Method::linked: return "linked";
    case Method::augmented: return "augmented";
    case Method::plugin: return "plugin";
    case Method::known: return "known";
  }
  return "?";
}

void validate_config(const StudyConfig& cfg) {
  if (!cfg.design.is_builtin()) {
    if (cfg.design.data_csv.empty()) {
      throw ValidationError("design: either a built-in design or data_csv is required");
    }
    if (!cfg.design.theta0.has_value()) {
      throw ValidationError("theta0: required for csv designs (coverage target)");
    }
  }
  if (cfg.method == Method::plugin && !cfg.plugin.has_value()) {
    throw ValidationError("plugin: required when method is 'plugin'");
  }
  if (cfg.method == Method::known && !cfg.design.is_builtin() && !cfg.design.h0.has_value()) {
    throw ValidationError("h0: required for method 'known' on csv designs");
  }
  if (cfg.plugin && cfg.plugin->kind == PluginKind::true_h && !cfg.design.is_builtin() &&
      !cfg.design.h0.has_value()) {
    throw ValidationError("h0: required for plugin kind 'true_h' on csv designs");
  }
  if (cfg.n < 2) throw ValidationError("n: must be >= 2");
  if (cfg.replicates < 1) throw ValidationError("replicates: must be >= 1");
  if (cfg.B < 2) throw ValidationError("B: must be >= 2");
  auto [qlo, qhi] = cfg.quantiles;
  if (!(qlo > 0.0 && qhi < 1.0 && qlo < qhi)) {
    throw ValidationError("quantiles: must increase strictly inside (0,1)");
  }
  if (cfg.max_retries < 0) throw ValidationError("max_retries: must be >= 0");
  if (cfg.workers < 0) throw ValidationError("workers: must be >= 0 (0 = auto)");
  if (!(cfg.epsilon_overlap > 0.0 && cfg.epsilon_overlap < 0.5)) {
    throw ValidationError("epsilon_overlap: must lie in (0, 0.5)");
  }
}

namespace {

double quantile_sorted(const std::vector<double>& sorted, double gamma) {
  const int b = static_cast<int>(sorted.size());
  double pos = 1.0 + (b - 1) * gamma;  // 1-based interpolation position
  int lo = static_cast<int>(std::floor(pos));
  if (lo < 1) return sorted.front();
  if (lo >= b) return sorted.back();
  double frac = pos - lo;
  return sorted[lo - 1] + frac * (sorted[lo] - sorted[lo - 1]);
}

}  // namespace

PosteriorSummary summarize_posterior(const Mat& draws, const Vec& truth,
                                     std::pair<double, double> quantiles) {
  const int b = static_cast<int>(draws.rows());
  const int p = static_cast<int>(draws.cols());
  if (b < 2) throw ValidationError("summarize_posterior requires at least 2 draws");
  if (static_cast<int>(truth.size()) != p) {
    throw ValidationError("truth dimension does not match draw dimension");
  }

  PosteriorSummary s;
  s.mean.resize(p);
  s.variance.resize(p);
  s.ci_lo.resize(p);
  s.ci_hi.resize(p);
  s.covered.resize(p);
  for (int k = 0; k < p; ++k) {
    double mean = draws.col(k).mean();
    s.mean[k] = mean;
    s.variance[k] = (draws.col(k).array() - mean).square().sum() / (b - 1);
    std::vector<double> sorted(draws.col(k).data(), draws.col(k).data() + b);
    std::sort(sorted.begin(), sorted.end());
    s.ci_lo[k] = quantile_sorted(sorted, quantiles.first);
    s.ci_hi[k] = quantile_sorted(sorted, quantiles.second);
    s.covered[k] =
        std::isfinite(truth[k]) && truth[k] >= s.ci_lo[k] && truth[k] <= s.ci_hi[k];
  }
  return s;
}

namespace {

EstimandSpec make_spec_for(Estimand e, int q, bool intercept) {
  switch (e) {
    case Estimand::gest: return make_gest_spec(q, intercept);
    case Estimand::ipw: return make_ipw_spec(q, intercept);
    case Estimand::att: return make_att_spec(q, intercept);
    case Estimand::psreg: return make_psreg_spec(q, intercept);
  }
  throw ValidationError("unknown estimand");
}

struct ReplicateContext {
  const StudyConfig& cfg;
  const Dataset* external_data = nullptr;  // set for csv designs
  Mat* kept_draws = nullptr;               // optional sink for persisted draws
};

ReplicateSummary run_replicate_impl(const ReplicateContext& ctx, std::uint32_t replicate_id) {
  const StudyConfig& cfg = ctx.cfg;

  // Data + truth for this replicate.
  Dataset generated;
  TruthBundle truth;
  const Dataset* data = nullptr;
  if (cfg.design.is_builtin()) {
    StreamKey key{cfg.seed, replicate_id, 0, StreamPurpose::data, 0};
    RandomStream stream = derive_stream(key);
    auto [d, t] = generate_design(*cfg.design.builtin, cfg.n, stream);
    generated = std::move(d);
    truth = std::move(t);
    data = &generated;
  } else {
    data = ctx.external_data;
    truth.theta0 = *cfg.design.theta0;
    if (cfg.design.h0) truth.h0 = *cfg.design.h0;
  }
  ensure_valid(*data);

  // Effective estimating system: true-nuisance methods evaluate the
  // propensity at h0 (no intercept column); fitted methods follow the
  // configured intercept flag.
  bool intercept = cfg.intercept;
  Vec h_fixed;
  PluginMethod plugin_eff;
  if (cfg.method == Method::known) {
    if (truth.h0.size() == 0) throw ValidationError("method 'known' needs a true h0");
    intercept = false;
    h_fixed = truth.h0;
  } else if (cfg.method == Method::plugin) {
    plugin_eff = *cfg.plugin;
    if (plugin_eff.kind == PluginKind::true_h) {
      if (plugin_eff.h0.size() == 0) {
        if (truth.h0.size() == 0) throw ValidationError("plugin 'true_h' needs h0");
        plugin_eff.h0 = truth.h0;
      }
      plugin_eff.intercept = false;
    }
    intercept = plugin_eff.intercept;
  }
  EstimandSpec spec = make_spec_for(cfg.estimand, data->q, intercept);

  EngineConfig ecfg;
  ecfg.B = cfg.B;
  ecfg.seed = cfg.seed;
  ecfg.max_retries = cfg.max_retries;
  ecfg.epsilon_overlap = cfg.epsilon_overlap;
  ecfg.replicate_id = replicate_id;
  ecfg.workers = 1;  // parallelism lives at the replicate level

  // The plug-in nuisance estimate is deterministic given the data, so
  // compute it once and share it between the frequentist pass and the
  // posterior pass.
  if (cfg.method == Method::plugin && plugin_eff.kind != PluginKind::true_h) {
    Vec h_hat = plugin_nuisance_estimate(*data, plugin_eff, ecfg);
    plugin_eff.kind = PluginKind::true_h;
    plugin_eff.h0 = std::move(h_hat);
  }

  auto run_engine_pass = [&](const EngineConfig& pass_cfg,
                             const EngineHooks& hooks) -> PosteriorDraws {
    switch (cfg.method) {
      case Method::known:
        return bb_posterior_known_h(spec, *data, h_fixed, pass_cfg, hooks);
      case Method::plugin:
        return bb_posterior_plugin(spec, *data, plugin_eff, pass_cfg, hooks);
      case Method::linked:
        return bb_posterior_linked(spec, *data, pass_cfg, hooks);
      case Method::augmented:
        return bb_posterior_augmented(spec, *data, pass_cfg, hooks);
    }
    throw ValidationError("unknown method");
  };

  // Frequentist estimate through the engine's equal-weight path.
  EngineConfig freq_cfg = ecfg;
  freq_cfg.B = 1;
  EngineHooks equal_hooks;
  equal_hooks.force_equal_weights = true;
  PosteriorDraws freq = run_engine_pass(freq_cfg, equal_hooks);
  Vec freq_theta = freq.theta.row(0).transpose();
  Vec freq_h;
  if (freq.h) {
    freq_h = freq.h->row(0).transpose();
  } else if (cfg.method == Method::known) {
    freq_h = h_fixed;
  } else {
    freq_h = plugin_eff.h0;
  }

  PosteriorDraws draws = run_engine_pass(ecfg, {});

  SandwichEstimate sand = sandwich_linked(spec, *data, freq_theta, freq_h);

  Vec truth_vec(spec.p);
  truth_vec[0] = truth.theta0;
  for (int k = 1; k < spec.p; ++k) truth_vec[k] = std::numeric_limits<double>::quiet_NaN();

  PosteriorSummary summary = summarize_posterior(draws.theta, truth_vec, cfg.quantiles);

  if (ctx.kept_draws) {
    if (draws.h) {
      ctx.kept_draws->resize(cfg.B, spec.p + spec.q_nuis);
      ctx.kept_draws->leftCols(spec.p) = draws.theta;
      ctx.kept_draws->rightCols(spec.q_nuis) = *draws.h;
    } else {
      *ctx.kept_draws = draws.theta;
    }
  }

  ReplicateSummary rep;
  rep.replicate_id = static_cast<int>(replicate_id);
  rep.freq_estimate = freq_theta;
  rep.post_mean = summary.mean;
  rep.post_var = summary.variance;
  rep.ci_lo = summary.ci_lo;
  rep.ci_hi = summary.ci_hi;
  rep.covered = summary.covered;
  rep.sandwich_V = sand.V;
  rep.retries = draws.retries_total;
  return rep;
}

StudyTable aggregate(const StudyConfig& cfg, const std::vector<ReplicateSummary>& reps, int n) {
  if (reps.empty()) throw StudyError("no successful replicates to aggregate");
  const int p = static_cast<int>(reps.front().post_mean.size());
  const int r = static_cast<int>(reps.size());

  StudyTable t;
  t.n = n;
  t.replicates_used = r;
  t.avg_post_mean = Vec::Zero(p);
  t.empirical_freq_mean = Vec::Zero(p);
  t.avg_post_var_times_n = Vec::Zero(p);
  t.avg_sandwich = Vec::Zero(p);
  t.avg_ci_lo = Vec::Zero(p);
  t.avg_ci_hi = Vec::Zero(p);
  t.coverage_pct = Vec::Zero(p);

  std::vector<int> covered_counts(p, 0);
  std::vector<int> truth_known(p, 0);
  for (const auto& rep : reps) {
    t.avg_post_mean += rep.post_mean;
    t.empirical_freq_mean += rep.freq_estimate;
    t.avg_post_var_times_n += rep.post_var * static_cast<double>(n);
    for (int k = 0; k < p; ++k) t.avg_sandwich[k] += rep.sandwich_V(k, k);
    t.avg_ci_lo += rep.ci_lo;
    t.avg_ci_hi += rep.ci_hi;
    for (int k = 0; k < p; ++k) covered_counts[k] += rep.covered[k] ? 1 : 0;
  }
  t.avg_post_mean /= r;
  t.empirical_freq_mean /= r;
  t.avg_post_var_times_n /= r;
  t.avg_sandwich /= r;
  t.avg_ci_lo /= r;
  t.avg_ci_hi /= r;

  // Coverage applies only to coordinates with a known truth (the first
  // for built-in designs; psreg's phi has none).
  for (int k = 0; k < p; ++k) {
    bool has_truth = (k == 0);
    t.coverage_pct[k] = has_truth ? 100.0 * covered_counts[k] / r : -1.0;
  }

  t.empirical_freq_var_times_n = Vec::Zero(p);
  if (r >= 2) {
    for (const auto& rep : reps) {
      Vec dev = rep.freq_estimate - t.empirical_freq_mean;
      t.empirical_freq_var_times_n += dev.cwiseProduct(dev);
    }
    t.empirical_freq_var_times_n *= static_cast<double>(n) / (r - 1);
  }

  t.freq_ci_lo = Vec::Zero(p);
  t.freq_ci_hi = Vec::Zero(p);
  for (int k = 0; k < p; ++k) {
    double half = 1.96 * std::sqrt(std::max(t.avg_sandwich[k], 0.0) / n);
    t.freq_ci_lo[k] = t.empirical_freq_mean[k] - half;
    t.freq_ci_hi[k] = t.empirical_freq_mean[k] + half;
  }
  (void)cfg;
  return t;
}

}  // namespace

ReplicateSummary run_replicate(const StudyConfig& cfg, std::uint32_t replicate_id) {
  validate_config(cfg);
  Dataset external;
  ReplicateContext ctx{cfg};
  if (!cfg.design.is_builtin()) {
    external = read_dataset_csv(cfg.design.data_csv);
    ctx.external_data = &external;
  }
  return run_replicate_impl(ctx, replicate_id);
}

StudyResult run_study(const StudyConfig& cfg) {
  validate_config(cfg);

  Dataset external;
  const Dataset* external_ptr = nullptr;
  if (!cfg.design.is_builtin()) {
    external = read_dataset_csv(cfg.design.data_csv);
    ensure_valid(external);
    external_ptr = &external;
  }
  const int n = cfg.design.is_builtin() ? cfg.n : external.n();

  const int r = cfg.replicates;
  std::vector<std::optional<ReplicateSummary>> outcomes(r);
  std::vector<std::string> errors(r);
  std::vector<Mat> kept(cfg.save_draws ? r : 0);

  int workers = resolve_workers(cfg.workers);
  parallel_for(r, workers, [&](int i) {
    ReplicateContext ctx{cfg, external_ptr, cfg.save_draws ? &kept[i] : nullptr};
    try {
      outcomes[i] = run_replicate_impl(ctx, static_cast<std::uint32_t>(i));
    } catch (const Error& err) {
      errors[i] = err.what();
    }
  });

  StudyResult result;
  result.config = cfg;
  for (int i = 0; i < r; ++i) {
    if (outcomes[i]) {
      result.replicates.push_back(*outcomes[i]);
    } else {
      result.failures.emplace_back(i, errors[i]);
    }
  }
  if (static_cast<double>(result.failures.size()) > 0.01 * r) {
    std::string first = result.failures.empty() ? "" : result.failures.front().second;
    throw StudyError(std::to_string(result.failures.size()) + " of " + std::to_string(r) +
                     " replicates failed (tolerance 1%); first: " + first);
  }
  result.table = aggregate(cfg, result.replicates, n);
  if (cfg.save_draws) result.kept_draws = std::move(kept);
  return result;
}

namespace {

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string fmt_vec(const Vec& v) {
  if (v.size() == 1) return fmt6(v[0]);
  std::string out = "(";
  for (int k = 0; k < v.size(); ++k) {
    if (k) out += ", ";
    out += fmt6(v[k]);
  }
  return out + ")";
}

std::string fmt_interval(const Vec& lo, const Vec& hi) {
  std::string out;
  for (int k = 0; k < lo.size(); ++k) {
    if (k) out += "; ";
    out += "(" + fmt6(lo[k]) + ", " + fmt6(hi[k]) + ")";
  }
  return out;
}

std::string fmt_csv_vec(const Vec& v) {
  std::string out;
  for (int k = 0; k < v.size(); ++k) {
    if (k) out += ";";
    out += fmt6(v[k]);
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> table_rows(const StudyTable& t) {
  return {
      {"Average of Posterior Means", fmt_vec(t.avg_post_mean)},
      {"Empirical Frequentist Mean", fmt_vec(t.empirical_freq_mean)},
      {"Average of Posterior Variances (x n)", fmt_vec(t.avg_post_var_times_n)},
      {"Empirical Frequentist Variance (x n)", fmt_vec(t.empirical_freq_var_times_n)},
      {"Average Sandwich Estimate", fmt_vec(t.avg_sandwich)},
      {"Average Bayesian credible interval", fmt_interval(t.avg_ci_lo, t.avg_ci_hi)},
      {"Frequentist confidence interval", fmt_interval(t.freq_ci_lo, t.freq_ci_hi)},
      {"Posterior Coverage", fmt_vec(t.coverage_pct)},
  };
}

json vec_to_json(const Vec& v) {
  json arr = json::array();
  for (int k = 0; k < v.size(); ++k) arr.push_back(v[k]);
  return arr;
}

Vec vec_from_json(const json& arr) {
  Vec v(arr.size());
  for (size_t k = 0; k < arr.size(); ++k) v[k] = arr[k].get<double>();
  return v;
}

json table_to_json_obj(const StudyTable& t) {
  json j;
  j["avg_post_mean"] = vec_to_json(t.avg_post_mean);
  j["empirical_freq_mean"] = vec_to_json(t.empirical_freq_mean);
  j["avg_post_var_times_n"] = vec_to_json(t.avg_post_var_times_n);
  j["empirical_freq_var_times_n"] = vec_to_json(t.empirical_freq_var_times_n);
  j["avg_sandwich"] = vec_to_json(t.avg_sandwich);
  j["avg_ci_lo"] = vec_to_json(t.avg_ci_lo);
  j["avg_ci_hi"] = vec_to_json(t.avg_ci_hi);
  j["freq_ci_lo"] = vec_to_json(t.freq_ci_lo);
  j["freq_ci_hi"] = vec_to_json(t.freq_ci_hi);
  j["coverage_pct"] = vec_to_json(t.coverage_pct);
  j["n"] = t.n;
  j["replicates_used"] = t.replicates_used;
  return j;
}

StudyTable table_from_json_obj(const json& j) {
  StudyTable t;
  t.avg_post_mean = vec_from_json(j.at("avg_post_mean"));
  t.empirical_freq_mean = vec_from_json(j.at("empirical_freq_mean"));
  t.avg_post_var_times_n = vec_from_json(j.at("avg_post_var_times_n"));
  t.empirical_freq_var_times_n = vec_from_json(j.at("empirical_freq_var_times_n"));
  t.avg_sandwich = vec_from_json(j.at("avg_sandwich"));
  t.avg_ci_lo = vec_from_json(j.at("avg_ci_lo"));
  t.avg_ci_hi = vec_from_json(j.at("avg_ci_hi"));
  t.freq_ci_lo = vec_from_json(j.at("freq_ci_lo"));
  t.freq_ci_hi = vec_from_json(j.at("freq_ci_hi"));
  t.coverage_pct = vec_from_json(j.at("coverage_pct"));
  t.n = j.at("n").get<int>();
  t.replicates_used = j.at("replicates_used").get<int>();
  return t;
}

}  // namespace

std::string emit_table(const StudyTable& t, TableFormat format) {
  switch (format) {
    case TableFormat::markdown: {
      std::ostringstream os;
      os << "| Statistic | n=" << t.n << " |\n";
      os << "| --- | --- |\n";
      for (const auto& [label, value] : table_rows(t)) {
        os << "| " << label << " | " << value << " |\n";
      }
      return os.str();
    }
    case TableFormat::csv: {
      std::ostringstream os;
      os << "statistic,value\n";
      os << "avg_post_mean," << fmt_csv_vec(t.avg_post_mean) << "\n";
      os << "empirical_freq_mean," << fmt_csv_vec(t.empirical_freq_mean) << "\n";
      os << "avg_post_var_times_n," << fmt_csv_vec(t.avg_post_var_times_n) << "\n";
      os << "empirical_freq_var_times_n," << fmt_csv_vec(t.empirical_freq_var_times_n) << "\n";
      os << "avg_sandwich," << fmt_csv_vec(t.avg_sandwich) << "\n";
      os << "avg_ci," << fmt_csv_vec(t.avg_ci_lo) << ";" << fmt_csv_vec(t.avg_ci_hi) << "\n";
      os << "freq_ci," << fmt_csv_vec(t.freq_ci_lo) << ";" << fmt_csv_vec(t.freq_ci_hi) << "\n";
      os << "coverage_pct," << fmt_csv_vec(t.coverage_pct) << "\n";
      return os.str();
    }
    case TableFormat::json:
      return table_to_json_obj(t).dump(2);
  }
  throw ValidationError("unknown table format");
}

std::string emit_merged_tables(const std::vector<std::pair<std::string, StudyTable>>& columns) {
  if (columns.empty()) throw ValidationError("no tables to merge");
  std::ostringstream os;
  os << "| Statistic |";
  for (const auto& [label, _] : columns) os << " " << label << " |";
  os << "\n| --- |";
  for (size_t i = 0; i < columns.size(); ++i) os << " --- |";
  os << "\n";
  auto first_rows = table_rows(columns.front().second);
  for (size_t row = 0; row < first_rows.size(); ++row) {
    os << "| " << first_rows[row].first << " |";
    for (const auto& [_, t] : columns) os << " " << table_rows(t)[row].second << " |";
    os << "\n";
  }
  return os.str();
}

std::string study_to_json(const StudyResult& result) {
  json j;
  j["schema"] = "eelink-study-v1";
  j["config"] = json::parse(config_to_json(result.config));
  j["table"] = table_to_json_obj(result.table);
  json reps = json::array();
  for (const auto& rep : result.replicates) {
    json r;
    r["replicate_id"] = rep.replicate_id;
    r["freq_estimate"] = vec_to_json(rep.freq_estimate);
    r["post_mean"] = vec_to_json(rep.post_mean);
    r["post_var"] = vec_to_json(rep.post_var);
    r["ci_lo"] = vec_to_json(rep.ci_lo);
    r["ci_hi"] = vec_to_json(rep.ci_hi);
    json cov = json::array();
    for (bool c : rep.covered) cov.push_back(c);
    r["covered"] = cov;
    json v = json::array();
    for (int a = 0; a < rep.sandwich_V.rows(); ++a) {
      for (int b = 0; b < rep.sandwich_V.cols(); ++b) v.push_back(rep.sandwich_V(a, b));
    }
    r["sandwich_V"] = v;
    r["retries"] = rep.retries;
    reps.push_back(std::move(r));
  }
  j["replicates"] = std::move(reps);
  json fails = json::array();
  for (const auto& [id, msg] : result.failures) {
    fails.push_back(json{{"replicate_id", id}, {"error", msg}});
  }
  j["failures"] = std::move(fails);
  return j.dump(2) + "\n";
}

StudyFileInfo parse_study_json(const std::string& payload) {
  json j;
  try {
    j = json::parse(payload);
  } catch (const json::parse_error& err) {
    throw ParseError(std::string("study.json: ") + err.what());
  }
  if (!j.contains("schema") || j["schema"] != "eelink-study-v1") {
    throw ValidationError("study.json: missing or unknown schema marker");
  }
  StudyFileInfo info;
  try {
    info.table = table_from_json_obj(j.at("table"));
    info.n = info.table.n;
    info.estimand = j.at("config").at("estimand").get<std::string>();
    info.method = j.at("config").at("method").get<std::string>();
  } catch (const json::exception& err) {
    throw ValidationError(std::string("study.json: ") + err.what());
  }
  return info;
}

std::string write_study_outputs(const StudyResult& result, const std::string& outdir) {
  namespace fs = std::filesystem;
  fs::create_directories(outdir);

  std::ofstream js(fs::path(outdir) / "study.json");
  if (!js) throw Error("cannot write study.json in " + outdir);
  js << study_to_json(result);
  js.close();

  std::string md = emit_table(result.table, TableFormat::markdown);
  std::ofstream mdf(fs::path(outdir) / "table.md");
  if (!mdf) throw Error("cannot write table.md in " + outdir);
  mdf << md;
  mdf.close();

  if (result.config.save_draws) {
    const int p = static_cast<int>(result.table.avg_post_mean.size());
    for (size_t i = 0; i < result.kept_draws.size(); ++i) {
      const Mat& draws = result.kept_draws[i];
      if (draws.size() == 0) continue;  // failed replicate
      std::ofstream f(fs::path(outdir) / ("rep" + std::to_string(i) + "_draws.csv"));
      f << "draw_id";
      for (int k = 0; k < p; ++k) f << ",theta_" << (k + 1);
      for (int k = p; k < draws.cols(); ++k) f << ",h_" << (k - p + 1);
      f << "\n";
      f.precision(17);
      for (int r = 0; r < draws.rows(); ++r) {
        f << (r + 1);
        for (int c = 0; c < draws.cols(); ++c) f << "," << draws(r, c);
        f << "\n";
      }
    }
  }
  return md;
}

int resolve_workers(int configured) {
  if (configured > 0) return configured;
  if (const char* env = std::getenv("EELINK_WORKERS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

}  // namespace eelink

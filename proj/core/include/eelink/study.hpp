#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eelink/dgp.hpp"
#include "eelink/engines.hpp"
#include "eelink/types.hpp"

namespace eelink {

enum class Method { linked, augmented, plugin, known };
enum class TableFormat { csv, markdown, json };

std::string to_string(Method m);

// Data source of a study: a built-in design or an external CSV with a
// user-supplied truth for coverage (and h0 when a true-nuisance method
// is requested).
struct StudyDesign {
  std::optional<DesignKind> builtin;
  std::string data_csv;
  std::optional<double> theta0;
  std::optional<Vec> h0;

  bool is_builtin() const { return builtin.has_value(); }
};

struct StudyConfig {
  StudyDesign design;
  Estimand estimand = Estimand::gest;
  Method method = Method::linked;
  std::optional<PluginMethod> plugin;  // required when method == plugin
  int n = 1000;
  int replicates = 200;
  int B = 500;
  std::uint64_t seed = 0;
  bool intercept = true;
  std::pair<double, double> quantiles = {0.025, 0.975};
  int workers = 0;  // 0 = auto (EELINK_WORKERS, then hardware)
  double epsilon_overlap = kDefaultOverlapEps;
  int max_retries = 5;
  bool save_draws = false;
};

// Throws ValidationError naming the offending field.
void validate_config(const StudyConfig& cfg);

// Per-coordinate posterior summaries. Quantiles use linear
// interpolation of the sorted draws at position 1 + (B-1) * gamma;
// variances divide by B-1. covered[k] records whether truth[k] lies in
// the percentile interval (false when the truth is not finite).
struct PosteriorSummary {
  Vec mean;
  Vec variance;
  Vec ci_lo;
  Vec ci_hi;
  std::vector<bool> covered;
};

PosteriorSummary summarize_posterior(const Mat& draws, const Vec& truth,
                                     std::pair<double, double> quantiles);

struct ReplicateSummary {
  int replicate_id = 0;
  Vec freq_estimate;
  Vec post_mean;
  Vec post_var;
  Vec ci_lo;
  Vec ci_hi;
  std::vector<bool> covered;
  Mat sandwich_V;
  long retries = 0;
};

// Aggregates mirroring the layout of the reported tables. Vectors are
// per target coordinate. Coverage entries are percentages in [0,100],
// or -1 where no truth is available for a coordinate.
struct StudyTable {
  Vec avg_post_mean;
  Vec empirical_freq_mean;
  Vec avg_post_var_times_n;
  Vec empirical_freq_var_times_n;
  Vec avg_sandwich;
  Vec avg_ci_lo, avg_ci_hi;
  Vec freq_ci_lo, freq_ci_hi;
  Vec coverage_pct;
  int n = 0;
  int replicates_used = 0;
};

struct StudyResult {
  StudyConfig config;
  StudyTable table;
  std::vector<ReplicateSummary> replicates;
  std::vector<std::pair<int, std::string>> failures;
  std::vector<Mat> kept_draws;  // theta columns then h columns; only when save_draws
};

// One replicate end to end: generate (or reuse) data, compute the
// frequentist estimate through the engine's equal-weight path, run the
// configured engine, evaluate the linked sandwich at the frequentist
// estimates, summarize.
ReplicateSummary run_replicate(const StudyConfig& cfg, std::uint32_t replicate_id);

// All replicates over disjoint substreams (in parallel when workers
// allows), followed by a single-threaded aggregation fold in replicate
// order. Throws StudyError when more than 1% of replicates fail.
StudyResult run_study(const StudyConfig& cfg);

// Table emission. Markdown mirrors the reference layout (row labels
// like "Average of Posterior Means"); csv is one statistic per row;
// json is a flat object that parses back to the same values.
std::string emit_table(const StudyTable& t, TableFormat format);

// Multi-study markdown with one column per n.
std::string emit_merged_tables(const std::vector<std::pair<std::string, StudyTable>>& columns);

// study.json (config echo + table + replicate summaries) round-trip.
std::string study_to_json(const StudyResult& result);

// Parses a study.json payload back into (config summary fields, table).
// Only the fields needed by table merging are recovered.
struct StudyFileInfo {
  int n = 0;
  std::string estimand;
  std::string method;
  StudyTable table;
};
StudyFileInfo parse_study_json(const std::string& payload);

// Writes study.json, table.md, and optional per-replicate draw files
// into outdir. Returns the markdown table text.
std::string write_study_outputs(const StudyResult& result, const std::string& outdir);

int resolve_workers(int configured);

}  // namespace eelink

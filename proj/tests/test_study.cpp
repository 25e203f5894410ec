#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "eelink/config.hpp"
#include "eelink/csv.hpp"
#include "eelink/dgp.hpp"
#include "eelink/errors.hpp"
#include "eelink/estimators.hpp"
#include "eelink/rng.hpp"
#include "eelink/study.hpp"

using namespace eelink;
namespace fs = std::filesystem;

namespace {

Mat column(std::initializer_list<double> values) {
  Mat m(static_cast<int>(values.size()), 1);
  int i = 0;
  for (double v : values) m(i++, 0) = v;
  return m;
}

StudyConfig smoke_config(int n, int replicates, int b, std::uint64_t seed) {
  StudyConfig cfg;
  cfg.design.builtin = DesignKind::ipw2;
  cfg.design.theta0 = 3.0;
  cfg.estimand = Estimand::ipw;
  cfg.method = Method::linked;
  cfg.n = n;
  cfg.replicates = replicates;
  cfg.B = b;
  cfg.seed = seed;
  cfg.workers = 1;
  return cfg;
}

fs::path temp_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("eelink_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("posterior quantiles interpolate at 1 + (B-1) gamma") {
  Vec truth = Vec::Constant(1, 3.0);
  PosteriorSummary s =
      summarize_posterior(column({1, 2, 3, 4, 5}), truth, {0.25, 0.75});
  CHECK(s.ci_lo[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(s.ci_hi[0] == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(s.mean[0] == doctest::Approx(3.0));
  CHECK(s.covered[0]);

  PosteriorSummary tail = summarize_posterior(column({0, 10}), truth, {0.025, 0.975});
  CHECK(tail.ci_lo[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(tail.ci_hi[0] == doctest::Approx(9.75).epsilon(1e-15));
}

TEST_CASE("constant draws collapse the posterior summary") {
  Vec truth = Vec::Constant(1, 2.0);
  PosteriorSummary s = summarize_posterior(column({2, 2, 2, 2}), truth, {0.025, 0.975});
  CHECK(s.variance[0] == 0.0);
  CHECK(s.ci_lo[0] == 2.0);
  CHECK(s.ci_hi[0] == 2.0);
  CHECK(s.covered[0]);

  Vec off = Vec::Constant(1, 2.5);
  PosteriorSummary miss = summarize_posterior(column({2, 2, 2, 2}), off, {0.025, 0.975});
  CHECK_FALSE(miss.covered[0]);
}

TEST_CASE("posterior variance divides by B - 1") {
  Vec truth = Vec::Constant(1, 0.0);
  PosteriorSummary s = summarize_posterior(column({0, 2}), truth, {0.25, 0.75});
  CHECK(s.variance[0] == doctest::Approx(2.0).epsilon(1e-15));  // not 1.0
}

TEST_CASE("run_replicate on known-nuisance zero-noise data is exact") {
  // Build a zero-noise dataset y = 3 z with a known logistic treatment
  // model, write it out, and run the known-h method against it.
  RandomStream s = derive_stream({70, 0, 0, StreamPurpose::data, 0});
  Dataset d;
  d.q = 1;
  for (int i = 0; i < 40; ++i) {
    Observation o;
    o.x = Vec::Constant(1, s.normal());
    o.z = s.uniform01() < expit(o.x[0]) ? 1 : 0;
    o.y = 3.0 * o.z;
    d.rows.push_back(o);
  }
  fs::path dir = temp_dir("zero_noise");
  write_dataset_csv(d, (dir / "data.csv").string());

  StudyConfig cfg;
  cfg.design.data_csv = (dir / "data.csv").string();
  cfg.design.theta0 = 3.0;
  cfg.design.h0 = Vec::Ones(1);
  cfg.estimand = Estimand::gest;
  cfg.method = Method::known;
  cfg.n = 40;
  cfg.replicates = 1;
  cfg.B = 20;
  cfg.seed = 5;

  ReplicateSummary rep = run_replicate(cfg, 0);
  CHECK(rep.post_var[0] <= 1e-20);
  CHECK(rep.covered[0]);
  CHECK(rep.freq_estimate[0] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("run_replicate is deterministic") {
  StudyConfig cfg = smoke_config(120, 4, 50, 31);
  ReplicateSummary a = run_replicate(cfg, 2);
  ReplicateSummary b = run_replicate(cfg, 2);
  CHECK(a.freq_estimate == b.freq_estimate);
  CHECK(a.post_mean == b.post_mean);
  CHECK(a.post_var == b.post_var);
  CHECK(a.ci_lo == b.ci_lo);
  CHECK(a.ci_hi == b.ci_hi);
  CHECK(a.retries == b.retries);
}

TEST_CASE("per-replicate frequentist path equals the two-step estimator") {
  StudyConfig cfg = smoke_config(150, 1, 30, 77);
  ReplicateSummary rep = run_replicate(cfg, 0);

  StreamKey key{cfg.seed, 0, 0, StreamPurpose::data, 0};
  RandomStream stream = derive_stream(key);
  auto [d, truth] = gen_ipw_design(cfg.n, stream);
  NuisanceFit fit = fit_logistic_weighted(d, equal_weights(d.n()), true);
  PropensityModel model{fit.h, true};
  CHECK(rep.freq_estimate[0] ==
        doctest::Approx(ipw_estimate(d, equal_weights(d.n()), model)).epsilon(1e-10));
}

TEST_CASE("a single replicate aggregates to its own summary") {
  StudyConfig cfg = smoke_config(100, 1, 40, 13);
  StudyResult result = run_study(cfg);
  REQUIRE(result.replicates.size() == 1);
  const ReplicateSummary& rep = result.replicates[0];
  const StudyTable& t = result.table;
  CHECK(t.avg_post_mean[0] == rep.post_mean[0]);
  CHECK(t.empirical_freq_mean[0] == rep.freq_estimate[0]);
  CHECK(t.avg_post_var_times_n[0] == doctest::Approx(rep.post_var[0] * cfg.n));
  CHECK(t.empirical_freq_var_times_n[0] == 0.0);
  CHECK(t.avg_ci_lo[0] == rep.ci_lo[0]);
  CHECK(t.avg_ci_hi[0] == rep.ci_hi[0]);
  CHECK(t.coverage_pct[0] == (rep.covered[0] ? 100.0 : 0.0));
  CHECK(t.replicates_used == 1);
}

TEST_CASE("studies are identical across worker counts") {
  StudyConfig cfg = smoke_config(80, 6, 25, 2025);
  cfg.workers = 1;
  StudyResult serial = run_study(cfg);
  cfg.workers = 4;
  StudyResult parallel = run_study(cfg);
  CHECK(study_to_json(serial) == study_to_json(parallel));
}

TEST_CASE("emit_table round trips through json and carries the reference labels") {
  StudyConfig cfg = smoke_config(90, 3, 30, 44);
  StudyResult result = run_study(cfg);

  std::string md = emit_table(result.table, TableFormat::markdown);
  CHECK(md.find("Average of Posterior Means") != std::string::npos);
  CHECK(md.find("Posterior Coverage") != std::string::npos);

  std::string csv = emit_table(result.table, TableFormat::csv);
  int lines = 0;
  for (char c : csv) lines += (c == '\n');
  CHECK(lines == 9);  // header + 8 statistics

  std::string payload = emit_table(result.table, TableFormat::json);
  auto j = nlohmann::json::parse(payload);
  CHECK(j["n"].get<int>() == result.table.n);
  CHECK(j["avg_post_mean"][0].get<double>() == result.table.avg_post_mean[0]);
  CHECK(j["coverage_pct"][0].get<double>() == result.table.coverage_pct[0]);
  CHECK(j["empirical_freq_var_times_n"][0].get<double>() ==
        result.table.empirical_freq_var_times_n[0]);
}

TEST_CASE("study json round trips for the tables subcommand") {
  StudyConfig cfg = smoke_config(70, 2, 20, 91);
  StudyResult result = run_study(cfg);
  std::string payload = study_to_json(result);
  StudyFileInfo info = parse_study_json(payload);
  CHECK(info.n == result.table.n);
  CHECK(info.estimand == "ipw");
  CHECK(info.method == "linked");
  CHECK(info.table.avg_post_mean[0] == result.table.avg_post_mean[0]);

  std::string merged = emit_merged_tables({{"n=70", info.table}, {"n=70 (2)", info.table}});
  CHECK(merged.find("n=70 (2)") != std::string::npos);
  CHECK(merged.find("Average of Posterior Means") != std::string::npos);
}

TEST_CASE("write_study_outputs persists study.json, table.md, and draws") {
  StudyConfig cfg = smoke_config(60, 2, 15, 8);
  cfg.save_draws = true;
  StudyResult result = run_study(cfg);
  fs::path dir = temp_dir("outputs");
  write_study_outputs(result, dir.string());
  CHECK(fs::exists(dir / "study.json"));
  CHECK(fs::exists(dir / "table.md"));
  CHECK(fs::exists(dir / "rep0_draws.csv"));
  CHECK(fs::exists(dir / "rep1_draws.csv"));

  std::ifstream f(dir / "rep0_draws.csv");
  std::string header;
  std::getline(f, header);
  CHECK(header == "draw_id,theta_1,h_1,h_2,h_3");
  int rows = 0;
  std::string line;
  while (std::getline(f, line)) rows += !line.empty();
  CHECK(rows == cfg.B);
}

TEST_CASE("coverage is recomputable from persisted draws") {
  StudyConfig cfg = smoke_config(70, 3, 25, 19);
  cfg.save_draws = true;
  StudyResult result = run_study(cfg);
  REQUIRE(result.kept_draws.size() == 3);

  for (int r = 0; r < 3; ++r) {
    Mat theta = result.kept_draws[r].leftCols(1);
    PosteriorSummary redo = summarize_posterior(theta, Vec::Constant(1, 3.0), cfg.quantiles);
    const ReplicateSummary& rep = result.replicates[r];
    CHECK(redo.ci_lo[0] == rep.ci_lo[0]);
    CHECK(redo.ci_hi[0] == rep.ci_hi[0]);
    CHECK(redo.covered[0] == rep.covered[0]);
    CHECK(rep.covered[0] == (3.0 >= rep.ci_lo[0] && 3.0 <= rep.ci_hi[0]));
  }
}

TEST_CASE("a study aborts when too many replicates fail") {
  // A separated dataset makes every replicate fail its draws.
  Dataset d;
  d.q = 1;
  for (int i = 0; i < 12; ++i) {
    Observation o;
    o.x = Vec::Constant(1, i < 6 ? 1.0 + i * 0.1 : -1.0 - i * 0.1);
    o.z = i < 6 ? 1 : 0;
    o.y = static_cast<double>(i);
    d.rows.push_back(o);
  }
  fs::path dir = temp_dir("separated");
  write_dataset_csv(d, (dir / "data.csv").string());

  StudyConfig cfg;
  cfg.design.data_csv = (dir / "data.csv").string();
  cfg.design.theta0 = 0.0;
  cfg.estimand = Estimand::gest;
  cfg.method = Method::linked;
  cfg.intercept = false;
  cfg.n = 12;
  cfg.replicates = 3;
  cfg.B = 4;
  cfg.seed = 3;
  cfg.workers = 1;
  CHECK_THROWS_AS(run_study(cfg), StudyError);
}

TEST_CASE("validate_config names the offending field") {
  StudyConfig cfg = smoke_config(100, 5, 20, 1);
  cfg.method = Method::plugin;
  CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("plugin"), ValidationError);

  StudyConfig q = smoke_config(100, 5, 20, 1);
  q.quantiles = {0.9, 0.1};
  CHECK_THROWS_WITH_AS(validate_config(q), doctest::Contains("quantiles"), ValidationError);

  StudyConfig b = smoke_config(100, 5, 1, 1);
  CHECK_THROWS_WITH_AS(validate_config(b), doctest::Contains("B"), ValidationError);
}

// eelink: Bayesian-bootstrap posterior inference for estimating
// equations with a fitted propensity model.
//
// Subcommands: gen, posterior, variance, simulate, tables.
// Exit codes: 0 success, 2 validation/parse failure, 3 solver failure,
// 4 study failure tolerance exceeded.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "eelink/config.hpp"
#include "eelink/csv.hpp"
#include "eelink/dgp.hpp"
#include "eelink/engines.hpp"
#include "eelink/errors.hpp"
#include "eelink/sandwich.hpp"
#include "eelink/study.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace eelink;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;
constexpr int kExitStudy = 4;

json vec_json(const Vec& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

json mat_json_row_major(const Mat& m) {
  json arr = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) arr.push_back(m(i, j));
  }
  return arr;
}

Estimand estimand_from(const std::string& s) {
  if (s == "gest") return Estimand::gest;
  if (s == "ipw") return Estimand::ipw;
  if (s == "att") return Estimand::att;
  if (s == "psreg") return Estimand::psreg;
  throw ValidationError("unknown estimand '" + s + "'");
}

EstimandSpec spec_from(Estimand e, int q, bool intercept) {
  switch (e) {
    case Estimand::gest: return make_gest_spec(q, intercept);
    case Estimand::ipw: return make_ipw_spec(q, intercept);
    case Estimand::att: return make_att_spec(q, intercept);
    case Estimand::psreg: return make_psreg_spec(q, intercept);
  }
  throw ValidationError("unknown estimand");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << text;
}

int run_gen(const std::string& design, int n, std::uint64_t seed, const std::string& out) {
  DesignKind kind;
  if (design == "gest6") {
    kind = DesignKind::gest6;
  } else if (design == "ipw2") {
    kind = DesignKind::ipw2;
  } else {
    throw ValidationError("unknown design '" + design + "'");
  }
  StreamKey key{seed, 0, 0, StreamPurpose::data, 0};
  RandomStream stream = derive_stream(key);
  auto [dataset, truth] = generate_design(kind, n, stream);
  write_dataset_csv(dataset, out);

  json tj;
  tj["theta0"] = truth.theta0;
  tj["h0"] = vec_json(truth.h0);
  tj["design"] = design;
  tj["n"] = n;
  tj["seed"] = seed;
  write_text(out + ".truth.json", tj.dump(2) + "\n");
  std::cout << "wrote " << out << " (" << dataset.n() << " rows) and " << out << ".truth.json\n";
  return 0;
}

struct PosteriorArgs {
  std::string data_csv;
  std::string estimand = "gest";
  std::string method = "linked";
  int B = 500;
  std::uint64_t seed = 0;
  bool intercept = true;
  std::string out_dir = ".";
  std::string plugin_kind = "freq_logistic";
  bool plugin_intercept = true;
  int llb_draws = 500;
  std::vector<double> h0;
  double epsilon_overlap = kDefaultOverlapEps;
  int max_retries = 5;
  int workers = 0;
  std::pair<double, double> quantiles = {0.025, 0.975};
};

int run_posterior(const PosteriorArgs& args) {
  Dataset data = read_dataset_csv(args.data_csv);
  ensure_valid(data);
  Estimand estimand = estimand_from(args.estimand);

  Vec h0;
  if (!args.h0.empty()) {
    h0.resize(static_cast<int>(args.h0.size()));
    for (size_t i = 0; i < args.h0.size(); ++i) h0[i] = args.h0[i];
  }

  bool intercept = args.intercept;
  std::optional<PluginMethod> plugin;
  if (args.method == "plugin") {
    PluginMethod p;
    if (args.plugin_kind == "true_h") {
      if (h0.size() == 0) throw ValidationError("plugin kind 'true_h' requires --h0");
      p.kind = PluginKind::true_h;
      p.h0 = h0;
      p.intercept = false;
      intercept = false;
    } else if (args.plugin_kind == "freq_logistic") {
      p.kind = PluginKind::freq_logistic;
      p.intercept = args.plugin_intercept;
      intercept = p.intercept;
    } else if (args.plugin_kind == "llb_mean") {
      p.kind = PluginKind::llb_mean;
      p.intercept = args.plugin_intercept;
      p.llb_draws = args.llb_draws;
      intercept = p.intercept;
    } else {
      throw ValidationError("unknown plugin kind '" + args.plugin_kind + "'");
    }
    plugin = p;
  } else if (args.method == "known") {
    if (h0.size() == 0) throw ValidationError("method 'known' requires --h0");
    intercept = false;
  }

  EstimandSpec spec = spec_from(estimand, data.q, intercept);
  EngineConfig cfg;
  cfg.B = args.B;
  cfg.seed = args.seed;
  cfg.max_retries = args.max_retries;
  cfg.epsilon_overlap = args.epsilon_overlap;
  cfg.workers = resolve_workers(args.workers);

  auto run_pass = [&](const EngineConfig& pass_cfg, const EngineHooks& hooks) -> PosteriorDraws {
    if (args.method == "linked") return bb_posterior_linked(spec, data, pass_cfg, hooks);
    if (args.method == "augmented") return bb_posterior_augmented(spec, data, pass_cfg, hooks);
    if (args.method == "known") return bb_posterior_known_h(spec, data, h0, pass_cfg, hooks);
    if (args.method == "plugin") return bb_posterior_plugin(spec, data, *plugin, pass_cfg, hooks);
    throw ValidationError("unknown method '" + args.method + "'");
  };

  EngineConfig freq_cfg = cfg;
  freq_cfg.B = 1;
  freq_cfg.workers = 1;
  EngineHooks equal;
  equal.force_equal_weights = true;
  PosteriorDraws freq = run_pass(freq_cfg, equal);
  Vec point = freq.theta.row(0).transpose();

  Vec h_for_sandwich;
  if (freq.h) {
    h_for_sandwich = freq.h->row(0).transpose();
  } else if (args.method == "known") {
    h_for_sandwich = h0;
  } else {
    h_for_sandwich = plugin_nuisance_estimate(data, *plugin, cfg);
  }

  PosteriorDraws draws = run_pass(cfg, {});
  SandwichEstimate sand = sandwich_linked(spec, data, point, h_for_sandwich);

  Vec truth = Vec::Constant(spec.p, std::numeric_limits<double>::quiet_NaN());
  PosteriorSummary summary = summarize_posterior(draws.theta, truth, args.quantiles);

  fs::create_directories(args.out_dir);

  std::ostringstream csv;
  csv.precision(17);
  csv << "draw_id";
  for (int k = 0; k < spec.p; ++k) csv << ",theta_" << (k + 1);
  if (draws.h) {
    for (int k = 0; k < spec.q_nuis; ++k) csv << ",h_" << (k + 1);
  }
  csv << "\n";
  for (int r = 0; r < draws.draws(); ++r) {
    csv << (r + 1);
    for (int k = 0; k < spec.p; ++k) csv << "," << draws.theta(r, k);
    if (draws.h) {
      for (int k = 0; k < spec.q_nuis; ++k) csv << "," << (*draws.h)(r, k);
    }
    csv << "\n";
  }
  write_text(fs::path(args.out_dir) / "draws.csv", csv.str());

  json s;
  s["method"] = args.method;
  s["estimand"] = args.estimand;
  s["n"] = data.n();
  s["B"] = args.B;
  s["seed"] = args.seed;
  s["point_estimate"] = vec_json(point);
  s["posterior_mean"] = vec_json(summary.mean);
  s["posterior_variance"] = vec_json(summary.variance);
  s["posterior_variance_times_n"] = vec_json(summary.variance * static_cast<double>(data.n()));
  s["ci_lo"] = vec_json(summary.ci_lo);
  s["ci_hi"] = vec_json(summary.ci_hi);
  s["sandwich_V"] = mat_json_row_major(sand.V);
  s["retries_total"] = draws.retries_total;
  s["config"] = json{{"data_csv", args.data_csv},
                     {"intercept", intercept},
                     {"quantiles", json::array({args.quantiles.first, args.quantiles.second})},
                     {"epsilon_overlap", args.epsilon_overlap},
                     {"max_retries", args.max_retries}};
  if (plugin) {
    s["config"]["plugin"] = json{{"kind", to_string(plugin->kind)},
                                 {"intercept", plugin->intercept},
                                 {"llb_draws", plugin->llb_draws}};
  }
  write_text(fs::path(args.out_dir) / "summary.json", s.dump(2) + "\n");
  std::cout << s.dump(2) << "\n";
  return 0;
}

int run_variance(const std::string& data_csv, const std::string& estimand_name, bool intercept,
                 const std::vector<double>& h0_arg, const std::string& out_path) {
  Dataset data = read_dataset_csv(data_csv);
  ensure_valid(data);
  Estimand estimand = estimand_from(estimand_name);

  Vec h_hat;
  bool use_true_h = !h0_arg.empty();
  if (use_true_h) {
    h_hat.resize(static_cast<int>(h0_arg.size()));
    for (size_t i = 0; i < h0_arg.size(); ++i) h_hat[i] = h0_arg[i];
    intercept = false;
  }
  EstimandSpec spec = spec_from(estimand, data.q, intercept);

  EngineConfig cfg;
  cfg.B = 1;
  EngineHooks equal;
  equal.force_equal_weights = true;
  PosteriorDraws freq;
  if (use_true_h) {
    freq = bb_posterior_known_h(spec, data, h_hat, cfg, equal);
  } else {
    freq = bb_posterior_linked(spec, data, cfg, equal);
    h_hat = freq.h->row(0).transpose();
  }
  Vec theta_hat = freq.theta.row(0).transpose();

  SandwichEstimate est = sandwich_linked(spec, data, theta_hat, h_hat);
  json out;
  out["n_used"] = est.n_used;
  out["p"] = spec.p;
  out["q_nuis"] = spec.q_nuis;
  out["theta_hat"] = vec_json(theta_hat);
  out["h_hat"] = vec_json(h_hat);
  out["M_theta"] = mat_json_row_major(est.M_theta);
  out["M_h"] = mat_json_row_major(est.M_h);
  out["U_h"] = mat_json_row_major(est.U_h);
  out["Omega"] = mat_json_row_major(est.Omega);
  out["Sigma"] = mat_json_row_major(est.Sigma);
  out["V"] = mat_json_row_major(est.V);
  out["Lambda"] = mat_json_row_major(est.Lambda);
  if (!out_path.empty()) write_text(out_path, out.dump(2) + "\n");
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian-bootstrap posterior inference for estimating equations"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a dataset from a built-in design");
  std::string gen_design = "gest6";
  int gen_n = 1000;
  std::uint64_t gen_seed = 0;
  std::string gen_out = "data.csv";
  gen->add_option("--design", gen_design, "gest6 or ipw2")->required();
  gen->add_option("--n", gen_n, "sample size")->required();
  gen->add_option("--seed", gen_seed, "master seed")->required();
  gen->add_option("--out", gen_out, "output CSV path")->required();

  // posterior
  auto* post = app.add_subcommand("posterior", "Posterior draws for a dataset");
  PosteriorArgs pargs;
  post->add_option("--data", pargs.data_csv, "dataset CSV")->required();
  post->add_option("--estimand", pargs.estimand, "gest|ipw|att|psreg")->required();
  post->add_option("--method", pargs.method, "linked|augmented|plugin|known")->required();
  post->add_option("--B", pargs.B, "number of draws");
  post->add_option("--seed", pargs.seed, "master seed");
  post->add_flag("--intercept,!--no-intercept", pargs.intercept, "nuisance intercept");
  post->add_option("--out", pargs.out_dir, "output directory");
  post->add_option("--plugin-kind", pargs.plugin_kind, "true_h|freq_logistic|llb_mean");
  post->add_flag("--plugin-intercept,!--no-plugin-intercept", pargs.plugin_intercept,
                 "plug-in fit intercept");
  post->add_option("--llb-draws", pargs.llb_draws, "draws for the llb_mean plug-in");
  post->add_option("--h0", pargs.h0, "true nuisance coefficients")->delimiter(',');
  post->add_option("--epsilon-overlap", pargs.epsilon_overlap, "positivity band");
  post->add_option("--max-retries", pargs.max_retries, "retries per draw");
  post->add_option("--workers", pargs.workers, "worker threads (0 = auto)");

  // variance
  auto* var = app.add_subcommand("variance", "Sandwich variance blocks as JSON");
  std::string var_data, var_estimand = "gest", var_out;
  bool var_intercept = true;
  std::vector<double> var_h0;
  var->add_option("--data", var_data, "dataset CSV")->required();
  var->add_option("--estimand", var_estimand, "gest|ipw|att|psreg")->required();
  var->add_flag("--intercept,!--no-intercept", var_intercept, "nuisance intercept");
  var->add_option("--h0", var_h0, "evaluate at a true h instead of the fit")->delimiter(',');
  var->add_option("--out", var_out, "also write the JSON to a file");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run a replicated study from a config file");
  std::string sim_config, sim_out = "study_out";
  std::uint64_t sim_seed = 0;
  int sim_B = 0, sim_reps = 0, sim_n = 0, sim_workers = -1;
  bool sim_save_draws = false;
  std::string sim_method, sim_estimand, sim_design;
  sim->add_option("--config", sim_config, "JSON config path")->required();
  sim->add_option("--out", sim_out, "output directory");
  auto* sim_seed_opt = sim->add_option("--seed", sim_seed, "override seed");
  auto* sim_b_opt = sim->add_option("--B", sim_B, "override draw count");
  auto* sim_reps_opt = sim->add_option("--replicates", sim_reps, "override replicate count");
  auto* sim_n_opt = sim->add_option("--n", sim_n, "override sample size");
  auto* sim_workers_opt = sim->add_option("--workers", sim_workers, "override workers");
  auto* sim_method_opt = sim->add_option("--method", sim_method, "override method");
  auto* sim_estimand_opt = sim->add_option("--estimand", sim_estimand, "override estimand");
  auto* sim_design_opt = sim->add_option("--design", sim_design, "override design");
  auto* sim_save_opt = sim->add_flag("--save-draws", sim_save_draws, "persist per-replicate draws");

  // tables
  auto* tab = app.add_subcommand("tables", "Merge study.json files into one table");
  std::vector<std::string> tab_paths;
  tab->add_option("paths", tab_paths, "study.json files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitValidation;
  }

  try {
    if (gen->parsed()) return run_gen(gen_design, gen_n, gen_seed, gen_out);
    if (post->parsed()) return run_posterior(pargs);
    if (var->parsed()) return run_variance(var_data, var_estimand, var_intercept, var_h0, var_out);

    if (sim->parsed()) {
      StudyConfig cfg = parse_config(sim_config);
      // Explicit flags override config values, which override defaults.
      if (sim_seed_opt->count()) cfg.seed = sim_seed;
      if (sim_b_opt->count()) cfg.B = sim_B;
      if (sim_reps_opt->count()) cfg.replicates = sim_reps;
      if (sim_n_opt->count()) cfg.n = sim_n;
      if (sim_workers_opt->count()) cfg.workers = sim_workers;
      if (sim_save_opt->count()) cfg.save_draws = sim_save_draws;
      if (sim_method_opt->count()) {
        StudyConfig probe = cfg;
        if (sim_method == "linked") probe.method = Method::linked;
        else if (sim_method == "augmented") probe.method = Method::augmented;
        else if (sim_method == "plugin") probe.method = Method::plugin;
        else if (sim_method == "known") probe.method = Method::known;
        else throw ValidationError("unknown method '" + sim_method + "'");
        cfg = probe;
      }
      if (sim_estimand_opt->count()) cfg.estimand = estimand_from(sim_estimand);
      if (sim_design_opt->count()) {
        if (sim_design == "gest6") cfg.design.builtin = DesignKind::gest6;
        else if (sim_design == "ipw2") cfg.design.builtin = DesignKind::ipw2;
        else throw ValidationError("unknown design '" + sim_design + "'");
      }
      validate_config(cfg);
      StudyResult result = run_study(cfg);
      std::string md = write_study_outputs(result, sim_out);
      std::cout << md;
      if (!result.failures.empty()) {
        std::cerr << result.failures.size() << " replicate(s) failed and were excluded\n";
      }
      return 0;
    }

    if (tab->parsed()) {
      std::vector<std::pair<std::string, StudyTable>> columns;
      std::string estimand, method;
      std::vector<StudyFileInfo> infos;
      for (const auto& path : tab_paths) {
        std::ifstream f(path);
        if (!f) throw ValidationError("cannot open '" + path + "'");
        std::ostringstream buf;
        buf << f.rdbuf();
        StudyFileInfo info = parse_study_json(buf.str());
        if (infos.empty()) {
          estimand = info.estimand;
          method = info.method;
        } else if (info.estimand != estimand || info.method != method) {
          throw ValidationError("schema mismatch: '" + path + "' reports " + info.estimand + "/" +
                                info.method + ", expected " + estimand + "/" + method);
        }
        infos.push_back(std::move(info));
      }
      std::stable_sort(infos.begin(), infos.end(),
                       [](const StudyFileInfo& a, const StudyFileInfo& b) { return a.n < b.n; });
      std::map<int, int> seen;
      for (const auto& info : infos) {
        int count = ++seen[info.n];
        std::string label = "n=" + std::to_string(info.n);
        if (count > 1) label += " (" + std::to_string(count) + ")";
        columns.emplace_back(label, info.table);
      }
      std::cout << emit_merged_tables(columns);
      return 0;
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const StudyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStudy;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

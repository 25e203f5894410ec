#include "eelink/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "eelink/errors.hpp"

namespace eelink {

using nlohmann::json;

namespace {

Estimand parse_estimand(const std::string& s) {
  if (s == "gest") return Estimand::gest;
  if (s == "ipw") return Estimand::ipw;
  if (s == "att") return Estimand::att;
  if (s == "psreg") return Estimand::psreg;
  throw ValidationError("estimand: unknown value '" + s + "'");
}

Method parse_method(const std::string& s) {
  if (s == "linked") return Method::linked;
  if (s == "augmented") return Method::augmented;
  if (s == "plugin") return Method::plugin;
  if (s == "known") return Method::known;
  throw ValidationError("method: unknown value '" + s + "'");
}

PluginKind parse_plugin_kind(const std::string& s) {
  if (s == "true_h") return PluginKind::true_h;
  if (s == "freq_logistic") return PluginKind::freq_logistic;
  if (s == "llb_mean") return PluginKind::llb_mean;
  throw ValidationError("plugin.kind: unknown value '" + s + "'");
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ValidationError(where + ": unknown field '" + it.key() + "'");
    }
  }
}

}  // namespace

StudyConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& err) {
    throw ParseError(std::string("config: ") + err.what());
  }
  if (!j.is_object()) throw ParseError("config: top level must be a JSON object");

  static const std::set<std::string> allowed = {
      "design", "data_csv", "theta0", "h0", "estimand", "method", "plugin",
      "n", "replicates", "B", "seed", "intercept", "quantiles", "workers",
      "epsilon_overlap", "max_retries", "save_draws"};
  reject_unknown_keys(j, allowed, "config");

  StudyConfig cfg;
  try {
    if (!j.contains("design")) throw ValidationError("design: required");
    std::string design = j["design"].get<std::string>();
    if (design == "gest6") {
      cfg.design.builtin = DesignKind::gest6;
    } else if (design == "ipw2") {
      cfg.design.builtin = DesignKind::ipw2;
    } else if (design == "csv") {
      if (!j.contains("data_csv")) throw ValidationError("data_csv: required for design 'csv'");
      cfg.design.data_csv = j["data_csv"].get<std::string>();
    } else {
      throw ValidationError("design: unknown value '" + design + "'");
    }
    if (j.contains("theta0")) cfg.design.theta0 = j["theta0"].get<double>();
    if (cfg.design.is_builtin() && !cfg.design.theta0) cfg.design.theta0 = 3.0;
    if (j.contains("h0")) {
      auto arr = j["h0"];
      Vec h0(arr.size());
      for (size_t k = 0; k < arr.size(); ++k) h0[k] = arr[k].get<double>();
      cfg.design.h0 = h0;
    }

    if (!j.contains("estimand")) throw ValidationError("estimand: required");
    cfg.estimand = parse_estimand(j["estimand"].get<std::string>());
    if (!j.contains("method")) throw ValidationError("method: required");
    cfg.method = parse_method(j["method"].get<std::string>());

    if (j.contains("plugin")) {
      const json& pj = j["plugin"];
      if (!pj.is_object()) throw ValidationError("plugin: must be an object");
      reject_unknown_keys(pj, {"kind", "intercept", "llb_draws"}, "plugin");
      PluginMethod plugin;
      if (!pj.contains("kind")) throw ValidationError("plugin.kind: required");
      plugin.kind = parse_plugin_kind(pj["kind"].get<std::string>());
      plugin.intercept = pj.value("intercept", true);
      plugin.llb_draws = pj.value("llb_draws", 500);
      if (plugin.llb_draws < 1) throw ValidationError("plugin.llb_draws: must be >= 1");
      cfg.plugin = plugin;
    }

    if (!j.contains("n")) throw ValidationError("n: required");
    cfg.n = j["n"].get<int>();
    if (!j.contains("seed")) throw ValidationError("seed: required");
    cfg.seed = j["seed"].get<std::uint64_t>();

    cfg.replicates = j.value("replicates", 200);
    cfg.B = j.value("B", 500);
    cfg.intercept = j.value("intercept", true);
    if (j.contains("quantiles")) {
      auto arr = j["quantiles"];
      if (!arr.is_array() || arr.size() != 2) {
        throw ValidationError("quantiles: must be a two-element array");
      }
      cfg.quantiles = {arr[0].get<double>(), arr[1].get<double>()};
    }
    if (j.contains("workers")) {
      if (j["workers"].is_string()) {
        if (j["workers"].get<std::string>() != "auto") {
          throw ValidationError("workers: must be a positive integer or \"auto\"");
        }
        cfg.workers = 0;
      } else {
        cfg.workers = j["workers"].get<int>();
      }
    }
    cfg.epsilon_overlap = j.value("epsilon_overlap", kDefaultOverlapEps);
    cfg.max_retries = j.value("max_retries", 5);
    cfg.save_draws = j.value("save_draws", false);
  } catch (const json::exception& err) {
    throw ParseError(std::string("config: ") + err.what());
  }

  validate_config(cfg);
  return cfg;
}

StudyConfig parse_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config_text(buf.str());
}

std::string config_to_json(const StudyConfig& cfg) {
  json j;
  if (cfg.design.is_builtin()) {
    j["design"] = to_string(*cfg.design.builtin);
  } else {
    j["design"] = "csv";
    j["data_csv"] = cfg.design.data_csv;
  }
  if (cfg.design.theta0) j["theta0"] = *cfg.design.theta0;
  if (cfg.design.h0) {
    json arr = json::array();
    for (int k = 0; k < cfg.design.h0->size(); ++k) arr.push_back((*cfg.design.h0)[k]);
    j["h0"] = arr;
  }
  j["estimand"] = to_string(cfg.estimand);
  j["method"] = to_string(cfg.method);
  if (cfg.plugin) {
    j["plugin"] = json{{"kind", to_string(cfg.plugin->kind)},
                       {"intercept", cfg.plugin->intercept},
                       {"llb_draws", cfg.plugin->llb_draws}};
  }
  j["n"] = cfg.n;
  j["replicates"] = cfg.replicates;
  j["B"] = cfg.B;
  j["seed"] = cfg.seed;
  j["intercept"] = cfg.intercept;
  j["quantiles"] = json::array({cfg.quantiles.first, cfg.quantiles.second});
  j["epsilon_overlap"] = cfg.epsilon_overlap;
  j["max_retries"] = cfg.max_retries;
  // workers and save_draws are runtime knobs with no effect on results,
  // so they stay out of the echo and study.json is identical across
  // worker counts.
  return j.dump();
}

}  // namespace eelink

#include "mobfair/config.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "csv.hpp"
#include "mobfair/error.hpp"

namespace mobfair {

namespace {

namespace pt = boost::property_tree;

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"data",
       {"cases", "mobility", "mobility_schema", "include_self_loops", "demographics",
        "baseline_start", "baseline_end"}},
      {"synth",
       {"seed", "n_units", "n_days", "baseline_days", "start", "true_betas", "growth_noise_sd",
        "epidemic_start", "initial_case_rate", "bias_strength", "sigma_max",
        "reference_population", "trough_level", "recovery_level", "decline_days",
        "ownership_population_corr", "population_log_sd", "placebo_covariate"}},
      {"run",
       {"models", "horizons", "target", "schedule_start", "schedule_end", "schedule_step",
        "output_dir", "workers", "seed", "min_obs"}},
      {"linreg",
       {"window_days", "shift_days", "include_intercept", "min_cumulative", "freeze_mobility",
        "max_condition", "lags"}},
      {"arimax",
       {"window_days", "exog_lag_days", "p_max", "d_max", "q_max", "include_intercept_when_d0",
        "objective_tol", "max_iterations", "on_cumulative", "use_exog"}},
      {"audit", {"min_n", "permutation", "n_permutations", "covariates", "mape"}},
  };
  return keys;
}

// Typed access to one section with `section.key` in error messages.
class Section {
 public:
  Section(std::string name, const pt::ptree* tree) : name_(std::move(name)), tree_(tree) {}

  [[nodiscard]] std::optional<std::string> raw(const std::string& key) const {
    if (tree_ == nullptr) return std::nullopt;
    auto v = tree_->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return boost::algorithm::trim_copy(*v);
  }

  [[nodiscard]] std::string require(const std::string& key) const {
    auto v = raw(key);
    if (!v || v->empty()) config_error(fmt::format("missing required key {}.{}", name_, key));
    return *v;
  }

  template <typename T>
  void read(const std::string& key, T& out) const {
    if (auto v = raw(key)) out = convert<T>(key, *v);
  }

  template <typename T>
  [[nodiscard]] T convert(const std::string& key, const std::string& text) const {
    if constexpr (std::is_same_v<T, bool>) {
      const auto lower = boost::algorithm::to_lower_copy(text);
      if (lower == "true" || lower == "yes" || lower == "on" || lower == "1") return true;
      if (lower == "false" || lower == "no" || lower == "off" || lower == "0") return false;
      bad(key, text, "a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
      return text;
    } else if constexpr (std::is_same_v<T, DateIndex>) {
      DateIndex d;
      if (!try_parse_date(text, d)) bad(key, text, "a YYYY-MM-DD date");
      return d;
    } else if constexpr (std::is_floating_point_v<T>) {
      auto v = csv::to_double(text);
      if (!v) bad(key, text, "a number");
      return *v;
    } else {
      auto v = csv::to_int(text);
      if (!v) bad(key, text, "an integer");
      if constexpr (std::is_signed_v<T>) {
        return static_cast<T>(*v);
      } else {
        if (*v < 0) bad(key, text, "a non-negative integer");
        return static_cast<T>(*v);
      }
    }
  }

  [[noreturn]] void bad(const std::string& key, const std::string& text,
                        const std::string& what) const {
    config_error(fmt::format("{}.{} = '{}' is not {}", name_, key, text, what));
  }

  [[nodiscard]] std::vector<std::string> list(const std::string& key) const {
    std::vector<std::string> out;
    auto v = raw(key);
    if (!v) return out;
    boost::algorithm::split(out, *v, boost::is_any_of(","));
    for (auto& s : out) boost::algorithm::trim(s);
    std::erase_if(out, [](const std::string& s) { return s.empty(); });
    return out;
  }

 private:
  std::string name_;
  const pt::ptree* tree_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

}  // namespace

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return fmt::format("{:016x}", h);
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    config_error(fmt::format("line {}: {}", e.line(), e.message()));
  }

  std::map<std::string, const pt::ptree*> sections;
  for (const auto& [name, child] : tree) {
    if (child.empty()) config_error(fmt::format("key '{}' outside any section", name));
    auto known = known_keys().find(name);
    if (known == known_keys().end()) config_error(fmt::format("unknown section [{}]", name));
    for (const auto& [key, value] : child) {
      if (!known->second.contains(key)) {
        config_error(fmt::format("unknown key {}.{}", name, key));
      }
    }
    sections[name] = &child;
  }
  auto section = [&](const std::string& name) {
    auto it = sections.find(name);
    return Section(name, it == sections.end() ? nullptr : it->second);
  };

  RunConfig cfg;
  cfg.hash = fnv1a_hex(text);
  const bool has_data = sections.contains("data");
  const bool has_synth = sections.contains("synth");
  if (has_data == has_synth) {
    config_error("exactly one of the [data] and [synth] sections must be present");
  }

  if (has_data) {
    const auto s = section("data");
    DataSection d;
    d.cases = resolve(base_dir, s.require("cases"));
    d.mobility = resolve(base_dir, s.require("mobility"));
    d.demographics = resolve(base_dir, s.require("demographics"));
    if (auto schema = s.raw("mobility_schema")) {
      try {
        d.mobility_options.schema = ingest::parse_schema(*schema);
      } catch (const Error& e) {
        config_error(fmt::format("data.mobility_schema: {}", e.what()));
      }
    }
    s.read("include_self_loops", d.mobility_options.include_self_loops);
    d.baseline.first = s.convert<DateIndex>("baseline_start", s.require("baseline_start"));
    d.baseline.last = s.convert<DateIndex>("baseline_end", s.require("baseline_end"));
    if (d.baseline.last < d.baseline.first) config_error("data.baseline_end precedes baseline_start");
    cfg.data = std::move(d);
  } else {
    const auto s = section("synth");
    synth::SynthConfig sc;
    sc.seed = s.convert<std::uint64_t>("seed", s.require("seed"));
    s.read("n_units", sc.n_units);
    s.read("n_days", sc.n_days);
    s.read("baseline_days", sc.baseline_days);
    s.read("start", sc.start);
    if (auto betas = s.list("true_betas"); !betas.empty()) {
      if (betas.size() != 3) config_error("synth.true_betas needs three values");
      for (std::size_t i = 0; i < 3; ++i) sc.true_betas[i] = s.convert<double>("true_betas", betas[i]);
    }
    s.read("growth_noise_sd", sc.growth_noise_sd);
    s.read("epidemic_start", sc.epidemic_start);
    s.read("initial_case_rate", sc.initial_case_rate);
    s.read("bias_strength", sc.bias_strength);
    s.read("sigma_max", sc.sigma_max);
    s.read("reference_population", sc.reference_population);
    s.read("trough_level", sc.trough_level);
    s.read("recovery_level", sc.recovery_level);
    s.read("decline_days", sc.decline_days);
    s.read("ownership_population_corr", sc.ownership_population_corr);
    s.read("population_log_sd", sc.population_log_sd);
    s.read("placebo_covariate", sc.placebo_covariate);
    try {
      sc.validate();
    } catch (const Error& e) {
      config_error(fmt::format("[synth]: {}", e.what()));
    }
    cfg.synth = sc;
  }

  const auto run = section("run");
  if (auto models = run.raw("models")) {
    if (*models == "both") {
      cfg.spec.models = {backtest::ModelKind::LinReg, backtest::ModelKind::Arimax};
    } else if (*models == "linreg" || *models == "arimax") {
      cfg.spec.models = {backtest::parse_model(*models)};
    } else {
      run.bad("models", *models, "one of linreg, arimax, both");
    }
  }
  if (auto horizons = run.list("horizons"); !horizons.empty()) {
    cfg.spec.horizons.clear();
    for (const auto& h : horizons) {
      const int v = run.convert<int>("horizons", h);
      if (v != 1 && v != 7) run.bad("horizons", h, "1 or 7");
      if (std::find(cfg.spec.horizons.begin(), cfg.spec.horizons.end(), v) ==
          cfg.spec.horizons.end()) {
        cfg.spec.horizons.push_back(v);
      }
    }
    std::sort(cfg.spec.horizons.begin(), cfg.spec.horizons.end());
  }
  if (auto target = run.raw("target")) {
    if (*target == "incident") {
      cfg.spec.target = backtest::TargetKind::Incident;
    } else if (*target == "cumulative") {
      cfg.spec.target = backtest::TargetKind::Cumulative;
    } else {
      run.bad("target", *target, "incident or cumulative");
    }
  }
  if (auto v = run.raw("schedule_start")) cfg.schedule_start = run.convert<DateIndex>("schedule_start", *v);
  if (auto v = run.raw("schedule_end")) cfg.schedule_end = run.convert<DateIndex>("schedule_end", *v);
  run.read("schedule_step", cfg.schedule_step);
  if (cfg.schedule_step < 1) config_error("run.schedule_step must be positive");
  cfg.output_dir = resolve(base_dir, run.raw("output_dir").value_or("out"));
  run.read("workers", cfg.workers);
  if (cfg.workers < 1) config_error("run.workers must be positive");
  run.read("seed", cfg.seed);
  run.read("min_obs", cfg.mape_min_obs);
  if (cfg.mape_min_obs < 1) config_error("run.min_obs must be positive");

  const auto lin = section("linreg");
  lin.read("window_days", cfg.spec.linreg.window_days);
  lin.read("shift_days", cfg.spec.linreg.shift_days);
  lin.read("include_intercept", cfg.spec.linreg.include_intercept);
  lin.read("min_cumulative", cfg.spec.linreg.min_cumulative);
  lin.read("freeze_mobility", cfg.spec.linreg.freeze_mobility);
  lin.read("max_condition", cfg.spec.linreg.max_condition);
  if (auto bands = lin.list("lags"); !bands.empty()) {
    // "1-7, 8-14, 15-21"
    cfg.spec.lags.bands.clear();
    for (const auto& b : bands) {
      const auto dash = b.find('-');
      if (dash == std::string::npos) lin.bad("lags", b, "a from-to band");
      cfg.spec.lags.bands.push_back({lin.convert<int>("lags", b.substr(0, dash)),
                                     lin.convert<int>("lags", b.substr(dash + 1))});
    }
  }
  try {
    cfg.spec.lags.validate();
  } catch (const Error& e) {
    config_error(fmt::format("linreg.lags: {}", e.what()));
  }

  const auto ar = section("arimax");
  ar.read("window_days", cfg.spec.arimax.window_days);
  ar.read("exog_lag_days", cfg.spec.arimax.exog_lag_days);
  ar.read("p_max", cfg.spec.arimax.p_max);
  ar.read("d_max", cfg.spec.arimax.d_max);
  ar.read("q_max", cfg.spec.arimax.q_max);
  ar.read("include_intercept_when_d0", cfg.spec.arimax.include_intercept_when_d0);
  ar.read("objective_tol", cfg.spec.arimax.objective_tol);
  ar.read("max_iterations", cfg.spec.arimax.max_iterations);
  ar.read("on_cumulative", cfg.spec.arimax_on_cumulative);
  ar.read("use_exog", cfg.spec.arimax_use_exog);
  try {
    cfg.spec.arimax.validate();
  } catch (const Error& e) {
    config_error(fmt::format("[arimax]: {}", e.what()));
  }

  const auto audit = section("audit");
  audit.read("min_n", cfg.audit.min_n);
  if (cfg.audit.min_n < 3) config_error("audit.min_n must be at least 3");
  audit.read("permutation", cfg.audit.permutation);
  audit.read("n_permutations", cfg.audit.n_permutations);
  if (cfg.audit.n_permutations < 1) config_error("audit.n_permutations must be positive");
  cfg.audit.seed = cfg.seed;
  cfg.covariates = audit.list("covariates");
  if (auto v = audit.raw("mape")) cfg.mape_path = resolve(base_dir, *v);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, fmt::format("cannot read config {}", path.string()));
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path());
}

}  // namespace mobfair

#include "mobfair/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "csv.hpp"
#include "mobfair/error.hpp"
#include "mobfair/ingest.hpp"

namespace mobfair::synth {

namespace {

enum class Purpose : std::uint32_t { Covariates = 1, Mobility = 2, Epidemic = 3, Observation = 4 };

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Independent stream per (seed, unit, purpose).
std::mt19937_64 stream(std::uint64_t seed, const UnitId& unit, Purpose purpose) {
  const std::uint64_t h = fnv1a(unit.value);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

UnitId unit_name(int i) { return UnitId{fmt::format("U{:04d}", i + 1)}; }

// Monday = 0 .. Sunday = 6.
int weekday(DateIndex d) { return ((d.epoch_day + 3) % 7 + 7) % 7; }

constexpr double kTripsPerResident = 2.0;

}  // namespace

void SynthConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); };
  if (n_units < 30) fail(fmt::format("n_units must be at least 30, got {}", n_units));
  if (baseline_days < 1) fail("baseline_days must be positive");
  if (n_days <= baseline_days + 28) {
    fail(fmt::format("n_days must exceed baseline_days + 28, got {}", n_days));
  }
  if (epidemic_start < 21 || epidemic_start >= n_days) {
    fail(fmt::format("epidemic_start must lie in [21, n_days), got {}", epidemic_start));
  }
  if (growth_noise_sd < 0.0 || bias_strength < 0.0 || sigma_max <= 0.0) {
    fail("noise parameters must be non-negative");
  }
  if (reference_population <= 0.0 || initial_case_rate <= 0.0) {
    fail("reference_population and initial_case_rate must be positive");
  }
  if (trough_level <= 0.0 || recovery_level <= 0.0 || decline_days < 1) {
    fail("mobility template levels must be positive");
  }
  if (std::abs(ownership_population_corr) >= 1.0) {
    fail("ownership_population_corr must lie in (-1, 1)");
  }
}

double sampling_sd(const SynthConfig& cfg, double ownership, double population) {
  const double effective = ownership * population / cfg.reference_population;
  return std::min(cfg.sigma_max, cfg.bias_strength / std::sqrt(effective));
}

std::vector<DemographicRecord> gen_covariates(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<DemographicRecord> out;
  out.reserve(cfg.n_units);
  const double r = cfg.ownership_population_corr;
  const double r_comp = std::sqrt(1.0 - r * r);
  std::normal_distribution<double> normal;
  for (int i = 0; i < cfg.n_units; ++i) {
    DemographicRecord rec;
    rec.unit = unit_name(i);
    auto rng = stream(cfg.seed, rec.unit, Purpose::Covariates);
    const double z_pop = normal(rng);
    const double z_own = r * z_pop + r_comp * normal(rng);
    rec.population = std::round(std::exp(cfg.population_log_mean + cfg.population_log_sd * z_pop));
    rec.population = std::max(rec.population, 100.0);
    rec.smartphone_pct = std::clamp(0.80 + 0.07 * z_own, 0.40, 0.98);
    rec.income = std::round(55000.0 * std::exp(0.25 * (0.85 * z_own + 0.53 * normal(rng))));
    rec.education_pct = std::clamp(0.30 + 0.08 * (0.85 * z_own + 0.53 * normal(rng)), 0.05, 0.80);
    rec.median_age = 41.0 - 4.0 * (0.8 * z_own + 0.6 * normal(rng));
    const double placebo = normal(rng);
    if (cfg.placebo_covariate) rec.extra["placebo"] = placebo;
    out.push_back(std::move(rec));
  }
  // NCHS: six bins of population rank, the most populous unit in bin 1.
  std::vector<std::size_t> order(out.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return out[a].population > out[b].population;
  });
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    out[order[rank]].nchs = 1 + static_cast<int>(rank * 6 / order.size());
  }
  return out;
}

std::vector<double> gen_true_mobility(const SynthConfig& cfg, const UnitId& unit) {
  auto rng = stream(cfg.seed, unit, Purpose::Mobility);
  std::normal_distribution<double> normal;
  // Level draws truncated at 1.5 sd; the upper tail overflows int64 counts by day 300.
  auto z = [&] { return std::clamp(normal(rng), -1.5, 1.5); };
  const double trough = cfg.trough_level * std::exp(0.15 * z());
  const double recovery = cfg.recovery_level * std::exp(0.15 * z());
  const double weekend = 0.85 + 0.05 * normal(rng);
  const int b = cfg.baseline_days;
  const int hold_end = b + cfg.decline_days + 21;

  std::vector<double> m(cfg.n_days);
  double ar = 0.0;
  for (int t = 0; t < cfg.n_days; ++t) {
    double level = 1.0;
    if (t >= b && t < b + cfg.decline_days) {
      level = std::pow(trough, static_cast<double>(t - b + 1) / cfg.decline_days);
    } else if (t >= b + cfg.decline_days) {
      const double frac = std::clamp((t - hold_end) / 90.0, 0.0, 1.0);
      level = trough * std::pow(recovery / trough, frac);
    }
    if (weekday(cfg.start + t) >= 5) level *= weekend;
    ar = 0.93 * ar + 0.03 * normal(rng);
    m[t] = level * std::exp(ar);
  }
  const double base = std::accumulate(m.begin(), m.begin() + b, 0.0) / b;
  for (double& v : m) v /= base;
  return m;
}

EpidemicSeries gen_epidemic(const SynthConfig& cfg, std::span<const double> true_change,
                            const UnitId& unit, double population) {
  if (std::cmp_less(true_change.size(), cfg.n_days) || cfg.epidemic_start < 21) {
    throw Error(ErrorCode::InsufficientHistory, "mobility too short for 21-day lags");
  }
  auto rng = stream(cfg.seed, unit, Purpose::Epidemic);
  std::normal_distribution<double> normal;
  const double i0 = std::max(1.0, std::round(population * cfg.initial_case_rate));

  EpidemicSeries out;
  out.exact.resize(cfg.n_days);
  out.cases.unit = unit;
  out.cases.first = cfg.start;
  out.cases.cumulative.resize(cfg.n_days);
  double log_i = std::log(i0);
  for (int t = 0; t < cfg.n_days; ++t) {
    const double eta = cfg.growth_noise_sd * normal(rng);
    if (t >= cfg.epidemic_start) {
      double growth = 0.0;
      for (int k = 0; k < 3; ++k) {
        growth += cfg.true_betas[k] * lag_window_average(true_change, t, 7 * k + 1, 7 * k + 7);
      }
      log_i += growth + eta;
    }
    out.exact[t] = std::exp(log_i);
    if (!(out.exact[t] < 4e18)) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("cumulative count for {} overflows on day {}", unit.value, t));
    }
    auto rounded = std::llround(out.exact[t]);
    if (t > 0) rounded = std::max<std::int64_t>(rounded, out.cases.cumulative[t - 1]);
    out.cases.cumulative[t] = rounded;
  }
  return out;
}

std::vector<double> observe_mobility(const SynthConfig& cfg, std::span<const double> true_change,
                                     double sigma, const UnitId& unit) {
  auto rng = stream(cfg.seed, unit, Purpose::Observation);
  std::normal_distribution<double> normal;
  std::vector<double> out(true_change.size());
  for (std::size_t t = 0; t < true_change.size(); ++t) {
    const double e = sigma * normal(rng);
    out[t] = true_change[t] * std::max(0.05, 1.0 + e);
  }
  return out;
}

PanelDataset SynthDataset::panel() const { return build_panel(cases, mobility, demographics); }

SynthDataset generate(const SynthConfig& cfg) {
  cfg.validate();
  SynthDataset data;
  data.truth.seed = cfg.seed;
  data.truth.true_betas = cfg.true_betas;
  for (auto& rec : gen_covariates(cfg)) {
    UnitTruth truth;
    truth.unit = rec.unit;
    truth.ownership = rec.smartphone_pct;
    truth.population = rec.population;
    truth.sigma = sampling_sd(cfg, rec.smartphone_pct, rec.population);
    truth.true_change = gen_true_mobility(cfg, rec.unit);
    auto epi = gen_epidemic(cfg, truth.true_change, rec.unit, rec.population);
    truth.exact_cumulative = std::move(epi.exact);
    truth.observed = observe_mobility(cfg, truth.true_change, truth.sigma, rec.unit);

    MobilitySeries mob;
    mob.unit = rec.unit;
    mob.first = cfg.start;
    mob.trips.resize(truth.observed.size());
    const double volume = kTripsPerResident * rec.population;
    std::transform(truth.observed.begin(), truth.observed.end(), mob.trips.begin(),
                   [&](double v) { return volume * v; });
    mob = normalized(std::move(mob), cfg.baseline());

    data.cases.emplace(rec.unit, std::move(epi.cases));
    data.mobility.emplace(rec.unit, std::move(mob));
    data.demographics.emplace(rec.unit, std::move(rec));
    data.truth.units.push_back(std::move(truth));
  }
  return data;
}

void write_dataset(const SynthDataset& data, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::IoFailure,
                fmt::format("cannot create directory {}: {}", dir.string(), ec.message()));
  }
  ingest::write_cases(dir / "cases.csv", data.cases);
  ingest::write_mobility_aggregated(dir / "mobility.csv", data.mobility);
  ingest::write_demographics(dir / "demographics.csv", data.demographics);

  nlohmann::json truth;
  truth["seed"] = data.truth.seed;
  truth["true_betas"] = data.truth.true_betas;
  auto& units = truth["units"] = nlohmann::json::array();
  for (const auto& u : data.truth.units) {
    units.push_back({{"unit_id", u.unit.value},
                     {"sigma", u.sigma},
                     {"ownership", u.ownership},
                     {"population", u.population}});
  }
  auto out = csv::open_for_write(dir / "truth.json");
  out << truth.dump(2) << '\n';
  csv::finish(out, dir / "truth.json");
}

}  // namespace mobfair::synth

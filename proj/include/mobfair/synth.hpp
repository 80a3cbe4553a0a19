#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "mobfair/panel.hpp"

namespace mobfair::synth {

struct SynthConfig {
  int n_units = 200;
  int n_days = 300;
  int baseline_days = 29;
  std::uint64_t seed = 0;
  DateIndex start = parse_date("2020-02-01");

  std::array<double, 3> true_betas{0.3, 0.2, 0.1};
  double growth_noise_sd = 0.02;
  /// Day offset at which growth switches on; earlier days stay at I0.
  int epidemic_start = 180;
  /// I0 = max(1, round(population * initial_case_rate)).
  double initial_case_rate = 1e-4;

  /// kappa: sampling-noise scale of observed mobility.
  double bias_strength = 0.5;
  double sigma_max = 0.5;
  double reference_population = 5000.0;

  /// Mobility template: level reached after the post-baseline decline and the
  /// level it recovers to by the end of the series.
  double trough_level = 0.30;
  double recovery_level = 0.35;
  int decline_days = 14;

  double population_log_mean = 10.819778284410283;  // ln 50000
  double population_log_sd = 1.0;
  /// Correlation between the population and ownership latent factors.
  double ownership_population_corr = 0.97;

  /// Adds an independent `placebo` column to the demographics.
  bool placebo_covariate = false;

  /// Throws InvalidArgument when the configuration cannot be generated.
  void validate() const;

  [[nodiscard]] DateRange date_span() const { return {start, start + n_days - 1}; }
  [[nodiscard]] DateRange baseline() const { return {start, start + baseline_days - 1}; }
};

/// Observation-noise sd for one unit, min(sigma_max, kappa / sqrt(own*pop/ref)).
double sampling_sd(const SynthConfig& cfg, double ownership, double population);

/// Deterministic covariates, ordered by unit id.
std::vector<DemographicRecord> gen_covariates(const SynthConfig& cfg);

/// True mobility change for one unit; baseline-window mean is exactly 1.
std::vector<double> gen_true_mobility(const SynthConfig& cfg, const UnitId& unit);

struct EpidemicSeries {
  std::vector<double> exact;  // pre-rounding cumulative
  CaseSeries cases;
};

/// Cumulative cases driven by the distributed-lag growth law on `true_change`.
EpidemicSeries gen_epidemic(const SynthConfig& cfg, std::span<const double> true_change,
                            const UnitId& unit, double population);

/// true * max(0.05, 1 + e), e ~ N(0, sigma).
std::vector<double> observe_mobility(const SynthConfig& cfg, std::span<const double> true_change,
                                     double sigma, const UnitId& unit);

struct UnitTruth {
  UnitId unit;
  double sigma = 0.0;
  double ownership = 0.0;
  double population = 0.0;
  std::vector<double> true_change;
  std::vector<double> observed;  // before baseline renormalization
  std::vector<double> exact_cumulative;
};

struct SynthTruth {
  std::uint64_t seed = 0;
  std::array<double, 3> true_betas{};
  std::vector<UnitTruth> units;
};

struct SynthDataset {
  std::map<UnitId, CaseSeries> cases;
  std::map<UnitId, MobilitySeries> mobility;  // normalized over the baseline
  std::map<UnitId, DemographicRecord> demographics;
  SynthTruth truth;

  [[nodiscard]] PanelDataset panel() const;
};

SynthDataset generate(const SynthConfig& cfg);

/// cases.csv, mobility.csv, demographics.csv and truth.json under `dir`.
void write_dataset(const SynthDataset& data, const std::filesystem::path& dir);

}  // namespace mobfair::synth

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "objconf/conformal.hpp"
#include "objconf/dataset.hpp"
#include "objconf/rng.hpp"
#include "objconf/single_index.hpp"

namespace objconf {

enum class Setting {
  S1, S2, S3, S4, S5, S6, S7, S8, S9,
  FigSpider,
  FigSphereBimodal,
  FigWasserstein,
  Fig2dMixture,
};

/// "1".."9", "fig-spider", "fig-sphere-bimodal", "fig-wass", "fig-2d-mixture".
Setting parse_setting(const std::string& id);
std::string to_string(Setting setting);

struct GeneratorSpec {
  Setting setting = Setting::S1;
  std::size_t n = 500;
  std::uint64_t seed = 0;
};

/// Draws n pairs from the setting's law. Identical specs give identical data.
Dataset generate(const GeneratorSpec& spec);

/// One response of the setting at index value t (the covariate for scalar
/// settings, the first covariate for Settings 6-9; ignored by the
/// covariate-free illustrations).
ObjectPoint sample_response(Setting setting, double t, Rng& rng);

/// f(x) = (x - 1)^2 (x + 1).
double regression_curve(double x);
/// g(x) = 2 sqrt(x) 1{x >= 0}.
double branch_offset(double x);
/// Direction theta_0 for Settings 6-9.
std::optional<std::vector<double>> true_index(Setting setting);
bool is_multivariate(Setting setting);

/// Default candidate grid for a dataset of the setting: padded data range on
/// R and R^2, the theta/phi mesh on S^2, a truncated-normal family on W.
std::optional<CandidateGrid> default_candidates(const Dataset& data, std::size_t resolution);

struct PipelineConfig {
  FitOptions fit;
  CoverageOptions coverage;
  std::size_t n_test = 2000;
  std::size_t grid_resolution = 200;
  ThetaSearchOptions theta;
  /// Settings 6-9: estimate theta on the full sample instead of the training
  /// half for the MSE column (the conformal model always uses the training half).
  bool theta_on_full_sample = false;
};

struct RunResult {
  std::size_t run = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double marginal_coverage = 0.0;
  std::optional<double> mean_size;
  std::vector<std::optional<double>> bin_coverage;
  std::vector<std::optional<double>> bin_size;
  std::optional<double> theta_mse;
};

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t count = 0;
};

Summary summarize(const std::vector<double>& values);

struct MonteCarloReport {
  GeneratorSpec spec;
  std::size_t n_runs = 0;
  std::size_t failures = 0;
  std::vector<double> bin_centers;
  std::vector<RunResult> runs;

  Summary coverage() const;
  Summary size() const;
  Summary theta_mse() const;
  /// Mean over successful runs of each bin's coverage (runs with an empty
  /// bin do not contribute to it).
  std::vector<std::optional<double>> bin_coverage() const;
  std::vector<std::optional<double>> bin_size() const;
};

/// Independent seeded runs of generate + split_fit + evaluate_coverage (and
/// theta estimation for multivariate settings). Run r uses child seeds of
/// spec.seed, so results do not depend on threading. Failed runs are
/// recorded, not thrown.
MonteCarloReport run_monte_carlo(const GeneratorSpec& spec, const PipelineConfig& config,
                                 std::size_t n_runs);

struct SweepRow {
  double bandwidth = 0.0;
  MonteCarloReport report;
};

std::vector<SweepRow> bandwidth_sweep(const GeneratorSpec& spec,
                                      const std::vector<double>& bandwidths,
                                      const PipelineConfig& config, std::size_t n_runs);

/// n log-spaced values from lo to hi inclusive.
std::vector<double> log_spaced(double lo, double hi, std::size_t n);

} // namespace objconf

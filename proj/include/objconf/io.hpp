#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "objconf/conformal.hpp"
#include "objconf/dataset.hpp"
#include "objconf/error.hpp"
#include "objconf/simulate.hpp"
#include "objconf/single_index.hpp"

namespace objconf::io {

using nlohmann::json;

/// Errors in file contents; messages cite row and column where possible.
class FormatError : public Error {
public:
  using Error::Error;
};

// Space descriptor: {"kind": "euclidean", "k": 2} | {"kind": "sphere2"} |
// {"kind": "wasserstein1d", "m": 100, "support": [0, 1]} |
// {"kind": "network", "k": 13} | {"kind": "spider3"}.
json space_to_json(const MetricSpace& space);
MetricSpace space_from_json(const json& j);

// Dataset file: CSV with a JSON header line
//   #objconf {"space": {...}, "d": 1, "columns": ["x1", "y1", ...]}
//   x1,y1,...
//   0.25,1.03
// Each row holds d covariates followed by the space's flat encoding.
// Files without the header line need an explicit space; d is inferred from
// the row width.
void write_dataset(std::ostream& out, const Dataset& data);
void save_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset(std::istream& in, const MetricSpace* fallback_space = nullptr);
Dataset load_dataset(const std::filesystem::path& path, const MetricSpace* fallback_space = nullptr);

std::vector<std::string> column_names(const MetricSpace& space, std::size_t dim);

json model_to_json(const ConformalModel& model);
ConformalModel model_from_json(const json& j);

json theta_fit_to_json(const ThetaFit& fit);

/// One row per candidate: coordinates, score, member.
void write_prediction_set(std::ostream& out, const MetricSpace& space, const PredictionSet& set);

/// bin_center,coverage,mean_size,n_in_bin (empty fields for missing values).
void write_coverage_csv(std::ostream& out, const CoverageReport& report);
json coverage_to_json(const CoverageReport& report);

/// Per-run rows plus aggregate JSON.
void write_report_csv(std::ostream& out, const MonteCarloReport& report);
json report_to_json(const MonteCarloReport& report);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

} // namespace objconf::io

#include "objconf/cli.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "objconf/io.hpp"
#include "objconf/simulate.hpp"
#include "objconf/single_index.hpp"

namespace objconf::cli {

namespace {

using io::json;

struct UsageError : Error {
  using Error::Error;
};

double to_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
    throw UsageError("invalid " + what + " '" + s + "'");
  }
  return v;
}

std::vector<double> to_doubles(const std::string& list, const std::string& what) {
  std::vector<double> out;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(to_double(item, what));
  if (out.empty()) throw UsageError("empty " + what);
  return out;
}

// "euclidean:2", "sphere2", "wasserstein1d:100", "network:13", "spider3", or
// a JSON descriptor.
MetricSpace parse_space(const std::string& text) {
  if (!text.empty() && text.front() == '{') {
    try {
      return io::space_from_json(json::parse(text));
    } catch (const json::exception& e) {
      throw UsageError(std::string("bad --space JSON: ") + e.what());
    }
  }
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  const auto count = [&](std::size_t fallback) {
    if (arg.empty()) return fallback;
    const double v = to_double(arg, "space parameter");
    if (!(v >= 1.0) || v != static_cast<double>(static_cast<std::size_t>(v))) {
      throw UsageError("space parameter must be a positive integer");
    }
    return static_cast<std::size_t>(v);
  };
  if (kind == "euclidean") return MetricSpace::euclidean(count(1));
  if (kind == "sphere2") return MetricSpace::sphere2();
  if (kind == "wasserstein1d") return MetricSpace::wasserstein1d(count(100));
  if (kind == "network") return MetricSpace::network(count(0));
  if (kind == "spider3") return MetricSpace::spider3();
  throw UsageError("unknown space '" + text + "'");
}

struct FitFlags {
  std::string kernel = "epanechnikov";
  std::string bandwidth = "auto";
  std::size_t tgrid = 101;
  double alpha = 0.1;
  std::uint64_t seed = 0;
  std::string split_ratio = "1:1";
  std::string score = "cps";

  void add(CLI::App& app) {
    app.add_option("--kernel", kernel, "Kernel: epanechnikov, triangular, quartic")->capture_default_str();
    app.add_option("--bandwidth", bandwidth, "Bandwidth or 'auto' (rule of thumb)")->capture_default_str();
    app.add_option("--tgrid", tgrid, "Number of t-grid nodes")->check(CLI::Range(2, 100000))->capture_default_str();
    app.add_option("--alpha", alpha, "Miscoverage level")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    app.add_option("--seed", seed, "Root seed")->capture_default_str();
    app.add_option("--split-ratio", split_ratio, "Training:calibration ratio")->capture_default_str();
    app.add_option("--score", score, "Conformity score: cps or rank")->capture_default_str();
  }

  FitOptions options() const {
    FitOptions o;
    try {
      o.kernel = parse_kernel(kernel);
      o.score = parse_score(score);
      o.train_fraction = parse_split_ratio(split_ratio);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    if (bandwidth != "auto") {
      const double h = to_double(bandwidth, "bandwidth");
      if (!(h > 0.0)) throw UsageError("bandwidth must be positive");
      o.bandwidth = h;
    }
    if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
    o.tgrid_size = tgrid;
    o.alpha = alpha;
    o.seed = seed;
    return o;
  }
};

struct IndexFlags {
  std::size_t bins = 0;
  std::size_t restarts = 8;
  std::size_t iterations = 200;

  void add(CLI::App& app) {
    app.add_option("--index-bins", bins, "Bins for the index objective (0 = floor(n^0.3))")->capture_default_str();
    app.add_option("--restarts", restarts, "Nelder-Mead restarts")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--iterations", iterations, "Nelder-Mead iterations per restart")->check(CLI::PositiveNumber)->capture_default_str();
  }

  ThetaSearchOptions options(const FitOptions& fit) const {
    ThetaSearchOptions o;
    o.bins = bins;
    o.restarts = restarts;
    o.max_iterations = iterations;
    o.seed = fit.seed;
    o.kernel = fit.kernel;
    return o;
  }
};

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    io::write_text(path, text);
  }
}

Dataset load(const std::string& path, const std::string& space) {
  if (space.empty()) return io::load_dataset(path);
  const MetricSpace s = parse_space(space);
  return io::load_dataset(path, &s);
}

ConformalModel load_model(const std::string& path) {
  json j;
  try {
    j = json::parse(io::read_text(path));
  } catch (const json::exception& e) {
    throw io::FormatError("model '" + path + "' is not JSON: " + e.what());
  }
  return io::model_from_json(j);
}

// Candidate set: a resolution (grid over the training objects' range) or a
// CSV file of object encodings.
CandidateGrid make_candidates(const ConformalModel& model, const std::string& spec,
                              const std::string& range) {
  const ProfileEstimator& est = model.table->estimator();
  double resolution = 0.0;
  const auto r = std::from_chars(spec.data(), spec.data() + spec.size(), resolution);
  if (r.ec != std::errc{} || r.ptr != spec.data() + spec.size()) {
    std::ifstream in(spec);
    if (!in) throw UsageError("--candidates is neither a count nor a readable file: " + spec);
    std::vector<ObjectPoint> points;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
      if (line.empty() || line.front() == '#') continue;
      std::vector<double> values;
      std::stringstream cells(line);
      std::string cell;
      bool numeric = true;
      while (std::getline(cells, cell, ',')) {
        double v = 0.0;
        const auto rc = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (rc.ec != std::errc{}) {
          numeric = false;
          break;
        }
        values.push_back(v);
      }
      if (!numeric) continue;
      try {
        ObjectPoint p = est.space().decode(values);
        est.space().validate(p);
        points.push_back(std::move(p));
      } catch (const Error& e) {
        throw io::FormatError("candidate row " + std::to_string(row) + ": " + e.what());
      }
      ++row;
    }
    return CandidateGrid::from_points(std::move(points));
  }
  if (!(resolution >= 1.0)) throw UsageError("--candidates count must be positive");
  const auto count = static_cast<std::size_t>(resolution);
  if (!range.empty()) {
    const auto bounds = to_doubles(range, "--range");
    if (bounds.size() % 2 != 0) throw UsageError("--range needs lo,hi pairs");
    GridBounds g;
    for (std::size_t i = 0; i < bounds.size(); i += 2) g.ranges.emplace_back(bounds[i], bounds[i + 1]);
    return candidate_grid(est.space(), count, g);
  }
  Dataset training;
  training.space = est.space();
  training.dim = 1;
  training.covariates = est.covariates();
  training.objects = est.objects();
  auto grid = default_candidates(training, count);
  if (!grid) throw UsageError("space " + est.space().name() + " needs a candidate file");
  return std::move(*grid);
}

int run_fit(const std::string& data, const std::string& space, const FitFlags& flags,
            const std::string& out_path, std::ostream& out) {
  const FitOptions options = flags.options();
  Dataset d = load(data, space);
  if (d.dim != 1) throw UsageError("fit needs one covariate column; use single-index");
  const ConformalModel model = split_fit(d, options);
  emit(out_path, io::model_to_json(model).dump() + "\n", out);
  return 0;
}

} // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conformal prediction sets for object-valued responses", "objconf"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // fit
  auto* fit = app.add_subcommand("fit", "Fit a split-conformal model");
  std::string data, space, out_path, test, model_path, candidates = "200", range, setting = "1",
                                                             x_text, dump, bandwidths, json_path;
  FitFlags flags;
  IndexFlags index;
  fit->add_option("--data", data, "Dataset file")->required();
  fit->add_option("--space", space, "Object space (used when the file has no header)");
  fit->add_option("--out", out_path, "Model artifact path (default stdout)");
  flags.add(*fit);

  // predict
  auto* predict = app.add_subcommand("predict", "Prediction set at a covariate value");
  double alpha_override = 0.1;
  predict->add_option("--model", model_path, "Model artifact")->required();
  predict->add_option("--x", x_text, "Covariate value (comma-separated for single-index models)")->required();
  predict->add_option("--candidates", candidates, "Grid resolution or candidate CSV file")->capture_default_str();
  predict->add_option("--range", range, "Candidate bounds lo,hi[,lo,hi...]");
  predict->add_option("--alpha", alpha_override, "Recalibrate to this level")->check(CLI::Range(0.0, 1.0));
  predict->add_option("--out", out_path, "Prediction set CSV (default stdout)");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Coverage of a model on a test set");
  std::size_t bins = 20, sets_per_bin = 0;
  std::string test_space;
  evaluate->add_option("--model", model_path, "Model artifact")->required();
  evaluate->add_option("--test", test, "Test dataset file")->required();
  evaluate->add_option("--space", test_space, "Object space (used when the file has no header)");
  evaluate->add_option("--bins", bins, "Covariate bins")->check(CLI::PositiveNumber)->capture_default_str();
  evaluate->add_option("--candidates", candidates, "Grid resolution or candidate CSV file for set sizes")->capture_default_str();
  evaluate->add_option("--sets-per-bin", sets_per_bin, "Prediction sets per bin for the size column")->capture_default_str();
  evaluate->add_option("--out", out_path, "Coverage CSV path (default: JSON on stdout)");
  evaluate->add_option("--json", json_path, "Coverage JSON summary path");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo coverage study for a setting");
  std::size_t n = 500, runs = 10, n_test = 2000, sim_sets = 0, resolution = 200;
  FitFlags sim_flags;
  IndexFlags sim_index;
  simulate->add_option("--setting", setting, "1..9, fig-spider, fig-sphere-bimodal, fig-wass, fig-2d-mixture")->capture_default_str();
  simulate->add_option("--n", n, "Sample size")->check(CLI::Range(4, 100000000))->capture_default_str();
  simulate->add_option("--runs", runs, "Monte Carlo runs")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--n-test", n_test, "Test sample size per run")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--bins", bins, "Covariate bins")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--candidates", resolution, "Candidate grid resolution for set sizes")->capture_default_str();
  simulate->add_option("--sets-per-bin", sim_sets, "Prediction sets per bin for the size column")->capture_default_str();
  simulate->add_option("--dump", dump, "Write one generated dataset here instead of running");
  simulate->add_option("--out", out_path, "Output directory (report.json, runs.csv, bins.csv); default JSON on stdout");
  sim_flags.add(*simulate);
  sim_index.add(*simulate);

  // sweep-bandwidth
  auto* sweep = app.add_subcommand("sweep-bandwidth", "Coverage and set size over a bandwidth grid");
  std::size_t h_count = 6;
  double h_min = 0.05, h_max = 0.8;
  FitFlags sweep_flags;
  std::size_t sweep_sets = 1;
  sweep->add_option("--setting", setting, "Setting id")->capture_default_str();
  sweep->add_option("--n", n, "Sample size")->check(CLI::Range(4, 100000000))->capture_default_str();
  sweep->add_option("--runs", runs, "Monte Carlo runs per bandwidth")->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--n-test", n_test, "Test sample size per run")->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--bins", bins, "Covariate bins")->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--candidates", resolution, "Candidate grid resolution")->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--sets-per-bin", sweep_sets, "Prediction sets per bin")->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--bandwidths", bandwidths, "Comma-separated bandwidths (overrides --h-*)");
  sweep->add_option("--h-min", h_min, "Smallest bandwidth")->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--h-max", h_max, "Largest bandwidth")->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--h-count", h_count, "Log-spaced bandwidth count")->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--out", out_path, "Sweep CSV (default stdout)");
  sweep_flags.add(*sweep);

  // single-index
  auto* single = app.add_subcommand("single-index", "Estimate the index direction and fit on the projection");
  std::string theta_out;
  single->add_option("--data", data, "Dataset file with d >= 2 covariates")->required();
  single->add_option("--space", space, "Object space (used when the file has no header)");
  single->add_option("--out", out_path, "Model artifact path");
  single->add_option("--theta-out", theta_out, "Index fit JSON path (default stdout)");
  flags.add(*single);
  index.add(*single);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << json{{"error", e.what()}, {"kind", "usage"}}.dump() << '\n';
    return 2;
  }

  try {
    if (fit->parsed()) return run_fit(data, space, flags, out_path, out);

    if (predict->parsed()) {
      ConformalModel model = load_model(model_path);
      if (predict->count("--alpha") > 0) model = with_alpha(model, alpha_override);
      const double x = model.reduce_covariate(to_doubles(x_text, "--x"));
      const CandidateGrid grid = make_candidates(model, candidates, range);
      const PredictionSet set = predict_set(model, x, grid);
      std::ostringstream s;
      io::write_prediction_set(s, model.table->estimator().space(), set);
      emit(out_path, s.str(), out);
      return 0;
    }

    if (evaluate->parsed()) {
      const ConformalModel model = load_model(model_path);
      const Dataset t = load(test, test_space);
      if (!(t.space == model.table->estimator().space())) {
        throw UsageError("test set space differs from the model space");
      }
      CoverageOptions opts;
      opts.n_bins = bins;
      opts.sets_per_bin = sets_per_bin;
      std::optional<CandidateGrid> grid;
      if (sets_per_bin > 0) grid = make_candidates(model, candidates, "");
      const CoverageReport report = evaluate_coverage(model, t, grid ? &*grid : nullptr, opts);
      const std::string summary = io::coverage_to_json(report).dump(2) + "\n";
      if (!json_path.empty()) io::write_text(json_path, summary);
      if (out_path.empty()) {
        out << summary;
      } else {
        std::ostringstream s;
        io::write_coverage_csv(s, report);
        emit(out_path, s.str(), out);
      }
      return 0;
    }

    if (simulate->parsed()) {
      GeneratorSpec spec;
      try {
        spec.setting = parse_setting(setting);
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      spec.n = n;
      spec.seed = sim_flags.seed;
      if (!dump.empty()) {
        io::save_dataset(dump, generate(spec));
        return 0;
      }
      PipelineConfig config;
      config.fit = sim_flags.options();
      config.theta = sim_index.options(config.fit);
      config.coverage.n_bins = bins;
      config.coverage.sets_per_bin = sim_sets;
      config.n_test = n_test;
      config.grid_resolution = resolution;
      const MonteCarloReport report = run_monte_carlo(spec, config, runs);
      const std::string summary = io::report_to_json(report).dump(2) + "\n";
      if (out_path.empty()) {
        out << summary;
      } else {
        const std::filesystem::path dir(out_path);
        io::write_text(dir / "report.json", summary);
        std::ostringstream rows;
        io::write_report_csv(rows, report);
        io::write_text(dir / "runs.csv", rows.str());
        std::ostringstream b;
        b << "bin_center,coverage,mean_size\n";
        const auto cov = report.bin_coverage();
        const auto size = report.bin_size();
        for (std::size_t i = 0; i < report.bin_centers.size(); ++i) {
          b << report.bin_centers[i] << ',';
          if (cov[i]) b << *cov[i];
          b << ',';
          if (size[i]) b << *size[i];
          b << '\n';
        }
        io::write_text(dir / "bins.csv", b.str());
      }
      return 0;
    }

    if (sweep->parsed()) {
      GeneratorSpec spec;
      try {
        spec.setting = parse_setting(setting);
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      spec.n = n;
      spec.seed = sweep_flags.seed;
      const std::vector<double> hs =
          bandwidths.empty() ? log_spaced(h_min, h_max, h_count) : to_doubles(bandwidths, "--bandwidths");
      for (double h : hs)
        if (!(h > 0.0)) throw UsageError("bandwidths must be positive");
      PipelineConfig config;
      config.fit = sweep_flags.options();
      config.coverage.n_bins = bins;
      config.coverage.sets_per_bin = sweep_sets;
      config.n_test = n_test;
      config.grid_resolution = resolution;
      const auto rows = bandwidth_sweep(spec, hs, config, runs);
      std::ostringstream s;
      io::write_sweep_csv(s, rows);
      emit(out_path, s.str(), out);
      return 0;
    }

    if (single->parsed()) {
      const FitOptions options = flags.options();
      const Dataset d = load(data, space);
      if (d.dim < 2) throw UsageError("single-index needs at least two covariates");
      const SingleIndexModel fitted = single_index_fit(d, options, index.options(options));
      if (!out_path.empty()) io::write_text(out_path, io::model_to_json(fitted.model).dump() + "\n");
      emit(theta_out, io::theta_fit_to_json(fitted.fit).dump(2) + "\n", out);
      return 0;
    }
  } catch (const UsageError& e) {
    err << json{{"error", e.what()}, {"kind", "usage"}}.dump() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << json{{"error", e.what()}, {"kind", "runtime"}}.dump() << '\n';
    return 1;
  }
  err << json{{"error", "no subcommand"}, {"kind", "usage"}}.dump() << '\n';
  return 2;
}

} // namespace objconf::cli

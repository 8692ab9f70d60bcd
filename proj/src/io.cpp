#include "objconf/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace objconf::io {

namespace {

constexpr const char* kHeaderTag = "#objconf ";

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json optional_json(const std::optional<double>& v) { return v ? number_or_null(*v) : json(nullptr); }

double number_or_inf(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

bool parse_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* first = t.data();
  if (*first == '+') ++first;
  const auto r = std::from_chars(first, t.data() + t.size(), out);
  return r.ec == std::errc{} && r.ptr == t.data() + t.size();
}

bool looks_numeric(const std::string& line) {
  const auto cells = split_csv(line);
  double v = 0.0;
  return !cells.empty() && parse_double(cells.front(), v);
}

std::vector<std::string> object_columns(const MetricSpace& space) {
  std::vector<std::string> out;
  switch (space.kind()) {
  case SpaceKind::Euclidean:
  case SpaceKind::Sphere2:
    for (std::size_t i = 1; i <= space.dim(); ++i) out.push_back("y" + std::to_string(i));
    break;
  case SpaceKind::Wasserstein1D:
    for (std::size_t i = 1; i <= space.dim(); ++i) out.push_back("q" + std::to_string(i));
    break;
  case SpaceKind::Network:
    for (std::size_t r = 1; r <= space.dim(); ++r)
      for (std::size_t c = 1; c <= space.dim(); ++c)
        out.push_back("a" + std::to_string(r) + "_" + std::to_string(c));
    break;
  case SpaceKind::Spider3:
    out = {"ray", "length"};
    break;
  }
  return out;
}

json encode_objects(const MetricSpace& space, const std::vector<ObjectPoint>& objects) {
  json arr = json::array();
  for (const auto& p : objects) arr.push_back(space.encode(p));
  return arr;
}

std::vector<ObjectPoint> decode_objects(const MetricSpace& space, const json& arr) {
  std::vector<ObjectPoint> out;
  out.reserve(arr.size());
  for (const auto& row : arr) {
    const auto values = row.get<std::vector<double>>();
    ObjectPoint p = space.decode(values);
    space.validate(p);
    out.push_back(std::move(p));
  }
  return out;
}

json summary_json(const Summary& s) {
  return {{"mean", number_or_null(s.mean)}, {"sd", number_or_null(s.sd)}, {"count", s.count}};
}

} // namespace

json space_to_json(const MetricSpace& space) {
  switch (space.kind()) {
  case SpaceKind::Euclidean:
    return {{"kind", "euclidean"}, {"k", space.dim()}};
  case SpaceKind::Sphere2:
    return {{"kind", "sphere2"}};
  case SpaceKind::Wasserstein1D:
    return {{"kind", "wasserstein1d"},
            {"m", space.dim()},
            {"support", {space.support_lo(), space.support_hi()}}};
  case SpaceKind::Network:
    return {{"kind", "network"}, {"k", space.dim()}};
  case SpaceKind::Spider3:
    return {{"kind", "spider3"}};
  }
  throw FormatError("unknown space kind");
}

MetricSpace space_from_json(const json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "euclidean") return MetricSpace::euclidean(j.value("k", std::size_t{1}));
    if (kind == "sphere2") return MetricSpace::sphere2();
    if (kind == "wasserstein1d") {
      const auto m = j.value("m", std::size_t{100});
      std::vector<double> support{0.0, 1.0};
      if (j.contains("support")) support = j.at("support").get<std::vector<double>>();
      if (support.size() != 2) throw FormatError("wasserstein support must have two entries");
      return MetricSpace::wasserstein1d(m, support[0], support[1]);
    }
    if (kind == "network") return MetricSpace::network(j.at("k").get<std::size_t>());
    if (kind == "spider3") return MetricSpace::spider3();
    throw FormatError("unknown space kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad space descriptor: ") + e.what());
  }
}

std::vector<std::string> column_names(const MetricSpace& space, std::size_t dim) {
  std::vector<std::string> out;
  for (std::size_t c = 1; c <= dim; ++c) out.push_back("x" + std::to_string(c));
  for (auto& name : object_columns(space)) out.push_back(std::move(name));
  return out;
}

void write_dataset(std::ostream& out, const Dataset& data) {
  const auto columns = column_names(data.space, data.dim);
  const json header{{"space", space_to_json(data.space)}, {"d", data.dim}, {"columns", columns}};
  out << kHeaderTag << header.dump() << '\n';
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    bool first = true;
    for (double v : data.covariate(i)) {
      out << (first ? "" : ",") << fmt(v);
      first = false;
    }
    for (double v : data.space.encode(data.objects[i])) {
      out << (first ? "" : ",") << fmt(v);
      first = false;
    }
    out << '\n';
  }
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ostringstream s;
  write_dataset(s, data);
  write_text(path, s.str());
}

Dataset read_dataset(std::istream& in, const MetricSpace* fallback_space) {
  std::string line;
  std::optional<MetricSpace> space;
  std::optional<std::size_t> dim;
  std::vector<std::string> pending;

  bool saw_header = false;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (!saw_header && line.rfind(kHeaderTag, 0) == 0) {
      json header;
      try {
        header = json::parse(line.substr(std::string(kHeaderTag).size()));
      } catch (const json::exception& e) {
        throw FormatError(std::string("bad dataset header: ") + e.what());
      }
      if (!header.contains("space")) throw FormatError("dataset header has no space");
      space = space_from_json(header.at("space"));
      if (header.contains("d")) dim = header.at("d").get<std::size_t>();
      saw_header = true;
      continue;
    }
    if (!looks_numeric(line)) {
      if (!pending.empty()) throw FormatError("unexpected text row after data rows");
      continue;  // column-name line
    }
    pending.push_back(line);
  }
  if (!space) {
    if (fallback_space == nullptr) throw FormatError("dataset has no header and no space was given");
    space = *fallback_space;
  }

  Dataset data;
  data.space = *space;
  const std::size_t width_obj = space->encoded_width();
  for (std::size_t r = 0; r < pending.size(); ++r) {
    const auto cells = split_csv(pending[r]);
    if (!dim) {
      if (cells.size() <= width_obj) {
        throw FormatError("row " + std::to_string(r) + ": " + std::to_string(cells.size()) +
                          " columns leave no room for covariates");
      }
      dim = cells.size() - width_obj;
    }
    if (cells.size() != *dim + width_obj) {
      throw FormatError("row " + std::to_string(r) + ": expected " +
                        std::to_string(*dim + width_obj) + " columns, found " +
                        std::to_string(cells.size()));
    }
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!parse_double(cells[c], values[c])) {
        throw FormatError("row " + std::to_string(r) + ", column " + std::to_string(c + 1) +
                          ": cannot parse '" + trim(cells[c]) + "'");
      }
    }
    data.covariates.insert(data.covariates.end(), values.begin(),
                           values.begin() + static_cast<std::ptrdiff_t>(*dim));
    try {
      data.objects.push_back(
          space->decode(std::span<const double>(values).subspan(*dim)));
    } catch (const Error& e) {
      throw FormatError("row " + std::to_string(r) + ": " + e.what());
    }
  }
  data.dim = dim.value_or(1);
  try {
    data.validate();
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(e.what());
  }
  return data;
}

Dataset load_dataset(const std::filesystem::path& path, const MetricSpace* fallback_space) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open dataset '" + path.string() + "'");
  return read_dataset(in, fallback_space);
}

json model_to_json(const ConformalModel& model) {
  const ProfileTable& table = *model.table;
  const ProfileEstimator& est = table.estimator();
  json j{
      {"format", "objconf-model"},
      {"version", 1},
      {"space", space_to_json(est.space())},
      {"kernel", {{"family", to_string(est.kernel().family)}, {"bandwidth", est.kernel().bandwidth}}},
      {"tgrid", {{"t_max", est.grid().t_max}, {"size", est.grid().size}}},
      {"profile", {{"monotone", est.options().monotone}}},
      {"covariates", est.covariates()},
      {"objects", encode_objects(est.space(), est.objects())},
      {"curves", table.curves()},
      {"costs", table.costs()},
      {"diagnostics",
       {{"widened_fits", table.diagnostics().widened_fits},
        {"max_bandwidth", table.diagnostics().max_bandwidth}}},
      {"calibration_scores", model.calibration_scores},
      {"threshold", number_or_null(model.threshold)},
      {"alpha", model.alpha},
      {"score", to_string(model.score)},
      {"plan",
       {{"train", model.plan.train},
        {"calibration", model.plan.calibration},
        {"seed", model.plan.seed},
        {"train_fraction", model.plan.train_fraction}}},
  };
  j["theta"] = model.theta ? json(*model.theta) : json(nullptr);
  return j;
}

ConformalModel model_from_json(const json& j) {
  try {
    if (j.value("format", std::string()) != "objconf-model") throw FormatError("not a model artifact");
    const MetricSpace space = space_from_json(j.at("space"));
    const KernelSpec kernel{parse_kernel(j.at("kernel").at("family").get<std::string>()),
                            j.at("kernel").at("bandwidth").get<double>()};
    const TGrid grid{j.at("tgrid").at("t_max").get<double>(),
                     j.at("tgrid").at("size").get<std::size_t>()};
    ProfileOptions options;
    options.monotone = j.at("profile").at("monotone").get<bool>();
    ProfileEstimator est(space, j.at("covariates").get<std::vector<double>>(),
                         decode_objects(space, j.at("objects")), kernel, grid, options);
    FitDiagnostics diag;
    diag.widened_fits = j.at("diagnostics").at("widened_fits").get<std::size_t>();
    diag.max_bandwidth = j.at("diagnostics").at("max_bandwidth").get<double>();

    ConformalModel model;
    model.table = std::make_shared<const ProfileTable>(ProfileTable::from_parts(
        std::move(est), j.at("curves").get<std::vector<ProfileCurve>>(),
        j.at("costs").get<std::vector<double>>(), diag));
    model.calibration_scores = j.at("calibration_scores").get<std::vector<double>>();
    model.threshold = number_or_inf(j.at("threshold"));
    model.alpha = j.at("alpha").get<double>();
    model.score = parse_score(j.at("score").get<std::string>());
    const json& plan = j.at("plan");
    model.plan.train = plan.at("train").get<std::vector<std::size_t>>();
    model.plan.calibration = plan.at("calibration").get<std::vector<std::size_t>>();
    model.plan.seed = plan.at("seed").get<std::uint64_t>();
    model.plan.train_fraction = plan.at("train_fraction").get<double>();
    if (j.contains("theta") && !j.at("theta").is_null()) {
      model.theta = j.at("theta").get<std::vector<double>>();
    }
    return model;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad model artifact: ") + e.what());
  }
}

json theta_fit_to_json(const ThetaFit& fit) {
  json starts = json::array();
  for (double v : fit.start_objectives) starts.push_back(number_or_null(v));
  return {
      {"theta", fit.theta.values()},
      {"objective", number_or_null(fit.objective)},
      {"best_start", fit.best_start},
      {"start_objectives", starts},
      {"history", fit.history},
      {"bins",
       {{"edges", fit.bins.edges},
        {"representatives", fit.bins.representatives},
        {"bins", fit.bins.bins}}},
  };
}

void write_prediction_set(std::ostream& out, const MetricSpace& space, const PredictionSet& set) {
  for (const auto& name : object_columns(space)) out << name << ',';
  out << "score,member\n";
  for (std::size_t i = 0; i < set.candidates.size(); ++i) {
    for (double v : space.encode(set.candidates[i])) out << fmt(v) << ',';
    out << fmt(set.scores[i]) << ',' << (set.member[i] ? 1 : 0) << '\n';
  }
}

void write_coverage_csv(std::ostream& out, const CoverageReport& report) {
  out << "bin_center,coverage,mean_size,n_in_bin\n";
  for (const auto& b : report.bins) {
    out << fmt(b.center()) << ',' << fmt(b.coverage) << ',' << fmt(b.mean_size) << ',' << b.n
        << '\n';
  }
}

json coverage_to_json(const CoverageReport& report) {
  json bins = json::array();
  for (const auto& b : report.bins) {
    bins.push_back({{"lo", b.lo},
                    {"hi", b.hi},
                    {"center", b.center()},
                    {"n", b.n},
                    {"coverage", optional_json(b.coverage)},
                    {"mean_size", optional_json(b.mean_size)}});
  }
  return {{"n_test", report.n_test},
          {"marginal_coverage", report.marginal_coverage},
          {"mean_size", optional_json(report.mean_size)},
          {"bins", bins}};
}

void write_report_csv(std::ostream& out, const MonteCarloReport& report) {
  out << "run,seed,ok,marginal_coverage,mean_size,theta_mse,error\n";
  for (const auto& r : report.runs) {
    std::string error = r.error;
    for (char& c : error)
      if (c == ',' || c == '\n') c = ';';
    out << r.run << ',' << r.seed << ',' << (r.ok ? 1 : 0) << ','
        << (r.ok ? fmt(r.marginal_coverage) : std::string()) << ',' << fmt(r.mean_size) << ','
        << fmt(r.theta_mse) << ',' << error << '\n';
  }
}

json report_to_json(const MonteCarloReport& report) {
  json bins = json::array();
  const auto cov = report.bin_coverage();
  const auto size = report.bin_size();
  for (std::size_t b = 0; b < report.bin_centers.size(); ++b) {
    bins.push_back({{"center", report.bin_centers[b]},
                    {"coverage", optional_json(cov[b])},
                    {"mean_size", optional_json(size[b])}});
  }
  json runs = json::array();
  for (const auto& r : report.runs) {
    json row{{"run", r.run},
             {"seed", r.seed},
             {"ok", r.ok},
             {"marginal_coverage", r.ok ? json(r.marginal_coverage) : json(nullptr)},
             {"mean_size", optional_json(r.mean_size)},
             {"theta_mse", optional_json(r.theta_mse)}};
    if (!r.ok) row["error"] = r.error;
    runs.push_back(std::move(row));
  }
  return {{"spec",
           {{"setting", to_string(report.spec.setting)},
            {"n", report.spec.n},
            {"seed", report.spec.seed}}},
          {"n_runs", report.n_runs},
          {"failures", report.failures},
          {"coverage", summary_json(report.coverage())},
          {"size", summary_json(report.size())},
          {"theta_mse", summary_json(report.theta_mse())},
          {"bins", bins},
          {"runs", runs}};
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "bandwidth,coverage_mean,coverage_sd,size_mean,size_sd,runs_ok,failures\n";
  for (const auto& row : rows) {
    const Summary c = row.report.coverage();
    const Summary s = row.report.size();
    out << fmt(row.bandwidth) << ',' << fmt(c.mean) << ',' << fmt(c.sd) << ','
        << (s.count ? fmt(s.mean) : std::string()) << ',' << (s.count ? fmt(s.sd) : std::string())
        << ',' << c.count << ',' << row.report.failures << '\n';
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw FormatError("write failed for '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

} // namespace objconf::io

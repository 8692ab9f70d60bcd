#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "objconf/cli.hpp"
#include "objconf/conformal.hpp"
#include "objconf/io.hpp"
#include "objconf/simulate.hpp"
#include "objconf/single_index.hpp"

namespace py = pybind11;
using namespace objconf;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

MetricSpace space_of(const std::string& descriptor) {
  return io::space_from_json(io::json::parse(descriptor));
}

Array to_matrix(const std::vector<double>& flat, std::size_t rows, std::size_t cols) {
  Array out({rows, cols});
  std::copy(flat.begin(), flat.end(), out.mutable_data());
  return out;
}

Array encoded_objects(const MetricSpace& space, const std::vector<ObjectPoint>& points) {
  const std::size_t w = space.encoded_width();
  std::vector<double> flat;
  flat.reserve(points.size() * w);
  for (const auto& p : points) {
    const auto e = space.encode(p);
    flat.insert(flat.end(), e.begin(), e.end());
  }
  return to_matrix(flat, points.size(), w);
}

std::vector<ObjectPoint> decode_rows(const MetricSpace& space, const Array& y) {
  if (y.ndim() != 2 || static_cast<std::size_t>(y.shape(1)) != space.encoded_width()) {
    throw Error("objects need shape (n, " + std::to_string(space.encoded_width()) + ")");
  }
  std::vector<ObjectPoint> out;
  const auto w = static_cast<std::size_t>(y.shape(1));
  for (py::ssize_t i = 0; i < y.shape(0); ++i) {
    ObjectPoint p = space.decode(std::span<const double>(y.data(i, 0), w));
    space.validate(p);
    out.push_back(std::move(p));
  }
  return out;
}

Dataset from_arrays(const std::string& descriptor, const Array& x, const Array& y) {
  Dataset d;
  d.space = space_of(descriptor);
  if (x.ndim() == 1) {
    d.dim = 1;
  } else if (x.ndim() == 2) {
    d.dim = static_cast<std::size_t>(x.shape(1));
  } else {
    throw Error("covariates must be 1-D or 2-D");
  }
  d.covariates.assign(x.data(), x.data() + x.size());
  d.objects = decode_rows(d.space, y);
  d.validate();
  return d;
}

FitOptions fit_options(double alpha, std::uint64_t seed, std::optional<double> bandwidth,
                       const std::string& kernel, const std::string& score, std::size_t tgrid) {
  FitOptions o;
  o.alpha = alpha;
  o.seed = seed;
  o.bandwidth = bandwidth;
  o.kernel = parse_kernel(kernel);
  o.score = parse_score(score);
  o.tgrid_size = tgrid;
  return o;
}

py::tuple predict(const ConformalModel& m, const Array& x, const Array& candidates) {
  const double t = m.reduce_covariate(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
  const MetricSpace& space = m.table->estimator().space();
  const auto grid = CandidateGrid::from_points(decode_rows(space, candidates));
  const PredictionSet set = m.score == ScoreKind::TransportRank ? rank_based_set(m, t, grid, m.alpha)
                                                                 : predict_set(m, t, grid);
  py::array_t<bool> member(static_cast<py::ssize_t>(set.member.size()));
  for (std::size_t i = 0; i < set.member.size(); ++i) member.mutable_at(i) = set.member[i];
  return py::make_tuple(py::array_t<double>(static_cast<py::ssize_t>(set.scores.size()), set.scores.data()),
                        member);
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Conformal prediction sets for metric-space valued responses";

  py::register_exception<Error>(m, "ObjconfError", PyExc_ValueError);

  py::class_<Dataset>(m, "Dataset")
      .def_static("from_arrays", &from_arrays, py::arg("space"), py::arg("x"), py::arg("y"))
      .def_property_readonly("space", [](const Dataset& d) { return io::space_to_json(d.space).dump(); })
      .def_property_readonly("x", [](const Dataset& d) { return to_matrix(d.covariates, d.size(), d.dim); })
      .def_property_readonly("y", [](const Dataset& d) { return encoded_objects(d.space, d.objects); })
      .def("__len__", &Dataset::size)
      .def("to_csv", [](const Dataset& d) {
        std::ostringstream s;
        io::write_dataset(s, d);
        return s.str();
      })
      .def_static("from_csv", [](const std::string& text) {
        std::istringstream in(text);
        return io::read_dataset(in);
      });

  py::class_<ConformalModel>(m, "Model")
      .def_readonly("threshold", &ConformalModel::threshold)
      .def_readonly("alpha", &ConformalModel::alpha)
      .def_readonly("calibration_scores", &ConformalModel::calibration_scores)
      .def_readonly("theta", &ConformalModel::theta)
      .def_property_readonly("bandwidth",
                             [](const ConformalModel& c) { return c.table->estimator().kernel().bandwidth; })
      .def("with_alpha", &with_alpha, py::arg("alpha"))
      .def("predict", &predict, py::arg("x"), py::arg("candidates"))
      .def("evaluate",
           [](const ConformalModel& c, const Dataset& test, std::size_t bins) {
             CoverageOptions o;
             o.n_bins = bins;
             o.sets_per_bin = 0;
             return io::coverage_to_json(evaluate_coverage(c, test, nullptr, o)).dump();
           },
           py::arg("test"), py::arg("bins") = 20)
      .def("to_json", [](const ConformalModel& c) { return io::model_to_json(c).dump(); })
      .def_static("from_json", [](const std::string& s) { return io::model_from_json(io::json::parse(s)); });

  m.def("generate", [](const std::string& setting, std::size_t n, std::uint64_t seed) {
    return generate({parse_setting(setting), n, seed});
  }, py::arg("setting"), py::arg("n"), py::arg("seed"));

  m.def("fit",
        [](const Dataset& d, double alpha, std::uint64_t seed, std::optional<double> bandwidth,
           const std::string& kernel, const std::string& score, std::size_t tgrid) {
          py::gil_scoped_release release;
          return split_fit(d, fit_options(alpha, seed, bandwidth, kernel, score, tgrid));
        },
        py::arg("data"), py::arg("alpha") = 0.1, py::arg("seed") = 0, py::arg("bandwidth") = py::none(),
        py::arg("kernel") = "epanechnikov", py::arg("score") = "cps", py::arg("tgrid") = 101);

  m.def("single_index_fit",
        [](const Dataset& d, double alpha, std::uint64_t seed, std::size_t bins, std::size_t restarts) {
          py::gil_scoped_release release;
          const FitOptions o = fit_options(alpha, seed, std::nullopt, "epanechnikov", "cps", 101);
          ThetaSearchOptions t;
          t.bins = bins;
          t.restarts = restarts;
          t.seed = seed;
          auto r = single_index_fit(d, o, t);
          return std::make_pair(std::move(r.model), io::theta_fit_to_json(r.fit).dump());
        },
        py::arg("data"), py::arg("alpha") = 0.1, py::arg("seed") = 0, py::arg("bins") = 0,
        py::arg("restarts") = 8);

  m.def("simulate",
        [](const std::string& setting, std::size_t n, std::size_t runs, std::uint64_t seed, double alpha,
           std::size_t n_test) {
          py::gil_scoped_release release;
          PipelineConfig c;
          c.fit.alpha = alpha;
          c.n_test = n_test;
          c.coverage.sets_per_bin = 0;
          return io::report_to_json(run_monte_carlo({parse_setting(setting), n, seed}, c, runs)).dump();
        },
        py::arg("setting"), py::arg("n"), py::arg("runs"), py::arg("seed") = 0, py::arg("alpha") = 0.1,
        py::arg("n_test") = 2000);

  m.def("distance", [](const std::string& descriptor, const Array& a, const Array& b) {
    const MetricSpace s = space_of(descriptor);
    const auto pa = s.decode(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())));
    const auto pb = s.decode(std::span<const double>(b.data(), static_cast<std::size_t>(b.size())));
    return s.distance(pa, pb);
  }, py::arg("space"), py::arg("a"), py::arg("b"));

  m.def("candidate_grid", [](const std::string& descriptor, std::size_t resolution,
                             std::vector<std::pair<double, double>> bounds) {
    const MetricSpace s = space_of(descriptor);
    const auto g = candidate_grid(s, resolution, GridBounds{std::move(bounds)});
    return encoded_objects(s, g.points);
  }, py::arg("space"), py::arg("resolution"), py::arg("bounds") = std::vector<std::pair<double, double>>{});

  m.def("cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code = 0;
    {
      py::gil_scoped_release release;
      code = cli::dispatch(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"));
}

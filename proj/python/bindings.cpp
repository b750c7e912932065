#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <string>

#include "pfsmooth/config.hpp"
#include "pfsmooth/grid_oracle.hpp"
#include "pfsmooth/harness.hpp"
#include "pfsmooth/kalman.hpp"
#include "pfsmooth/metrics.hpp"
#include "pfsmooth/neighborhood.hpp"
#include "pfsmooth/smoothers.hpp"

namespace py = pybind11;
using namespace pfsmooth;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array vector_array(const std::vector<double>& v) {
  Array out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

/// Rows of equal length stacked into a 2-D array.
Array matrix_array(const std::vector<std::vector<double>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  Array out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(rows.size()), static_cast<py::ssize_t>(cols)});
  double* p = out.mutable_data();
  for (const auto& r : rows) {
    if (r.size() != cols) throw std::invalid_argument("ragged rows");
    p = std::copy(r.begin(), r.end(), p);
  }
  return out;
}

TimeSeries series_from(const Array& y) {
  if (y.ndim() != 1) throw std::invalid_argument("observations must be one-dimensional");
  return TimeSeries{std::vector<double>(y.data(), y.data() + y.size())};
}

Array densities_array(const std::vector<GridDensity>& d) {
  std::vector<std::vector<double>> rows;
  rows.reserve(d.size());
  for (const auto& g : d) rows.push_back(g.values);
  return matrix_array(rows);
}

std::vector<GridDensity> densities_from(const Array& a, const Grid& grid) {
  if (a.ndim() != 2 || static_cast<std::size_t>(a.shape(1)) != grid.count) {
    throw std::invalid_argument("densities must have shape (N, grid.count)");
  }
  std::vector<GridDensity> out;
  for (py::ssize_t n = 0; n < a.shape(0); ++n) {
    GridDensity d(grid);
    std::copy(a.data(n, 0), a.data(n, 0) + grid.count, d.values.begin());
    out.push_back(std::move(d));
  }
  return out;
}

TrendModel make_model(const std::string& family, std::optional<double> tau, double sigma, double truncation,
                      double initial_mean, double initial_std) {
  ModelConfig c;
  c.family = parse_noise_kind(family);
  c.tau = tau;
  c.sigma = sigma;
  c.truncation = truncation;
  c.initial_mean = initial_mean;
  c.initial_std = initial_std;
  return c.build();
}

ExperimentConfig config_from(const py::dict& settings) {
  ExperimentConfig c;
  for (const auto& [key, value] : settings) {
    apply_setting(c, py::str(key).cast<std::string>(), py::str(value).cast<std::string>());
  }
  c.validate();
  return c;
}

py::dict moments_dict(const std::vector<GaussianMoments>& m, const char* prefix) {
  std::vector<double> mean, var;
  for (const auto& g : m) {
    mean.push_back(g.mean);
    var.push_back(g.var);
  }
  py::dict d;
  d[(std::string(prefix) + "_mean").c_str()] = vector_array(mean);
  d[(std::string(prefix) + "_var").c_str()] = vector_array(var);
  return d;
}

}  // namespace

PYBIND11_MODULE(_pfsmooth, mod) {
  mod.doc() = "Particle filters and marginal smoothers for scalar trend models";

  py::class_<TrendModel>(mod, "TrendModel")
      .def(py::init(&make_model), py::arg("family") = "gauss", py::arg("tau") = py::none(),
           py::arg("sigma") = kDefaultObsStd, py::arg("truncation") = kDefaultTruncation,
           py::arg("initial_mean") = 0.0, py::arg("initial_std") = 1.0)
      .def_property_readonly("family",
                             [](const TrendModel& m) { return std::string(to_string(m.system_noise().kind())); })
      .def_property_readonly("tau", [](const TrendModel& m) { return m.system_noise().scale(); })
      .def_property_readonly("sigma", &TrendModel::obs_std)
      .def("transition_logdensity", &TrendModel::transition_logdensity, py::arg("x_prev"), py::arg("x_next"))
      .def("observation_logdensity", &TrendModel::observation_logdensity, py::arg("x"), py::arg("y"));

  py::class_<Grid>(mod, "Grid")
      .def(py::init([](double origin, double step, std::size_t count) {
             Grid g{origin, step, count};
             g.validate();
             return g;
           }),
           py::arg("origin") = -8.0, py::arg("step") = 16.0 / 6400.0, py::arg("count") = 6400)
      .def_readonly("origin", &Grid::origin)
      .def_readonly("step", &Grid::step)
      .def_readonly("count", &Grid::count)
      .def("points", [](const Grid& g) {
        std::vector<double> x(g.count);
        for (std::size_t i = 0; i < g.count; ++i) x[i] = g.point(i);
        return vector_array(x);
      });

  mod.def(
      "generate_test_series",
      [](const TrendModel& model, std::size_t length, std::uint64_t seed) {
        const GeneratedSeries g = generate_test_series(model, default_schedule(), length, seed);
        py::dict d;
        d["y"] = vector_array(g.series.values);
        d["trend"] = vector_array(g.trend);
        return d;
      },
      py::arg("model"), py::arg("length") = 500, py::arg("seed") = 1,
      "Synthetic series on the default level schedule; returns {'y', 'trend'}.");

  py::class_<FilterHistory>(mod, "FilterHistory")
      .def_property_readonly("length", &FilterHistory::length)
      .def_readonly("m", &FilterHistory::m)
      .def_property_readonly("particles",
                             [](const FilterHistory& h) {
                               std::vector<std::vector<double>> rows;
                               for (const auto& s : h.systems) rows.push_back(s.particles);
                               return matrix_array(rows);
                             })
      .def_property_readonly("weights",
                             [](const FilterHistory& h) {
                               std::vector<std::vector<double>> rows;
                               for (const auto& s : h.systems) rows.push_back(s.weights);
                               return matrix_array(rows);
                             })
      .def_property_readonly("ess", [](const FilterHistory& h) {
        std::vector<double> e;
        for (const auto& s : h.systems) e.push_back(s.ess_before_resampling);
        return vector_array(e);
      });

  mod.def(
      "run_filter",
      [](const TrendModel& model, const Array& y, std::size_t m, double alpha, std::uint64_t seed) {
        const TimeSeries series = series_from(y);
        py::gil_scoped_release release;
        return run_filter(model, series, m, alpha, seed);
      },
      py::arg("model"), py::arg("y"), py::arg("m"), py::arg("alpha") = kDefaultAlpha, py::arg("seed") = 0);

  py::class_<SmoothedMarginals>(mod, "SmoothedMarginals")
      .def_property_readonly("method", [](const SmoothedMarginals& s) { return std::string(to_string(s.method)); })
      .def_property_readonly("length", &SmoothedMarginals::length)
      .def_property_readonly("particles", [](const SmoothedMarginals& s) { return matrix_array(s.particles); })
      .def_property_readonly("weights", [](const SmoothedMarginals& s) { return matrix_array(s.weights); })
      .def_property_readonly("dropped_denominators",
                             [](const SmoothedMarginals& s) { return s.diagnostics.dropped_denominators; })
      .def_property_readonly("empty_neighborhoods",
                             [](const SmoothedMarginals& s) { return s.diagnostics.empty_neighborhoods; })
      .def("moments", [](const SmoothedMarginals& s) {
        std::vector<double> mean, std;
        for (const auto& m : smoothing_moments(s)) {
          mean.push_back(m.mean);
          std.push_back(m.std);
        }
        return py::make_tuple(vector_array(mean), vector_array(std));
      });

  mod.def("filter_marginals", &filter_marginals, py::arg("history"));
  mod.def(
      "fixed_lag_smooth",
      [](const TrendModel& model, const Array& y, std::size_t m, std::size_t lag, double alpha, std::uint64_t seed) {
        const TimeSeries series = series_from(y);
        py::gil_scoped_release release;
        return fixed_lag_smooth(model, series, m, lag, alpha, seed);
      },
      py::arg("model"), py::arg("y"), py::arg("m"), py::arg("lag"), py::arg("alpha") = kDefaultAlpha,
      py::arg("seed") = 0);
  mod.def("ffbsm", &ffbsm, py::arg("history"), py::arg("model"), py::call_guard<py::gil_scoped_release>());
  mod.def(
      "s_ffbsm",
      [](const FilterHistory& h, const TrendModel& model, std::size_t size, const std::string& strategy,
         std::uint64_t seed, std::optional<std::size_t> fixed_offset) {
        const SubsampleOptions opt{size, parse_strategy(strategy), seed, fixed_offset};
        py::gil_scoped_release release;
        return s_ffbsm(h, model, opt);
      },
      py::arg("history"), py::arg("model"), py::arg("subsample_size"), py::arg("strategy") = "equally-spaced",
      py::arg("seed") = 0, py::arg("fixed_offset") = py::none());
  mod.def(
      "ns_ffbsm",
      [](const FilterHistory& h, const TrendModel& model, std::size_t size, double epsilon,
         std::optional<double> radius, std::uint64_t seed) {
        const NeighborhoodOptions opt{size, epsilon, radius, seed};
        py::gil_scoped_release release;
        return ns_ffbsm(h, model, opt);
      },
      py::arg("history"), py::arg("model"), py::arg("subsample_size"), py::arg("epsilon") = 0.0,
      py::arg("radius") = py::none(), py::arg("seed") = 0);

  mod.def(
      "kalman_smoother",
      [](const TrendModel& model, const Array& y) {
        const auto spec = linear_gaussian_spec(model);
        const KalmanRun run = kalman_smoother(kalman_filter(spec, series_from(y)), spec);
        py::dict d = moments_dict(run.filtered, "filtered");
        for (auto item : moments_dict(run.smoothed, "smoothed")) d[item.first] = item.second;
        return d;
      },
      py::arg("model"), py::arg("y"), "Exact Gaussian reference; Gaussian models only.");
  mod.def(
      "grid_smoother",
      [](const TrendModel& model, const Array& y, const Grid& grid, unsigned threads) {
        const TimeSeries series = series_from(y);
        GridRun run;
        {
          py::gil_scoped_release release;
          run = grid_smoother(grid_filter(model, series, grid, threads), model, threads);
        }
        std::vector<double> mean, var;
        for (const auto& d : run.smoothed) {
          mean.push_back(d.mean());
          var.push_back(d.variance());
        }
        py::dict d;
        d["density"] = densities_array(run.smoothed);
        d["smoothed_mean"] = vector_array(mean);
        d["smoothed_var"] = vector_array(var);
        return d;
      },
      py::arg("model"), py::arg("y"), py::arg("grid") = Grid{}, py::arg("threads") = 1,
      "Numerical-integration smoother on a grid; returns densities of shape (N, count).");

  mod.def(
      "marginals_to_grid",
      [](const SmoothedMarginals& s, const Grid& grid) { return densities_array(marginals_to_grid(s, grid)); },
      py::arg("marginals"), py::arg("grid") = Grid{});
  mod.def(
      "dist",
      [](const Array& reference, const Array& estimate, const Grid& grid) {
        return dist(densities_from(reference, grid), densities_from(estimate, grid)).value;
      },
      py::arg("reference"), py::arg("estimate"), py::arg("grid") = Grid{});

  mod.def("k_gaussian", &k_gaussian, py::arg("m"));
  mod.def("k_gaussian_voutier", &k_gaussian_voutier, py::arg("m"));
  mod.def("k_cauchy", &k_cauchy, py::arg("m"));
  mod.def("k_truncated_cauchy", &k_truncated_cauchy, py::arg("m"), py::arg("truncation"),
          py::arg("mc_samples") = kDefaultQuantileSamples, py::arg("seed") = kDefaultQuantileSeed);

  mod.def(
      "_run_experiment",
      [](const py::dict& settings) {
        const ExperimentConfig c = config_from(settings);
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          OracleCache cache;
          r = run_experiment(c, cache);
        }
        py::dict d;
        d["dist_mean"] = r.dist_mean;
        d["dist_std"] = r.dist_std ? py::cast(*r.dist_std) : py::none();
        d["time_mean"] = r.time_mean;
        d["time_std"] = r.time_std ? py::cast(*r.time_std) : py::none();
        std::vector<double> dists, seconds;
        for (const auto& rep : r.replications) {
          dists.push_back(rep.dist);
          seconds.push_back(rep.seconds);
        }
        d["dist"] = vector_array(dists);
        d["seconds"] = vector_array(seconds);
        return d;
      },
      py::arg("settings"));
  mod.def(
      "_optimal_lag",
      [](const py::dict& settings, const std::vector<std::size_t>& lags) {
        ExperimentConfig c = config_from(settings);
        c.method = SmootherKind::FixedLag;
        LagSearchResult r;
        {
          py::gil_scoped_release release;
          const TimeSeries y = load_or_generate(c);
          const Reference ref = compute_reference(c, y);
          r = optimal_lag_search(c, y, ref, lags);
        }
        std::vector<double> mean;
        for (const auto& p : r.curve) mean.push_back(p.dist_mean);
        py::dict d;
        d["best_lag"] = r.best_lag;
        d["lags"] = lags;
        d["dist_mean"] = vector_array(mean);
        return d;
      },
      py::arg("settings"), py::arg("lags"));
}

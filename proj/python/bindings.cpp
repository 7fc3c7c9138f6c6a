#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "mtgee/cli.hpp"
#include "mtgee/dataset.hpp"
#include "mtgee/error.hpp"
#include "mtgee/fit.hpp"
#include "mtgee/report.hpp"
#include "mtgee/simgen.hpp"

namespace py = pybind11;
using namespace mtgee;

namespace {

// Series from an (n, m) response array and n regressor matrices of shape (m, p).
ClusterSeries series_from(const Matrix& y, const std::vector<Matrix>& xs) {
  if (static_cast<std::size_t>(y.rows()) != xs.size()) {
    throw ContractError("Y has " + std::to_string(y.rows()) + " rows but " + std::to_string(xs.size()) +
                        " regressor matrices were given");
  }
  if (xs.empty()) throw ContractError("empty series");
  std::vector<TimeStep> steps;
  steps.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    TimeStep s;
    s.y = y.row(static_cast<Eigen::Index>(i)).transpose();
    s.X = xs[i];
    steps.push_back(std::move(s));
  }
  return ClusterSeries(static_cast<std::size_t>(y.cols()), static_cast<std::size_t>(xs[0].cols()),
                       std::move(steps));
}

py::tuple series_to(const ClusterSeries& s) {
  Matrix y(static_cast<Eigen::Index>(s.size()), static_cast<Eigen::Index>(s.m()));
  std::vector<Matrix> xs;
  for (std::size_t i = 0; i < s.size(); ++i) {
    y.row(static_cast<Eigen::Index>(i)) = s[i].y.transpose();
    xs.push_back(s[i].X);
  }
  return py::make_tuple(y, xs);
}

CorrProvider provider(const std::string& corr, double alpha, const std::optional<Matrix>& fixed) {
  if (fixed) return CorrProvider::pseudo_fixed(*fixed);
  switch (corr_kind_from_string(corr)) {
    case CorrKind::independence:
      return CorrProvider::independence();
    case CorrKind::compound_symmetry:
      return CorrProvider::compound_symmetry(alpha);
    case CorrKind::ar1:
      return CorrProvider::ar1(alpha);
    case CorrKind::empirical_running:
      return CorrProvider::empirical();
    case CorrKind::pseudo_fixed:
      break;
  }
  throw ContractError("corr='fixed' needs the fixed matrix");
}

std::string fit_json(const Matrix& y, const std::vector<Matrix>& xs, const std::string& link,
                     const std::string& corr, double alpha, const std::optional<Matrix>& fixed,
                     const std::string& method, double level, double tol, std::size_t max_iter,
                     bool diagnostics) {
  FitOptions o;
  o.method = fit_method_from_string(method);
  o.level = level;
  o.newton.tol = tol;
  o.newton.max_iter = max_iter;
  o.diagnostics.enabled = diagnostics;
  const FitResult r = fit(series_from(y, xs), Link(link_kind_from_string(link)), provider(corr, alpha, fixed), o);
  return report::dump(report::to_json(r), -1);
}

SimDesign design(std::size_t n, std::size_t m, const Vector& beta0, const std::string& truth, double alpha0,
                 std::uint64_t seed) {
  SimDesign d;
  d.n = n;
  d.m = m;
  d.beta0 = beta0;
  d.truth = truth_from_string(truth);
  d.alpha0 = alpha0;
  d.seed = seed;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "Martingale estimating equations for clustered time series";

  // Translators run most recent first, so the base class goes first.
  py::register_exception<Error>(mod, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ContractError>(mod, "ContractError", PyExc_ValueError);
  py::register_exception<DataError>(mod, "DataError", PyExc_IOError);

  mod.def("link_eval", [](const std::string& link, double theta) {
    const LinkValues v = Link(link_kind_from_string(link)).eval(theta);
    return py::make_tuple(v.mu, v.d1, v.d2, v.d3);
  }, py::arg("link"), py::arg("theta"));

  mod.def("fixed_corr", [](const std::string& kind, double alpha, std::size_t m) {
    return build_fixed_corr(corr_kind_from_string(kind), alpha, m);
  }, py::arg("kind"), py::arg("alpha"), py::arg("m"));

  mod.def("normal_quantile", &normal_quantile, py::arg("p"));

  mod.def("fit_json", &fit_json, py::arg("Y"), py::arg("X"), py::arg("link") = "identity",
          py::arg("corr") = "independence", py::arg("alpha") = 0.0, py::arg("fixed") = std::nullopt,
          py::arg("method") = "newton", py::arg("level") = 0.95, py::arg("tol") = 1e-8,
          py::arg("max_iter") = 50, py::arg("diagnostics") = false);

  mod.def("estimating_function", [](const Matrix& y, const std::vector<Matrix>& xs, const Vector& beta,
                                    const std::string& link, const std::string& corr, double alpha) {
    const EstimatingContext ctx = EstimatingContext::make(series_from(y, xs), Link(link_kind_from_string(link)),
                                                          provider(corr, alpha, std::nullopt), beta);
    return eval_g(ctx, beta);
  }, py::arg("Y"), py::arg("X"), py::arg("beta"), py::arg("link") = "identity",
          py::arg("corr") = "independence", py::arg("alpha") = 0.0);

  mod.def("simulate_ar2", [](std::size_t n, std::size_t m, const Vector& beta0, const std::string& truth,
                             double alpha0, std::uint64_t seed, std::uint64_t stream) {
    return series_to(generate_ar2(design(n, m, beta0, truth, alpha0, seed), stream));
  }, py::arg("n") = 500, py::arg("m") = 5, py::arg("beta0") = Vector((Vector(2) << 0.5, 0.2).finished()),
          py::arg("truth") = "cs", py::arg("alpha0") = 0.7, py::arg("seed") = 1, py::arg("stream") = 0);

  mod.def("monte_carlo_json", [](std::size_t n, std::size_t m, const Vector& beta0,
                                 const std::vector<std::string>& truths, double alpha, std::size_t s,
                                 double level, std::uint64_t seed) {
    std::vector<SimDesign> designs;
    for (const auto& t : truths) designs.push_back(design(n, m, beta0, t, alpha, seed));
    py::gil_scoped_release release;
    return report::dump(report::to_json(monte_carlo_study(designs, standard_estimators(alpha), s, level)), -1);
  }, py::arg("n") = 500, py::arg("m") = 5, py::arg("beta0") = Vector((Vector(2) << 0.5, 0.2).finished()),
          py::arg("truths") = std::vector<std::string>{"R1", "R2", "R3"}, py::arg("alpha") = 0.7,
          py::arg("s") = 500, py::arg("level") = 0.95, py::arg("seed") = 1);

  mod.def("read_csv", [](const std::string& path, std::size_t lags, bool intercept, bool long_layout) {
    DatasetSpec spec;
    spec.path = path;
    spec.lags = lags;
    spec.intercept = intercept;
    spec.layout = long_layout ? Layout::long_format : Layout::wide;
    const Dataset ds = parse_dataset(spec);
    return py::make_tuple(series_to(ds.series), ds.units, ds.next_design());
  }, py::arg("path"), py::arg("lags") = 2, py::arg("intercept") = true, py::arg("long_layout") = false);

  mod.def("run", [](const std::vector<std::string>& args) {
    std::vector<std::string> argv{"mtgee"};
    argv.insert(argv.end(), args.begin(), args.end());
    std::ostringstream out, err;
    const int code = cli::run_command(argv, out, err);
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"));
}

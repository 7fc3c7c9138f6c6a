#include <doctest.h>

#include <cmath>

#include "mtgee/fit.hpp"
#include "mtgee/report.hpp"
#include "mtgee/simgen.hpp"

using namespace mtgee;
using report::Json;

namespace {

FitResult sample_fit(bool diagnostics, FitMethod method = FitMethod::newton) {
  SimDesign d;
  d.n = 60;
  FitOptions o;
  o.method = method;
  o.diagnostics.enabled = diagnostics;
  o.diagnostics.true_corr = truth_corr(d);
  o.diagnostics.d_grid = {0.0, 0.1};
  return fit(generate_ar2(d, 1), Link::identity(), CorrProvider::ar1(0.7), o);
}

}  // namespace

TEST_CASE("fit result round-trips through JSON text") {
  for (bool diag : {false, true}) {
    const FitResult r = sample_fit(diag);
    const Json j = report::envelope("fit", report::to_json(r));
    const std::string text = report::dump(j);
    const Json back = Json::parse(text);
    CHECK(back == j);
    CHECK(report::dump(back) == text);
    for (std::size_t k = 0; k < r.p; ++k) {
      CHECK(back["beta_hat"][k].get<double>() == r.beta_hat(static_cast<long>(k)));
      CHECK(back["ci"][k][0].get<double>() == r.intervals[k].lo);
    }
    CHECK(back["schema"] == "mtgee/1");
    CHECK(back["command"] == "fit");
    CHECK(back["diagnostics"].is_null() == !diag);
  }
}

TEST_CASE("two-step results carry their working matrices") {
  const FitResult r = sample_fit(false, FitMethod::two_step);
  const Json j = report::to_json(r);
  CHECK(j["corr_trace"].size() == r.n);
  CHECK(j["solver"].is_null());
}

TEST_CASE("numbers use 17 significant digits") {
  Json j{{"a", 0.1}, {"b", 3.0}, {"c", NAN}, {"d", -INFINITY}, {"e", 7}, {"f", 1e-300}};
  const std::string s = report::dump(j, -1);
  CHECK(s.find("0.10000000000000001") != std::string::npos);
  CHECK(s.find("3.0") != std::string::npos);
  CHECK(s.find("\"c\":null") != std::string::npos);
  CHECK(s.find("\"d\":null") != std::string::npos);
  CHECK(s.find("\"e\":7") != std::string::npos);
  CHECK(Json::parse(s)["f"].get<double>() == 1e-300);
}

TEST_CASE("monte carlo tables have a fixed shape") {
  std::vector<SimDesign> designs(3);
  designs[0].truth = TruthPattern::independence;
  designs[1].truth = TruthPattern::cs;
  designs[2].truth = TruthPattern::ar1;
  for (auto& d : designs) d.n = 100;
  const MonteCarloReport r = monte_carlo_study(designs, standard_estimators(), 10, 0.95);
  for (report::Metric m : {report::Metric::bias, report::Metric::rb, report::Metric::mse,
                           report::Metric::re, report::Metric::coverage}) {
    const std::string csv = report::mc_table_csv(r, m);
    CHECK(csv.rfind("estimator,truth,component,value\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 5 * 3 * 2);
    CHECK(csv.find('\r') == std::string::npos);
  }
  const Json j = Json::parse(report::dump(report::to_json(r)));
  CHECK(j["cells"].size() == 15);
  CHECK(j["designs"][1]["truth"] == "R2");
}

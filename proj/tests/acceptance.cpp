// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mtgee/cli.hpp"
#include "mtgee/diagnostics.hpp"
#include "mtgee/estfun.hpp"
#include "mtgee/inference.hpp"
#include "mtgee/report.hpp"
#include "mtgee/simgen.hpp"

using namespace mtgee;
using report::Json;

namespace {

const std::string kWind = std::string(MTGEE_DATA_DIR) + "/wind_synthetic.csv";

struct Outcome {
  bool pass;
  std::string detail;
};

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli_run(std::vector<std::string> args) {
  args.insert(args.begin(), "mtgee");
  std::ostringstream out, err;
  const int code = cli::run_command(args, out, err);
  return {code, out.str(), err.str()};
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

bool in(double x, double lo, double hi) { return x >= lo && x <= hi; }

// Shared by criteria 1-3: the full desk-scale table run, via the CLI.
Json tables() {
  static Json cached = [] {
    const CliRun r = cli_run({"replicate-tables", "--n", "500", "--m", "5", "--beta0", "0.5,0.2",
                              "--alpha", "0.7", "--s", "500", "--seed", "1"});
    if (r.code != 0) throw std::runtime_error("replicate-tables failed: " + r.err);
    return Json::parse(r.out);
  }();
  return cached;
}

const Json& cell(const Json& t, const std::string& est, const std::string& truth) {
  for (const auto& c : t["cells"])
    if (c["estimator"] == est && c["truth"] == truth) return c;
  throw std::runtime_error("missing cell " + est + "/" + truth);
}

Outcome criterion1() {
  const Json t = tables();
  std::ostringstream d;
  bool ok = true;
  auto band = [&](const std::string& est, const std::string& truth, double lo, double hi) {
    const Json& re = cell(t, est, truth)["re"];
    for (int k = 0; k < 2; ++k) {
      const double v = re[k].get<double>();
      ok = ok && in(v, lo, hi);
      d << est << "/" << truth << "[" << k + 1 << "]=" << fmt("%.3f", v) << " ";
    }
  };
  band("independence", "R2", 2.4, 3.4);
  band("independence", "R3", 1.9, 2.8);
  for (const char* truth : {"R1", "R2", "R3"}) band("two_step", truth, 1.0, 1.3);
  band("cs", "R2", 0.95, 1.05);
  return {ok, d.str()};
}

Outcome criterion2() {
  const Json t = tables();
  double worst = 0.0;
  std::string where;
  for (const auto& c : t["cells"])
    for (const auto& v : c["rb"]) {
      const double a = std::abs(v.get<double>());
      if (a > worst) {
        worst = a;
        where = c["estimator"].get<std::string>() + "/" + c["truth"].get<std::string>();
      }
    }
  return {worst <= 0.06, fmt("max |RB| = %.4f", worst) + " (" + where + ") over " +
                             std::to_string(t["cells"].size()) + " cells"};
}

Outcome criterion3() {
  const Json t = tables();
  bool ok = true;
  std::ostringstream d;
  d << "two_step, s=500, seed 1:";
  for (const char* truth : {"R1", "R2", "R3"}) {
    const Json& cov = cell(t, "two_step", truth)["coverage"];
    for (int k = 0; k < 2; ++k) {
      const double v = cov[k].get<double>();
      ok = ok && in(v, 0.92, 0.975);
      d << " " << truth << "[" << k + 1 << "]=" << fmt("%.3f", v);
    }
  }
  return {ok, d.str()};
}

Outcome criterion4() {
  // (a) Newton vs closed form.
  double a = 0.0;
  SimDesign d;
  d.n = 50;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const ClusterSeries data = generate_ar2(d, s);
    for (const CorrProvider& p : {CorrProvider::independence(), CorrProvider::compound_symmetry(0.7),
                                  CorrProvider::ar1(0.7), CorrProvider::pseudo_fixed(truth_corr(d))}) {
      const EstimatingContext ctx = EstimatingContext::make(data, Link::identity(), p);
      const Vector init = Vector::Constant(2, 5.0 - static_cast<double>(s));
      a = std::max(a, (solve_newton(ctx, init).beta_hat - solve_linear(ctx)).cwiseAbs().maxCoeff());
    }
  }
  // (b) Sandwich vs HC0 by explicit loops on an i.i.d. m = 1 fixture.
  Philox4x32 rng(77);
  std::vector<TimeStep> steps;
  for (int i = 0; i < 100; ++i) {
    const double x = rng.normal();
    TimeStep st;
    st.X = (Matrix(1, 2) << 1.0, x).finished();
    st.y = Vector::Constant(1, 0.5 - x + std::sqrt(1 + x * x) * rng.normal());
    steps.push_back(st);
  }
  const ClusterSeries iid(1, 2, steps);
  const EstimatingContext ictx = EstimatingContext::make(iid, Link::identity(), CorrProvider::independence());
  const Vector b = solve_linear(ictx);
  double sxx[3] = {0, 0, 0}, mt[3] = {0, 0, 0};
  for (const TimeStep& st : iid) {
    const double x = st.X(0, 1), e = st.y(0) - b(0) - b(1) * x;
    sxx[0] += 1;
    sxx[1] += x;
    sxx[2] += x * x;
    mt[0] += e * e;
    mt[1] += e * e * x;
    mt[2] += e * e * x * x;
  }
  const double det = sxx[0] * sxx[2] - sxx[1] * sxx[1];
  const double i00 = sxx[2] / det, i01 = -sxx[1] / det, i11 = sxx[0] / det;
  const double hc[3] = {
      i00 * (i00 * mt[0] + i01 * mt[1]) + i01 * (i00 * mt[1] + i01 * mt[2]),
      i00 * (i01 * mt[0] + i11 * mt[1]) + i01 * (i01 * mt[1] + i11 * mt[2]),
      i01 * (i01 * mt[0] + i11 * mt[1]) + i11 * (i01 * mt[1] + i11 * mt[2])};
  const Matrix psi = sandwich(ictx, b).Psi_tilde;
  const double bdev = std::max({std::abs(psi(0, 0) - hc[0]), std::abs(psi(0, 1) - hc[1]),
                                std::abs(psi(1, 0) - hc[1]), std::abs(psi(1, 1) - hc[2])});
  // (c) Analytic vs finite-difference Jacobian, 20 instances per link.
  double c = 0.0;
  Philox4x32 jr(5);
  for (Link link : {Link::identity(), Link::logistic(), Link::exponential()}) {
    for (int inst = 0; inst < 20; ++inst) {
      const int m = 2 + inst % 3, p = 1 + inst % 3;
      std::vector<TimeStep> s;
      for (int i = 0; i < 5; ++i) {
        TimeStep st;
        st.X = Matrix(m, p);
        for (int j = 0; j < m; ++j)
          for (int k = 0; k < p; ++k) st.X(j, k) = 0.7 * jr.normal();
        st.y = Vector(m);
        for (int j = 0; j < m; ++j) st.y(j) = jr.uniform() < 0.5 ? 0.0 : 1.0 + jr.uniform();
        s.push_back(st);
      }
      Vector beta(p);
      for (int k = 0; k < p; ++k) beta(k) = 0.5 * jr.normal();
      const EstimatingContext ctx = EstimatingContext::make(
          ClusterSeries(static_cast<std::size_t>(m), static_cast<std::size_t>(p), s), link,
          CorrProvider::ar1(0.4));
      const Matrix an = eval_jacobian(ctx, beta, JacobianMode::analytic);
      const Matrix fd = eval_jacobian(ctx, beta, JacobianMode::finite_diff);
      c = std::max(c, (an - fd).cwiseAbs().maxCoeff() / std::max(1.0, an.cwiseAbs().maxCoeff()));
    }
  }
  const bool ok = a <= 1e-10 && bdev <= 1e-10 && c <= 1e-4;
  return {ok, fmt("(a) newton-linear %.2e", a) + fmt(", (b) sandwich-HC0 %.2e", bdev) +
                  fmt(", (c) jacobian rel %.2e", c)};
}

Outcome criterion5() {
  SimDesign d;
  const Matrix rbar = truth_corr(d);
  const std::size_t reps = 500;
  std::vector<ClusterSeries> data;
  for (std::size_t r = 0; r < reps; ++r) data.push_back(generate_ar2(d, r));
  bool ok = true;
  std::ostringstream det;
  const std::vector<std::pair<std::string, CorrProvider>> providers = {
      {"independence", CorrProvider::independence()},
      {"cs", CorrProvider::compound_symmetry(0.7)},
      {"ar1", CorrProvider::ar1(0.7)},
      {"empirical", CorrProvider::empirical()},
      {"fixed", CorrProvider::pseudo_fixed(rbar)}};
  for (const auto& [name, prov] : providers) {
    Vector sum = Vector::Zero(2), sq = Vector::Zero(2);
    for (const ClusterSeries& s : data) {
      const EstimatingContext ctx = EstimatingContext::make(s, Link::identity(), prov, d.beta0);
      const Vector g = eval_g(ctx, d.beta0) / static_cast<double>(s.size());
      sum += g;
      sq += g.cwiseAbs2();
    }
    const Vector mean = sum / static_cast<double>(reps);
    const Vector var = (sq / static_cast<double>(reps) - mean.cwiseAbs2()) * (reps / (reps - 1.0));
    const Vector se = (var / static_cast<double>(reps)).cwiseSqrt();
    double worst = 0.0;
    for (int k = 0; k < 2; ++k) worst = std::max(worst, std::abs(mean(k)) / se(k));
    ok = ok && worst <= 4.0;
    det << name << fmt(" %.2f", worst) << "SE ";
  }
  return {ok, "max |mean|/SE: " + det.str()};
}

Outcome criterion6() {
  SimDesign d;
  d.n = 300;
  const Matrix rbar = truth_corr(d);
  const Estimate oracle = estimate(generate_ar2(d, 1), Link::identity(), CorrProvider::pseudo_fixed(rbar),
                                   FitMethod::linear);
  const OptimalityReport o = optimality_ratios(oracle.ctx, oracle.beta, rbar);
  double exact = 0.0;
  for (std::size_t k = 0; k < o.checkpoints.size(); ++k)
    exact = std::max({exact, std::abs(o.det_ratio_H[k] - 1.0), std::abs(o.det_ratio_M[k] - 1.0)});

  std::vector<double> h200, h2000, m200, m2000;
  for (std::uint64_t s = 0; s < 50; ++s) {
    for (std::size_t n : {200, 2000}) {
      SimDesign dn;
      dn.n = n;
      const Estimate e = estimate(generate_ar2(dn, s), Link::identity(), CorrProvider::empirical(),
                                  FitMethod::linear);
      const OptimalityReport r = optimality_ratios(e.ctx, e.beta, rbar);
      (n == 200 ? h200 : h2000).push_back(std::abs(r.det_ratio_H.back() - 1.0));
      (n == 200 ? m200 : m2000).push_back(std::abs(r.det_ratio_M.back() - 1.0));
    }
  }
  const bool ok = exact <= 1e-10 && median(h2000) < median(h200) && median(m2000) < median(m200);
  return {ok, fmt("oracle max|ratio-1| %.1e", exact) +
                  fmt("; empirical median |H ratio-1| n=200 %.4f -> n=2000 %.4f", median(h200), median(h2000)) +
                  fmt(", |M ratio-1| %.4f -> %.4f", median(m200), median(m2000))};
}

Outcome criterion7() {
  SimDesign d;
  const Matrix rbar = truth_corr(d);
  std::vector<double> drift, ratio;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const ClusterSeries data = generate_ar2(d, s);
    const auto pts = perturbation_sensitivity(data, Link::identity(), CorrProvider::independence(),
                                              FitMethod::two_step, rbar, {0.0, 0.01}, s + 1);
    drift.push_back(pts[1].beta_drift);
    ratio.push_back(*pts[1].det_ratio_drift);
  }
  const double md = median(drift), mr = median(ratio);
  return {md <= 0.01 && mr <= 0.01,
          fmt("two_step, d=0.01, n=500, 20 seeds: median drift %.2e", md) + fmt(", median det-ratio drift %.2e", mr)};
}

Outcome criterion8() {
  const std::vector<std::string> args{"fit", "--data", kWind, "--lags", "2", "--intercept",
                                      "--method", "two_step", "--level", "0.95"};
  const CliRun a = cli_run(args), b = cli_run(args);
  if (a.code != 0) return {false, "fit exited with " + std::to_string(a.code) + ": " + a.err};
  const Json j = Json::parse(a.out);
  const bool shape = j["p"] == 4 && j["beta_hat"].size() == 4 && j["ci"].size() == 4 &&
                     j["prediction"]["y_hat"].size() == 3;
  bool ok = shape && a.out == b.out;
  std::string detail = std::string("synthetic fixture: p=") + std::to_string(j["p"].get<int>()) +
                       ", CIs=" + std::to_string(j["ci"].size()) +
                       ", prediction length=" + std::to_string(j["prediction"]["y_hat"].size()) +
                       (a.out == b.out ? ", byte-identical rerun" : ", rerun differs");

  // Optional exact check when the buoy extraction is supplied.
  if (const char* path = std::getenv("MTGEE_WIND_DATA")) {
    std::vector<std::string> full = args;
    full[2] = path;
    const CliRun r = cli_run(full);
    std::vector<std::string> reduced = full;
    reduced.insert(reduced.end(), {"--exog", "none"});
    const CliRun rr = cli_run(reduced);
    if (r.code != 0 || rr.code != 0) return {false, detail + "; supplied data failed to fit"};
    const double want_full[4] = {2.072, 0.441, 0.091, -0.011};
    const double want_red[3] = {2.386, 0.455, 0.109};
    const Json jf = Json::parse(r.out), jr = Json::parse(rr.out);
    double worst = 0.0;
    for (int k = 0; k < 4; ++k) worst = std::max(worst, std::abs(jf["beta_hat"][k].get<double>() - want_full[k]));
    for (int k = 0; k < 3; ++k) worst = std::max(worst, std::abs(jr["beta_hat"][k].get<double>() - want_red[k]));
    ok = ok && worst <= 0.02;
    detail += fmt("; supplied data: max |beta - reference| = %.4f", worst);
  } else {
    detail += "; exact-value check skipped (set MTGEE_WIND_DATA to the buoy extraction)";
  }
  return {ok, detail};
}

Outcome criterion9() {
  const std::vector<std::vector<std::string>> commands = {
      {"fit", "--data", kWind, "--method", "two_step", "--diagnostics", "--d-grid", "0,0.01,0.1",
       "--seed", "4"},
      {"fit", "--data", kWind, "--corr", "empirical"},
      {"predict", "--data", kWind, "--method", "two_step"},
      {"simulate", "--truth", "ar1", "--n", "200", "--s", "40", "--seed", "9"},
      {"replicate-tables", "--n", "150", "--s", "20", "--seed", "3"},
      {"diagnose", "--n", "300", "--reps", "50", "--seed", "2", "--d-grid", "0,0.1"},
  };
  std::size_t same = 0;
  for (const auto& c : commands) {
    const CliRun a = cli_run(c), b = cli_run(c);
    if (a.code == 0 && b.code == 0 && a.out == b.out) ++same;
  }
  // Parallel and serial Monte Carlo runs agree too.
  const CliRun par = cli_run({"simulate", "--n", "200", "--s", "40"});
  const CliRun ser = cli_run({"simulate", "--n", "200", "--s", "40", "--serial"});
  const bool threads = par.code == 0 && par.out == ser.out;
  return {same == commands.size() && threads,
          std::to_string(same) + "/" + std::to_string(commands.size()) +
              " commands byte-identical on rerun; parallel vs serial simulate " +
              (threads ? "identical" : "differ")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"RE bands (replicate-tables, s=500)", criterion1},
      {"relative bias |RB| <= 0.06", criterion2},
      {"95% CI coverage in [0.92, 0.975]", criterion3},
      {"oracle equivalences", criterion4},
      {"unbiasedness of g at beta0", criterion5},
      {"optimality ratios", criterion6},
      {"perturbation robustness", criterion7},
      {"wind-shaped workflow", criterion8},
      {"determinism", criterion9},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << "criterion " << i + 1 << " [" << (o.pass ? "PASS" : "FAIL") << "] " << criteria[i].first
              << ": " << o.detail << std::endl;
  }
  std::cout << (failed ? "acceptance: " + std::to_string(failed) + " criteria failed" : "acceptance: all criteria passed")
            << std::endl;
  return failed ? 1 : 0;
}

#include "mtgee/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "mtgee/dataset.hpp"
#include "mtgee/diagnostics.hpp"
#include "mtgee/error.hpp"
#include "mtgee/fit.hpp"
#include "mtgee/report.hpp"
#include "mtgee/simgen.hpp"

namespace mtgee::cli {

namespace {

using report::Json;

struct DataOptions {
  std::string path;
  std::string layout = "wide";
  std::string response;
  std::vector<std::string> exog;
  std::size_t lags = 2;
  bool intercept = true;
  std::string impute = "nearest";
  std::string time_col = "time";
  std::string unit_col = "unit";
};

struct ModelOptions {
  std::string link = "identity";
  std::string method = "newton";
  std::string corr = "independence";
  double alpha = 0.7;
  double tol = 1e-8;
  std::size_t max_iter = 50;
  double level = 0.95;
};

struct SimOptions {
  std::string design = "ar2";
  std::string truth = "cs";
  double alpha = 0.7;
  std::size_t n = 500;
  std::size_t m = 5;
  std::size_t s = 500;
  std::vector<double> beta0{0.5, 0.2};
  std::uint64_t seed = 1;
  double level = 0.95;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void add_data_options(CLI::App* app, DataOptions& d) {
  app->add_option("--data", d.path, "CSV data file")->required();
  app->add_option("--layout", d.layout, "wide | long")->check(CLI::IsMember({"wide", "long"}));
  app->add_option("--response", d.response, "comma-separated response columns");
  app->add_option("--exog", d.exog,
                  "comma-separated exogenous block (repeatable); 'none' disables");
  app->add_option("--lags", d.lags, "number of response lags");
  app->add_flag("--intercept,!--no-intercept", d.intercept, "include an intercept column");
  app->add_option("--impute", d.impute, "none | nearest")->check(CLI::IsMember({"none", "nearest"}));
  app->add_option("--time-col", d.time_col, "time column name");
  app->add_option("--unit-col", d.unit_col, "unit column name (long layout)");
}

void add_model_options(CLI::App* app, ModelOptions& m) {
  app->add_option("--link", m.link, "identity | logistic | exponential");
  app->add_option("--method", m.method, "newton | linear | two_step");
  app->add_option("--corr", m.corr, "independence | cs | ar1 | empirical");
  app->add_option("--alpha", m.alpha, "working correlation parameter");
  app->add_option("--tol", m.tol, "Newton tolerance on ||g||_inf");
  app->add_option("--max-iter", m.max_iter, "Newton iteration cap");
  app->add_option("--level", m.level, "confidence level");
}

void add_sim_options(CLI::App* app, SimOptions& s, bool with_truth) {
  app->add_option("--design", s.design, "simulation design")->check(CLI::IsMember({"ar2"}));
  if (with_truth) app->add_option("--truth", s.truth, "independence | cs | ar1");
  app->add_option("--alpha", s.alpha, "true and working correlation parameter");
  app->add_option("--n", s.n, "time steps per replication");
  app->add_option("--m", s.m, "cluster size");
  app->add_option("--beta0", s.beta0, "true AR(2) coefficients")->delimiter(',')->expected(2);
  app->add_option("--seed", s.seed, "RNG seed");
  app->add_option("--level", s.level, "confidence level");
}

DatasetSpec dataset_spec(const DataOptions& d) {
  DatasetSpec spec;
  spec.path = d.path;
  spec.layout = d.layout == "long" ? Layout::long_format : Layout::wide;
  spec.response_cols = split_list(d.response);
  if (!d.exog.empty()) {
    std::vector<std::vector<std::string>> blocks;
    for (const auto& e : d.exog) {
      if (e == "none") continue;
      blocks.push_back(split_list(e));
    }
    spec.exog_cols = std::move(blocks);
  }
  spec.lags = d.lags;
  spec.intercept = d.intercept;
  spec.impute = d.impute == "none" ? Impute::none : Impute::nearest_neighbor;
  spec.time_col = d.time_col;
  spec.unit_col = d.unit_col;
  return spec;
}

CorrProvider make_provider(const std::string& kind, double alpha) {
  switch (corr_kind_from_string(kind)) {
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
  throw ContractError("--corr fixed needs a matrix; use the library API");
}

// "independence", "cs:0.7", "ar1:0.5".
Matrix parse_true_corr(const std::string& text, std::size_t m) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const double alpha = colon == std::string::npos ? 0.0 : std::stod(text.substr(colon + 1));
  return build_fixed_corr(corr_kind_from_string(kind), alpha, m);
}

FitOptions fit_options(const ModelOptions& m) {
  FitOptions o;
  o.method = fit_method_from_string(m.method);
  o.newton.tol = m.tol;
  o.newton.max_iter = m.max_iter;
  o.level = m.level;
  return o;
}

SimDesign sim_design(const SimOptions& s, TruthPattern truth) {
  SimDesign d;
  d.n = s.n;
  d.m = s.m;
  d.beta0 = to_vector(s.beta0);
  d.truth = truth;
  d.alpha0 = s.alpha;
  d.seed = s.seed;
  return d;
}

std::optional<std::vector<Vector>> parse_next_exog(const std::vector<std::string>& blocks) {
  if (blocks.empty()) return std::nullopt;
  std::vector<Vector> out;
  for (const auto& b : blocks) {
    std::vector<double> v;
    for (const auto& s : split_list(b)) v.push_back(std::stod(s));
    out.push_back(to_vector(v));
  }
  return out;
}

Json data_summary(const Dataset& ds, const std::string& path) {
  return Json{{"path", path},
              {"n", ds.series.size()},
              {"m", ds.series.m()},
              {"p", ds.series.p()},
              {"units", ds.units},
              {"lags", ds.lags},
              {"intercept", ds.intercept},
              {"imputed", ds.imputed}};
}

void write_output(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write output file '" + path + "'");
  f << content;
}

void write_tables(const std::string& prefix, const MonteCarloReport& mc) {
  if (prefix.empty()) return;
  const std::pair<const char*, report::Metric> tables[] = {
      {"_rb.csv", report::Metric::rb},
      {"_re.csv", report::Metric::re},
      {"_bias.csv", report::Metric::bias},
      {"_mse.csv", report::Metric::mse},
      {"_coverage.csv", report::Metric::coverage},
  };
  for (const auto& [suffix, metric] : tables) {
    std::ofstream f(prefix + suffix, std::ios::binary);
    if (!f) throw DataError("cannot write table '" + prefix + suffix + "'");
    f << report::mc_table_csv(mc, metric);
  }
}

}  // namespace

int run_command(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Martingale estimating equations for clustered time series"};
  app.require_subcommand(1);
  std::string out_path;

  DataOptions fit_data;
  ModelOptions fit_model;
  bool fit_diag = false;
  std::vector<double> delta_grid{0.1, 0.25, 0.5};
  std::vector<double> d_grid;
  std::string true_corr;
  std::vector<std::string> next_exog;
  std::uint64_t diag_seed = 1;
  auto* fit_cmd = app.add_subcommand("fit", "fit a model to a CSV dataset");
  add_data_options(fit_cmd, fit_data);
  add_model_options(fit_cmd, fit_model);
  fit_cmd->add_flag("--diagnostics", fit_diag, "attach condition diagnostics");
  fit_cmd->add_option("--delta-grid", delta_grid, "delta values for the condition checkpoints")->delimiter(',');
  fit_cmd->add_option("--d-grid", d_grid, "perturbation budgets (must include 0)")->delimiter(',');
  fit_cmd->add_option("--true-corr", true_corr, "reference correlation, e.g. cs:0.7");
  fit_cmd->add_option("--next-exog", next_exog, "exogenous values for the prediction step");
  fit_cmd->add_option("--seed", diag_seed, "seed for the perturbation study");
  fit_cmd->add_option("--out", out_path, "output file (default stdout)");

  DataOptions pred_data;
  ModelOptions pred_model;
  std::vector<std::string> pred_next_exog;
  auto* pred_cmd = app.add_subcommand("predict", "fit, then predict the next response vector");
  add_data_options(pred_cmd, pred_data);
  add_model_options(pred_cmd, pred_model);
  pred_cmd->add_option("--next-exog", pred_next_exog, "exogenous values for the prediction step");
  pred_cmd->add_option("--out", out_path, "output file (default stdout)");

  SimOptions sim;
  std::string csv_prefix;
  bool serial = false;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo study for one truth pattern");
  add_sim_options(sim_cmd, sim, true);
  sim_cmd->add_option("--s", sim.s, "replications");
  sim_cmd->add_option("--csv-prefix", csv_prefix, "write CSV tables with this path prefix");
  sim_cmd->add_flag("--serial", serial, "disable parallel replications");
  sim_cmd->add_option("--out", out_path, "output file (default stdout)");

  SimOptions rep;
  auto* rep_cmd = app.add_subcommand("replicate-tables", "Monte Carlo study over all truth patterns");
  add_sim_options(rep_cmd, rep, false);
  rep_cmd->add_option("--s", rep.s, "replications");
  rep_cmd->add_option("--csv-prefix", csv_prefix, "write CSV tables with this path prefix");
  rep_cmd->add_flag("--serial", serial, "disable parallel replications");
  rep_cmd->add_option("--out", out_path, "output file (default stdout)");

  DataOptions diag_data;
  ModelOptions diag_model;
  SimOptions diag_sim;
  diag_sim.n = 2000;
  std::size_t reps = 100;
  auto* diag_cmd = app.add_subcommand("diagnose", "condition and optimality diagnostics");
  diag_cmd->add_option("--data", diag_data.path, "CSV data file (omit to simulate)");
  diag_cmd->add_option("--layout", diag_data.layout, "wide | long");
  diag_cmd->add_option("--response", diag_data.response, "comma-separated response columns");
  diag_cmd->add_option("--exog", diag_data.exog, "exogenous block (repeatable); 'none' disables");
  diag_cmd->add_option("--lags", diag_data.lags, "number of response lags");
  diag_cmd->add_flag("--intercept,!--no-intercept", diag_data.intercept, "include an intercept");
  diag_cmd->add_option("--impute", diag_data.impute, "none | nearest");
  diag_cmd->add_option("--time-col", diag_data.time_col, "time column name");
  diag_cmd->add_option("--unit-col", diag_data.unit_col, "unit column name");
  add_model_options(diag_cmd, diag_model);
  diag_cmd->add_option("--design", diag_sim.design, "simulation design")->check(CLI::IsMember({"ar2"}));
  diag_cmd->add_option("--truth", diag_sim.truth, "independence | cs | ar1");
  diag_cmd->add_option("--n", diag_sim.n, "time steps");
  diag_cmd->add_option("--m", diag_sim.m, "cluster size");
  diag_cmd->add_option("--beta0", diag_sim.beta0, "true AR(2) coefficients")->delimiter(',')->expected(2);
  diag_cmd->add_option("--seed", diag_sim.seed, "RNG seed");
  diag_cmd->add_option("--true-alpha", diag_sim.alpha, "true correlation parameter");
  diag_cmd->add_option("--reps", reps, "replications for the ergodicity check (0 skips)");
  diag_cmd->add_option("--delta-grid", delta_grid, "delta values for the condition checkpoints")->delimiter(',');
  diag_cmd->add_option("--d-grid", d_grid, "perturbation budgets (must include 0)")->delimiter(',');
  diag_cmd->add_option("--true-corr", true_corr, "reference correlation for data mode, e.g. cs:0.7");
  diag_cmd->add_option("--out", out_path, "output file (default stdout)");

  std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  }

  try {
    if (*fit_cmd || *pred_cmd) {
      const bool is_fit = static_cast<bool>(*fit_cmd);
      const DataOptions& dopt = is_fit ? fit_data : pred_data;
      const ModelOptions& mopt = is_fit ? fit_model : pred_model;
      const Dataset ds = parse_dataset(dataset_spec(dopt));
      const Link link(link_kind_from_string(mopt.link));
      const CorrProvider provider = make_provider(mopt.corr, mopt.alpha);
      FitOptions fopt = fit_options(mopt);
      if (is_fit && fit_diag) {
        fopt.diagnostics.enabled = true;
        fopt.diagnostics.delta_grid = delta_grid;
        fopt.diagnostics.d_grid = d_grid;
        fopt.diagnostics.seed = diag_seed;
        if (!true_corr.empty()) fopt.diagnostics.true_corr = parse_true_corr(true_corr, ds.series.m());
      }
      const FitResult res = fit(ds.series, link, provider, fopt);
      const Matrix x_next = ds.next_design(parse_next_exog(is_fit ? next_exog : pred_next_exog));
      const Vector y_next = predict_next(x_next, res.beta_hat, link);
      Json prediction{{"x_next", report::to_json(x_next)}, {"y_hat", report::to_json(y_next)}};
      Json payload;
      if (is_fit) {
        payload = report::to_json(res);
        payload["data"] = data_summary(ds, dopt.path);
        payload["prediction"] = std::move(prediction);
      } else {
        payload = Json{{"data", data_summary(ds, dopt.path)},
                       {"beta_hat", report::to_json(res.beta_hat)},
                       {"prediction", std::move(prediction)}};
      }
      write_output(out_path, report::dump(report::envelope(is_fit ? "fit" : "predict", payload)), out);
      return kSuccess;
    }

    if (*sim_cmd || *rep_cmd) {
      const bool all = static_cast<bool>(*rep_cmd);
      const SimOptions& so = all ? rep : sim;
      std::vector<SimDesign> designs;
      if (all) {
        for (TruthPattern t : {TruthPattern::independence, TruthPattern::cs, TruthPattern::ar1}) {
          designs.push_back(sim_design(so, t));
        }
      } else {
        designs.push_back(sim_design(so, truth_from_string(so.truth)));
      }
      const MonteCarloReport mc =
          monte_carlo_study(designs, standard_estimators(so.alpha), so.s, so.level, !serial);
      write_tables(csv_prefix, mc);
      write_output(out_path,
                   report::dump(report::envelope(all ? "replicate-tables" : "simulate", report::to_json(mc))),
                   out);
      return kSuccess;
    }

    if (*diag_cmd) {
      const Link link(link_kind_from_string(diag_model.link));
      const CorrProvider provider = make_provider(diag_model.corr, diag_model.alpha);
      const FitMethod method = fit_method_from_string(diag_model.method);
      Json payload;
      ClusterSeries data;
      std::optional<Matrix> reference;
      std::optional<SimDesign> design;
      if (!diag_data.path.empty()) {
        const Dataset ds = parse_dataset(dataset_spec(diag_data));
        data = ds.series;
        payload["data"] = data_summary(ds, diag_data.path);
        if (!true_corr.empty()) reference = parse_true_corr(true_corr, data.m());
      } else {
        if (link != Link::identity()) throw ContractError("the simulated design uses the identity link");
        design = sim_design(diag_sim, truth_from_string(diag_sim.truth));
        data = generate_ar2(*design, 0);
        reference = truth_corr(*design);
        payload["design"] = report::to_json(*design);
      }
      const Estimate est = estimate(data, link, provider, method);
      payload["beta_hat"] = report::to_json(est.beta);
      ConditionReport cond = eigen_conditions(est.ctx, est.beta, delta_grid);
      if (design && reps > 0) {
        std::vector<ClusterSeries> replications;
        replications.reserve(reps);
        for (std::size_t r = 0; r < reps; ++r) replications.push_back(generate_ar2(*design, r + 1));
        cond.ergodicity = ergodicity_check(replications, design->beta0, link, provider);
      }
      payload["conditions"] = report::to_json(cond);
      payload["leverage"] = report::to_json(leverage(est.ctx, est.beta));
      if (reference || !d_grid.empty()) {
        OptimalityReport opt;
        if (reference) opt = optimality_ratios(est.ctx, est.beta, *reference);
        if (!d_grid.empty()) {
          opt.perturb_drift = perturbation_sensitivity(data, link, provider, method, reference,
                                                       d_grid, diag_sim.seed);
        }
        payload["optimality"] = report::to_json(opt);
      } else {
        payload["optimality"] = nullptr;
      }
      write_output(out_path, report::dump(report::envelope("diagnose", payload)), out);
      return kSuccess;
    }
  } catch (const ContractError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const Error& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const std::invalid_argument& e) {
    err << "usage error: invalid number (" << e.what() << ")\n";
    return kUsageError;
  } catch (const std::out_of_range& e) {
    err << "usage error: number out of range (" << e.what() << ")\n";
    return kUsageError;
  }
  err << "usage error: no command\n";
  return kUsageError;
}

}  // namespace mtgee::cli

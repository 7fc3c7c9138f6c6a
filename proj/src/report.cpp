#include "mtgee/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace mtgee::report {

namespace {

std::string format_double(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  // Keep doubles recognizable as floating point after a parse.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

void dump_impl(const Json& j, int indent, int depth, std::string& out) {
  const auto newline = [&](int d) {
    if (indent < 0) return;
    out.push_back('\n');
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out.push_back('{');
      bool first = true;
      for (const auto& [key, val] : j.items()) {
        if (!first) out.push_back(',');
        first = false;
        newline(depth + 1);
        out += Json(key).dump();
        out += indent < 0 ? ":" : ": ";
        dump_impl(val, indent, depth + 1, out);
      }
      newline(depth);
      out.push_back('}');
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out.push_back('[');
      bool first = true;
      for (const auto& val : j) {
        if (!first) out.push_back(',');
        first = false;
        newline(depth + 1);
        dump_impl(val, indent, depth + 1, out);
      }
      newline(depth);
      out.push_back(']');
      return;
    }
    case Json::value_t::number_float:
      out += format_double(j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

Json verdict(Verdict v) { return std::string(to_string(v)); }

template <class T>
Json array_of(const std::vector<T>& v) {
  Json a = Json::array();
  for (const auto& x : v) a.push_back(x);
  return a;
}

}  // namespace

Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json to_json(const Matrix& m) {
  Json a = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    a.push_back(std::move(row));
  }
  return a;
}

Json to_json(const SolveReport& r) {
  Json trace = Json::array();
  for (const auto& tp : r.trace) {
    trace.push_back(Json{{"beta", to_json(tp.beta)}, {"g_norm", tp.g_norm}});
  }
  return Json{{"converged", r.converged},
              {"iterations", r.iterations},
              {"final_residual_norm", r.final_residual_norm},
              {"trace", std::move(trace)}};
}

Json to_json(const SandwichEstimate& s) {
  return Json{{"H_tilde", to_json(s.H_tilde)},
              {"M_tilde", to_json(s.M_tilde)},
              {"Psi_tilde", to_json(s.Psi_tilde)},
              {"se", to_json(s.se)}};
}

Json to_json(const ErgodicityReport& r) {
  Json dev = Json::array();
  for (const auto& row : r.deviation) dev.push_back(array_of(row));
  return Json{{"checkpoints", array_of(r.checkpoints)},
              {"median_deviation", array_of(r.median)},
              {"deviation", std::move(dev)},
              {"verdict", verdict(r.verdict)}};
}

Json to_json(const ConditionReport& r) {
  Json sd = Json::array();
  for (const auto& s : r.s_delta) {
    sd.push_back(Json{{"delta", s.delta}, {"ratio", array_of(s.ratio)}, {"verdict", verdict(s.verdict)}});
  }
  Json j{{"checkpoints", array_of(r.checkpoints)},
         {"lambda_min", array_of(r.lambda_min_traj)},
         {"lambda_max", array_of(r.lambda_max_traj)},
         {"growth_verdict", verdict(r.growth_verdict)},
         {"s_delta", std::move(sd)}};
  j["ergodicity"] = r.ergodicity ? to_json(*r.ergodicity) : Json(nullptr);
  return j;
}

Json to_json(const OptimalityReport& r) {
  Json drift = Json::array();
  for (const auto& d : r.perturb_drift) {
    drift.push_back(Json{{"budget", d.budget},
                         {"beta_drift", d.beta_drift},
                         {"det_ratio_drift", d.det_ratio_drift ? Json(*d.det_ratio_drift) : Json(nullptr)}});
  }
  return Json{{"checkpoints", array_of(r.checkpoints)},
              {"det_ratio_H", array_of(r.det_ratio_H)},
              {"det_ratio_M", array_of(r.det_ratio_M)},
              {"perturb_drift", std::move(drift)}};
}

Json to_json(const LeverageStats& l) {
  return Json{{"gamma_prime", l.gamma_prime}, {"a_prime", l.a_prime}};
}

Json to_json(const FitResult& r) {
  Json ci = Json::array();
  for (const auto& iv : r.intervals) ci.push_back(Json::array({iv.lo, iv.hi}));
  Json j{{"method", std::string(to_string(r.method))},
         {"link", std::string(to_string(r.link.kind()))},
         {"corr", r.corr_label},
         {"n", r.n},
         {"m", r.m},
         {"p", r.p},
         {"beta_hat", to_json(r.beta_hat)},
         {"se", to_json(r.sandwich.se)},
         {"level", r.level},
         {"ci", std::move(ci)},
         {"Psi_tilde", to_json(r.sandwich.Psi_tilde)},
         {"H_tilde", to_json(r.sandwich.H_tilde)},
         {"M_tilde", to_json(r.sandwich.M_tilde)}};
  j["solver"] = r.solve ? to_json(*r.solve) : Json(nullptr);
  if (r.method == FitMethod::two_step) {
    Json trace = Json::array();
    for (const auto& m : r.corr_trace) trace.push_back(to_json(m));
    j["corr_trace"] = std::move(trace);
    j["identity_fallbacks"] = r.identity_fallbacks;
  }
  if (r.diagnostics) {
    j["diagnostics"] = Json{
        {"conditions", to_json(r.diagnostics->conditions)},
        {"leverage", to_json(r.diagnostics->leverage)},
        {"optimality", r.diagnostics->optimality ? to_json(*r.diagnostics->optimality) : Json(nullptr)}};
  } else {
    j["diagnostics"] = nullptr;
  }
  return j;
}

Json to_json(const SimDesign& d) {
  return Json{{"design", "ar2"},
              {"n", d.n},
              {"m", d.m},
              {"beta0", to_json(d.beta0)},
              {"truth", std::string(to_string(d.truth))},
              {"alpha0", d.alpha0},
              {"seed", d.seed}};
}

Json to_json(const MonteCarloReport& r) {
  Json designs = Json::array();
  for (const auto& d : r.designs) designs.push_back(to_json(d));
  Json cells = Json::array();
  for (const auto& c : r.cells) {
    cells.push_back(Json{{"estimator", c.estimator},
                         {"truth", std::string(to_string(c.truth))},
                         {"replications", c.replications},
                         {"bias", to_json(c.bias)},
                         {"rb", to_json(c.rb)},
                         {"mse", to_json(c.mse)},
                         {"re", c.re.size() ? to_json(c.re) : Json(nullptr)},
                         {"coverage", to_json(c.coverage)}});
  }
  return Json{{"s", r.s},
              {"level", r.level},
              {"failures", r.failures},
              {"estimators", r.estimators},
              {"designs", std::move(designs)},
              {"cells", std::move(cells)}};
}

Json envelope(std::string_view command, const Json& payload) {
  Json j{{"schema", std::string(kSchema)},
         {"command", std::string(command)},
         {"metadata", Json{{"tool", "mtgee"}, {"version", "0.1.0"}}}};
  for (const auto& [k, v] : payload.items()) j[k] = v;
  return j;
}

std::string dump(const Json& j, int indent) {
  std::string out;
  dump_impl(j, indent, 0, out);
  out.push_back('\n');
  return out;
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::bias:
      return "bias";
    case Metric::rb:
      return "rb";
    case Metric::mse:
      return "mse";
    case Metric::re:
      return "re";
    case Metric::coverage:
      return "coverage";
  }
  return "unknown";
}

std::string mc_table_csv(const MonteCarloReport& r, Metric metric) {
  std::ostringstream os;
  os << "estimator,truth,component,value\n";
  for (const auto& c : r.cells) {
    const Vector* v = nullptr;
    switch (metric) {
      case Metric::bias:
        v = &c.bias;
        break;
      case Metric::rb:
        v = &c.rb;
        break;
      case Metric::mse:
        v = &c.mse;
        break;
      case Metric::re:
        v = &c.re;
        break;
      case Metric::coverage:
        v = &c.coverage;
        break;
    }
    for (Eigen::Index k = 0; k < v->size(); ++k) {
      os << c.estimator << ',' << to_string(c.truth) << ',' << k + 1 << ','
         << format_double((*v)[k]) << '\n';
    }
  }
  return os.str();
}

}  // namespace mtgee::report

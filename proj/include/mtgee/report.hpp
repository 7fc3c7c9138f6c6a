#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "mtgee/diagnostics.hpp"
#include "mtgee/fit.hpp"
#include "mtgee/simgen.hpp"

namespace mtgee::report {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kSchema = "mtgee/1";

Json to_json(const Vector& v);
Json to_json(const Matrix& a);
Json to_json(const SolveReport& r);
Json to_json(const SandwichEstimate& s);
Json to_json(const ConditionReport& r);
Json to_json(const ErgodicityReport& r);
Json to_json(const OptimalityReport& r);
Json to_json(const LeverageStats& l);
Json to_json(const FitResult& r);
Json to_json(const MonteCarloReport& r);
Json to_json(const SimDesign& d);

// {"schema": "mtgee/1", "command": ..., "metadata": {...}, <payload fields>}.
Json envelope(std::string_view command, const Json& payload);

// Serializes with every floating-point value printed with 17 significant
// digits, so parse(dump(x)) reproduces every double exactly. Non-finite
// numbers become null. Output is byte-stable for equal inputs.
std::string dump(const Json& j, int indent = 2);

enum class Metric { bias, rb, mse, re, coverage };
std::string_view to_string(Metric m);

// Long-form table with header "estimator,truth,component,value", one row per
// (estimator, truth, component).
std::string mc_table_csv(const MonteCarloReport& r, Metric metric);

}  // namespace mtgee::report

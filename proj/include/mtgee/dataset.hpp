#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mtgee/model.hpp"

namespace mtgee {

enum class Layout { wide, long_format };
enum class Impute { none, nearest_neighbor };

// How to turn a CSV file into a lagged cluster series.
//
// wide: one row per time, one column per unit and variable.
// long: one row per (time, unit) with one column per variable; the
//       response and exogenous names refer to those variable columns.
//
// Regressor columns are ordered: intercept, lag blocks newest first
// (y_{i-1}, ..., y_{i-lags}), then one block per exogenous variable.
struct DatasetSpec {
  std::string path;
  Layout layout = Layout::wide;
  // wide: m column names; long: a single variable name. Empty selects every
  // column whose name starts with 'y' (wide) or the variable "y" (long).
  std::vector<std::string> response_cols;
  // wide: m column names per block; long: one variable name per block.
  // Unset selects the 'z'-prefixed columns (wide) or "z" (long) when present.
  std::optional<std::vector<std::vector<std::string>>> exog_cols;
  std::size_t lags = 2;
  bool intercept = true;
  Impute impute = Impute::nearest_neighbor;
  std::string time_col = "time";
  std::string unit_col = "unit";
};

struct Dataset {
  ClusterSeries series;
  // Every row, including the leading `lags` rows used as initial conditions.
  std::vector<std::string> times;
  std::vector<Vector> responses;
  // exog[b][t]: block b at row t, after imputation.
  std::vector<std::vector<Vector>> exog;
  std::vector<std::string> units;
  std::size_t lags = 0;
  bool intercept = true;
  std::size_t imputed = 0;

  // Regressors for the step after the last row. Exogenous values default
  // to the last observed row of each block.
  Matrix next_design(const std::optional<std::vector<Vector>>& next_exog = std::nullopt) const;
};

// Throws DataError for missing files or responses and ParseError (with the
// line number) for ragged or non-numeric rows.
Dataset parse_dataset(const DatasetSpec& spec);
Dataset parse_dataset_text(std::string_view text, const DatasetSpec& spec);

// Wide-layout CSV of every row after imputation: the time column, one
// column per unit named after it, then exogenous blocks named z<b>_<unit>.
// Values are written with 17 significant digits, so parsing the output with
// matching column names rebuilds the same series.
std::string to_csv(const Dataset& ds);

}  // namespace mtgee

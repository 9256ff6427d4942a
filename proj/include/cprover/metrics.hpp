#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cprover {

/// Unbiased pass@k, 1 - C(n-c, k) / C(n, k). Throws std::invalid_argument
/// unless 0 <= c <= n and 1 <= k <= n.
double pass_at_k(int n, int c, int k);

struct AttemptTally {
  std::string name;
  int n = 0;  // attempts
  int c = 0;  // successes
  std::optional<int> n_d;
  std::optional<int> n_s;
  int iteration = 0;
};

/// Tallies of one iteration, one entry per statement.
using IterationTallies = std::vector<AttemptTally>;

/// Fraction of statements solved in any iteration up to and including k.
/// Throws std::invalid_argument when iterations disagree on the statement set.
std::vector<double> cumulative_pass_rate(const std::vector<IterationTallies>& by_iteration);

/// N_D -> cumulative series, N_S pooled. Throws std::invalid_argument on empty
/// input or tallies without difficulty.
std::map<int, std::vector<double>> difficulty_report(const std::vector<IterationTallies>& by_iteration);

struct MetricsRow {
  int iteration = 0;
  std::string set;
  std::optional<int> n_d;  // nullopt: the whole set
  int n_statements = 0;
  double pass1 = 0;
  std::optional<double> pass8;  // only when every statement had >= 8 attempts
  double cumulative = 0;
};

/// Rows for one set: a whole-set row per iteration, then one per N_D level.
std::vector<MetricsRow> metrics_rows(const std::string& set, const std::vector<IterationTallies>& by_iteration);

std::string metrics_csv(const std::vector<MetricsRow>& rows);
std::string metrics_json(const std::vector<MetricsRow>& rows);

}  // namespace cprover

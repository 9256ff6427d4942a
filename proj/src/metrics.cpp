#include "cprover/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace cprover {

double pass_at_k(int n, int c, int k) {
  if (n < 0 || c < 0 || c > n) throw std::invalid_argument("pass@k needs 0 <= c <= n");
  if (k < 1 || k > n) throw std::invalid_argument("pass@k needs 1 <= k <= n");
  if (n - c < k) return 1.0;
  double fail = 1.0;
  for (int i = n - c + 1; i <= n; ++i) fail *= 1.0 - static_cast<double>(k) / i;
  return 1.0 - fail;
}

namespace {

std::vector<std::string> universe(const IterationTallies& t) {
  std::vector<std::string> names;
  names.reserve(t.size());
  for (const auto& a : t) names.push_back(a.name);
  std::sort(names.begin(), names.end());
  return names;
}

std::vector<double> cumulative_over(const std::vector<IterationTallies>& by_iteration,
                                    const std::function<bool(const AttemptTally&)>& keep) {
  std::vector<double> series;
  std::set<std::string> solved;
  for (const auto& it : by_iteration) {
    std::size_t total = 0;
    for (const auto& a : it) {
      if (!keep(a)) continue;
      ++total;
      if (a.c > 0) solved.insert(a.name);
    }
    series.push_back(total == 0 ? 0.0 : static_cast<double>(solved.size()) / static_cast<double>(total));
  }
  return series;
}

void check_universe(const std::vector<IterationTallies>& by_iteration) {
  if (by_iteration.empty()) return;
  auto first = universe(by_iteration.front());
  if (std::adjacent_find(first.begin(), first.end()) != first.end())
    throw std::invalid_argument("duplicate statement in one iteration");
  for (const auto& it : by_iteration) {
    if (universe(it) != first) throw std::invalid_argument("iterations disagree on the statement set");
  }
}

}  // namespace

std::vector<double> cumulative_pass_rate(const std::vector<IterationTallies>& by_iteration) {
  check_universe(by_iteration);
  return cumulative_over(by_iteration, [](const AttemptTally&) { return true; });
}

std::map<int, std::vector<double>> difficulty_report(const std::vector<IterationTallies>& by_iteration) {
  if (by_iteration.empty() || by_iteration.front().empty()) throw std::invalid_argument("no tallies");
  check_universe(by_iteration);
  std::set<int> levels;
  for (const auto& it : by_iteration) {
    for (const auto& a : it) {
      if (!a.n_d) throw std::invalid_argument("tally for '" + a.name + "' has no difficulty");
      levels.insert(*a.n_d);
    }
  }
  std::map<int, std::vector<double>> out;
  for (int d : levels) out[d] = cumulative_over(by_iteration, [d](const AttemptTally& a) { return a.n_d == d; });
  return out;
}

std::vector<MetricsRow> metrics_rows(const std::string& set, const std::vector<IterationTallies>& by_iteration) {
  check_universe(by_iteration);
  std::vector<MetricsRow> rows;
  std::set<int> levels;
  bool all_levels = !by_iteration.empty() && !by_iteration.front().empty();
  for (const auto& it : by_iteration) {
    for (const auto& a : it) {
      if (a.n_d) {
        levels.insert(*a.n_d);
      } else {
        all_levels = false;
      }
    }
  }
  if (!all_levels) levels.clear();

  auto emit = [&](std::optional<int> level) {
    auto keep = [level](const AttemptTally& a) { return !level || a.n_d == level; };
    auto cumulative = cumulative_over(by_iteration, keep);
    for (std::size_t k = 0; k < by_iteration.size(); ++k) {
      MetricsRow r;
      r.iteration = by_iteration[k].empty() ? static_cast<int>(k) : by_iteration[k].front().iteration;
      r.set = set;
      r.n_d = level;
      double p1 = 0, p8 = 0;
      bool has8 = true;
      for (const auto& a : by_iteration[k]) {
        if (!keep(a)) continue;
        ++r.n_statements;
        if (a.n > 0) p1 += pass_at_k(a.n, a.c, 1);
        if (a.n >= 8) {
          p8 += pass_at_k(a.n, a.c, 8);
        } else {
          has8 = false;
        }
      }
      if (r.n_statements > 0) {
        r.pass1 = p1 / r.n_statements;
        if (has8) r.pass8 = p8 / r.n_statements;
      }
      r.cumulative = cumulative[k];
      rows.push_back(r);
    }
  };
  emit(std::nullopt);
  for (int d : levels) emit(d);
  std::stable_sort(rows.begin(), rows.end(), [](const MetricsRow& a, const MetricsRow& b) { return a.iteration < b.iteration; });
  return rows;
}

namespace {

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::string out = "iteration,set,N_D,n_statements,pass1,pass8,cumulative\n";
  for (const auto& r : rows) {
    out += std::to_string(r.iteration) + "," + r.set + "," + (r.n_d ? std::to_string(*r.n_d) : "all") + "," +
           std::to_string(r.n_statements) + "," + fixed(r.pass1) + "," + (r.pass8 ? fixed(*r.pass8) : "") + "," +
           fixed(r.cumulative) + "\n";
  }
  return out;
}

std::string metrics_json(const std::vector<MetricsRow>& rows) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["iteration"] = r.iteration;
    j["set"] = r.set;
    j["N_D"] = r.n_d ? nlohmann::ordered_json(*r.n_d) : nlohmann::ordered_json(nullptr);
    j["n_statements"] = r.n_statements;
    j["pass1"] = r.pass1;
    j["pass8"] = r.pass8 ? nlohmann::ordered_json(*r.pass8) : nlohmann::ordered_json(nullptr);
    j["cumulative"] = r.cumulative;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

}  // namespace cprover

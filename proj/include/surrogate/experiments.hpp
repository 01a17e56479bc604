#pragma once

// Monte Carlo meta-regression experiments and the real-data workflow that
// turns published per-trial counts into estimates, a regression fit and
// rho-sensitivity confidence regions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "surrogate/asymptotics.hpp"
#include "surrogate/errors.hpp"
#include "surrogate/inference.hpp"
#include "surrogate/model.hpp"
#include "surrogate/regions.hpp"
#include "surrogate/rng.hpp"
#include "surrogate/sampling.hpp"

namespace surrogate {

enum class ScenarioRule {
  Fixed,    // every trial uses one scenario
  Uniform,  // each trial draws a scenario with equal probability
};

struct SimulationDesign {
  std::string name = "A";
  int n_trials = 10;      // n_T, trials per meta-regression
  int repetitions = 100;  // N
  std::int64_t n = 20000;
  std::int64_t m = 20000;
  ScenarioRule rule = ScenarioRule::Fixed;
  std::size_t fixed_scenario = 0;
  double alpha = 0.05;
  std::vector<TrialParams> scenarios = scenario_table();
};

// Defaults for designs A-D.
inline SimulationDesign make_design(const std::string& name) {
  SimulationDesign d;
  d.name = name;
  if (name == "A") {
    d.fixed_scenario = 0;
  } else if (name == "B") {
    d.fixed_scenario = 1;
  } else if (name == "C") {
    d.rule = ScenarioRule::Uniform;
  } else if (name == "D") {
    d.rule = ScenarioRule::Uniform;
    d.n = d.m = 100000;
  } else {
    throw DomainError("unknown simulation design '" + name + "' (expected A, B, C or D)");
  }
  return d;
}

inline void check_design(const SimulationDesign& d) {
  if (d.n_trials < 3) throw DomainError("design " + d.name + ": n_T must be >= 3");
  if (d.repetitions < 1) throw DomainError("design " + d.name + ": N must be >= 1");
  if (d.n < 1 || d.m < 1) throw DomainError("design " + d.name + ": arm sizes must be >= 1");
  if (!(d.alpha > 0.0 && d.alpha < 1.0)) throw DomainError("design " + d.name + ": alpha must be in (0,1)");
  if (d.scenarios.empty()) throw DomainError("design " + d.name + ": no scenarios");
  if (d.rule == ScenarioRule::Fixed && d.fixed_scenario >= d.scenarios.size())
    throw DomainError("design " + d.name + ": fixed scenario index out of range");
}

struct ScatterRow {
  int repetition = 0;
  int trial = 0;
  std::size_t scenario = 0;
  EndpointPair truth;
  EndpointEstimate estimate;
  int resamples = 0;
};

struct RepetitionResult {
  double beta1 = 0.0;
  double p_value = 1.0;
  bool excluded = false;  // slope not identifiable in this repetition
};

struct SimulationSummary {
  std::string design;
  int repetitions = 0;
  int n_trials = 0;
  std::int64_t n = 0, m = 0;
  double alpha = 0.05;
  double mean_beta1 = 0.0;
  double rejection_rate = 0.0;
  double mc_se_rejection = 0.0;
  int excluded = 0;
  long total_resamples = 0;
  std::vector<RepetitionResult> per_repetition;
  std::vector<ScatterRow> scatter;
};

inline std::uint64_t design_seed(std::uint64_t master_seed, const std::string& name) {
  std::uint64_t salt = 0;
  for (unsigned char ch : name) salt = salt * 131 + ch;
  return mix_seed(master_seed, salt);
}

namespace detail {

struct RepetitionOutput {
  RepetitionResult result;
  std::vector<ScatterRow> rows;
};

inline RepetitionOutput run_repetition(const SimulationDesign& d,
                                       const std::vector<EndpointPair>& truths,
                                       std::uint64_t seed, int rep) {
  const auto r = static_cast<std::uint64_t>(rep);
  Rng scenario_rng(SeedSpec{seed, 0, r}, StreamTag::ScenarioDraw);

  RepetitionOutput out;
  out.rows.reserve(static_cast<std::size_t>(d.n_trials));
  std::vector<DataPoint> pts;
  pts.reserve(static_cast<std::size_t>(d.n_trials));
  for (int t = 0; t < d.n_trials; ++t) {
    const std::size_t idx =
        d.rule == ScenarioRule::Fixed ? d.fixed_scenario : scenario_rng.below(d.scenarios.size());
    const auto sim = simulate_trial(d.scenarios[idx], d.n, d.m,
                                    SeedSpec{seed, static_cast<std::uint64_t>(t), r});
    out.rows.push_back({rep, t, idx, truths[idx], sim.estimate, sim.resamples});
    pts.push_back({sim.estimate.S_hat, sim.estimate.M_hat});
  }
  try {
    const MetaFit fit = ols_fit(std::span<const DataPoint>(pts));
    out.result = {fit.beta1, fit.p_value, false};
  } catch (const NonIdentifiable&) {
    out.result.excluded = true;
  }
  return out;
}

}  // namespace detail

// Results depend only on (design, master_seed); the worker count changes
// wall time, never output.
inline SimulationSummary run_simulation(const SimulationDesign& d, std::uint64_t master_seed,
                                        unsigned workers = 1) {
  check_design(d);
  std::vector<EndpointPair> truths;
  for (const auto& s : d.scenarios) truths.push_back(derive_endpoints(s));
  const std::uint64_t seed = design_seed(master_seed, d.name);

  std::vector<detail::RepetitionOutput> reps(static_cast<std::size_t>(d.repetitions));
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(d.repetitions)));
  if (workers == 1) {
    for (int r = 0; r < d.repetitions; ++r) reps[r] = detail::run_repetition(d, truths, seed, r);
  } else {
    std::vector<std::jthread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int r = static_cast<int>(w); r < d.repetitions; r += static_cast<int>(workers))
            reps[r] = detail::run_repetition(d, truths, seed, r);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    pool.clear();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  SimulationSummary s;
  s.design = d.name;
  s.repetitions = d.repetitions;
  s.n_trials = d.n_trials;
  s.n = d.n;
  s.m = d.m;
  s.alpha = d.alpha;
  s.scatter.reserve(static_cast<std::size_t>(d.repetitions * d.n_trials));
  double beta_sum = 0.0;
  int rejections = 0;
  for (auto& rep : reps) {
    s.per_repetition.push_back(rep.result);
    if (rep.result.excluded) {
      ++s.excluded;
      continue;
    }
    beta_sum += rep.result.beta1;
    if (rep.result.p_value < d.alpha) ++rejections;
    for (auto& row : rep.rows) {
      s.total_resamples += row.resamples;
      s.scatter.push_back(row);
    }
  }
  const int used = d.repetitions - s.excluded;
  if (used > 0) {
    s.mean_beta1 = beta_sum / used;
    s.rejection_rate = static_cast<double>(rejections) / used;
    s.mc_se_rejection = std::sqrt(s.rejection_rate * (1.0 - s.rejection_rate) / used);
  }
  return s;
}

// Slope of the regression on true (S, M) over the design's scenario set, or
// nothing when the truth carries no variation in S.
inline std::optional<double> oracle_slope(const SimulationDesign& d) {
  std::vector<DataPoint> pts;
  if (d.rule == ScenarioRule::Fixed) return std::nullopt;
  for (const auto& s : d.scenarios) {
    const auto e = derive_endpoints(s);
    pts.push_back({e.S, e.M});
  }
  if (pts.size() < 3) return std::nullopt;
  try {
    const double b = ols_fit(std::span<const DataPoint>(pts)).beta1;
    return std::abs(b) < 1e-12 ? 0.0 : b;
  } catch (const NonIdentifiable&) {
    return std::nullopt;
  }
}

struct Table2Row {
  std::string design;
  std::optional<double> beta1;  // empty: not identifiable
  double mean_beta1 = 0.0;
  double type1_error = 0.0;
  double mc_se = 0.0;
  int repetitions = 0;
};

struct Table2Report {
  std::vector<Table2Row> rows_n100;
  std::vector<Table2Row> rows_n1000;
};

inline Table2Row table2_row(const SimulationDesign& d, const SimulationSummary& s) {
  return {d.name, oracle_slope(d), s.mean_beta1, s.rejection_rate, s.mc_se_rejection, s.repetitions};
}

inline Table2Report table2_report(std::uint64_t seed, unsigned workers = 1,
                                  const std::vector<TrialParams>& scenarios = scenario_table()) {
  Table2Report report;
  for (const char* name : {"A", "B", "C", "D"}) {
    for (int reps : {100, 1000}) {
      SimulationDesign d = make_design(name);
      d.scenarios = scenarios;
      d.repetitions = reps;
      const auto row = table2_row(d, run_simulation(d, seed, workers));
      (reps == 100 ? report.rows_n100 : report.rows_n1000).push_back(row);
    }
  }
  return report;
}

// --- real-data workflow -------------------------------------------------------

struct TrialSummaryRecord {
  std::string trial_id;
  std::int64_t n_control = 0;
  std::int64_t n_screen = 0;
  std::int64_t late_control = 0;
  std::int64_t late_screen = 0;
  std::int64_t deaths_control = 0;
  std::int64_t deaths_screen = 0;
};

inline constexpr std::int64_t kLowCountThreshold = 20;

inline ValidationResult validate(const TrialSummaryRecord& r) {
  ValidationResult out;
  if (r.n_control < 1) out.violations.push_back("n_control must be >= 1");
  if (r.n_screen < 1) out.violations.push_back("n_screen must be >= 1");
  const std::pair<const char*, std::int64_t> counts[] = {
      {"late_control", r.late_control},     {"late_screen", r.late_screen},
      {"deaths_control", r.deaths_control}, {"deaths_screen", r.deaths_screen}};
  for (const auto& [name, v] : counts)
    if (v < 0) out.violations.push_back(std::string(name) + " must be >= 0");
  if (r.late_control > r.n_control) out.violations.push_back("late_control exceeds n_control");
  if (r.deaths_control > r.n_control) out.violations.push_back("deaths_control exceeds n_control");
  if (r.late_screen > r.n_screen) out.violations.push_back("late_screen exceeds n_screen");
  if (r.deaths_screen > r.n_screen) out.violations.push_back("deaths_screen exceeds n_screen");
  return out;
}

inline bool is_low_count(const TrialSummaryRecord& r) {
  return std::min({r.late_control, r.late_screen, r.deaths_control, r.deaths_screen}) <
         kLowCountThreshold;
}

struct TrialAnalysis {
  TrialSummaryRecord record;
  EndpointEstimate estimate;
  MarginalVariances variances;  // sqrt(n_control) units
  bool low_count = false;
  std::vector<WaldRegion> regions;  // one per rho value, in input order
};

struct RejectedRecord {
  std::string trial_id;
  std::string reason;
};

struct AnalysisBundle {
  std::vector<TrialAnalysis> trials;
  std::vector<RejectedRecord> rejected;
  MetaFit fit;
  std::vector<double> rho_values;
  double alpha = 0.10;
  double threshold = 0.0;
};

inline const std::vector<double> kDefaultRhoSweep{0.1, 0.66, 0.9};

inline AnalysisBundle analyze_meta(const std::vector<TrialSummaryRecord>& records,
                                   const std::vector<double>& rho_values = kDefaultRhoSweep,
                                   double alpha = 0.10, double ci_level = 0.95) {
  if (rho_values.empty()) throw DomainError("analyze_meta: empty rho list");
  for (double rho : rho_values)
    if (!(std::abs(rho) < 1.0)) throw DomainError("analyze_meta: rho values must satisfy |rho| < 1");

  AnalysisBundle bundle;
  bundle.rho_values = rho_values;
  bundle.alpha = alpha;
  bundle.threshold = chi2_quantile_2df(alpha);

  for (const auto& rec : records) {
    if (auto v = validate(rec); !v) {
      bundle.rejected.push_back({rec.trial_id, v.violations.front()});
      continue;
    }
    TrialAnalysis ta;
    ta.record = rec;
    try {
      ta.estimate = estimate_from_marginals(rec.n_control, rec.late_control, rec.deaths_control,
                                            rec.n_screen, rec.late_screen, rec.deaths_screen);
      ta.variances = marginal_variances(ta.estimate.p_late_control, ta.estimate.p_late_screen,
                                        ta.estimate.p_death_control, ta.estimate.p_death_screen,
                                        double(rec.n_control), double(rec.n_screen));
      ta.low_count = is_low_count(rec);
      for (double rho : rho_values) {
        WaldRegion region = wald_region(ta.estimate, ta.variances.var_S, ta.variances.var_M, rho, alpha);
        region.low_count = ta.low_count;
        ta.regions.push_back(region);
      }
    } catch (const Error& e) {
      bundle.rejected.push_back({rec.trial_id, e.what()});
      continue;
    }
    bundle.trials.push_back(std::move(ta));
  }
  if (bundle.trials.size() < 3)
    throw InsufficientData("analyze_meta: fewer than 3 usable trial records");

  std::vector<DataPoint> pts;
  for (const auto& t : bundle.trials) pts.push_back({t.estimate.S_hat, t.estimate.M_hat});
  bundle.fit = ols_fit(std::span<const DataPoint>(pts), {}, ci_level);
  return bundle;
}

}  // namespace surrogate

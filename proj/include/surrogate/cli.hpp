#pragma once

// Command-line front end. Exit codes: 0 success, 1 runtime failure,
// 2 usage or input-schema error.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "surrogate/asymptotics.hpp"
#include "surrogate/experiments.hpp"
#include "surrogate/io.hpp"
#include "surrogate/model.hpp"

namespace surrogate::cli {

inline constexpr const char* kOutputDirEnv = "SURROGATE_OUTPUT_DIR";

struct CliConfig {
  std::string subcommand;
  std::uint64_t seed = 20240601;
  std::string output_dir;
  bool force = false;
  unsigned workers = 1;
  std::string format = "csv";

  // simulate / table2
  std::string design;
  int repetitions = 100;
  int n_trials = 10;
  std::int64_t n = 0, m = 0;  // 0: design default
  double test_alpha = 0.05;
  std::string param_set = "reconstructed";
  std::string registry_path;

  // theorem-check
  long draws = 10000;
  bool violate = false;
  double n_over_m = 1.0;

  // analyze
  std::string csv_path;
  std::vector<double> rho_list = kDefaultRhoSweep;
  double region_alpha = 0.10;
  bool svg = true;
};

namespace detail {

namespace fs = std::filesystem;

// Collects named outputs, refuses to clobber existing files without --force.
class OutputSet {
public:
  OutputSet(fs::path dir, bool force) : dir_(std::move(dir)), force_(force) {}

  void add(const std::string& name, std::string content) { files_[name] = std::move(content); }

  std::vector<fs::path> commit() const {
    std::vector<fs::path> written;
    if (!force_)
      for (const auto& [name, _] : files_)
        if (fs::exists(dir_ / name))
          throw Error("refusing to overwrite existing file " + (dir_ / name).string() +
                      " (pass --force)");
    if (!dir_.empty()) fs::create_directories(dir_);
    for (const auto& [name, content] : files_) {
      const fs::path p = dir_ / name;
      std::ofstream os(p, std::ios::binary | std::ios::trunc);
      if (!os) throw Error("cannot write " + p.string());
      os << content;
      if (!os) throw Error("write failed: " + p.string());
      written.push_back(p);
    }
    return written;
  }

private:
  fs::path dir_;
  bool force_;
  std::map<std::string, std::string> files_;
};

inline std::string file_token(const std::string& s) {
  std::string out;
  for (unsigned char c : s) out += (std::isalnum(c) || c == '-' || c == '.') ? char(c) : '_';
  return out.empty() ? "trial" : out;
}

inline std::vector<TrialParams> load_scenarios(const CliConfig& c) {
  if (c.registry_path.empty())
    return c.param_set == "printed" ? printed_scenarios() : scenario_table();
  std::ifstream in(c.registry_path);
  if (!in) throw Error("cannot open registry " + c.registry_path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParameterError("registry " + c.registry_path + ": " + e.what());
  }
  return scenarios_from_json(j, c.param_set);
}

inline int cmd_simulate(const CliConfig& c, std::ostream& out) {
  SimulationDesign d = make_design(c.design);
  d.scenarios = load_scenarios(c);
  d.repetitions = c.repetitions;
  d.n_trials = c.n_trials;
  if (c.n > 0) d.n = c.n;
  if (c.m > 0) d.m = c.m;
  d.alpha = c.test_alpha;
  const SimulationSummary s = run_simulation(d, c.seed, c.workers);

  OutputSet files(c.output_dir, c.force);
  const std::string stem = "simulate_" + d.name;
  files.add(stem + "_summary.json", summary_json(s).dump(2) + "\n");
  std::ostringstream scatter, estimates;
  write_scatter_csv(scatter, s);
  write_estimates_csv(estimates, s);
  files.add(stem + "_scatter.csv", scatter.str());
  files.add(stem + "_estimates.csv", estimates.str());
  const std::string report = simulation_report(s);
  files.add(stem + "_report.txt", report);
  files.commit();
  out << report;
  return 0;
}

inline int cmd_table2(const CliConfig& c, std::ostream& out) {
  const Table2Report r = table2_report(c.seed, c.workers, load_scenarios(c));
  OutputSet files(c.output_dir, c.force);
  std::ostringstream a, b;
  write_table2_csv(a, r.rows_n100);
  write_table2_csv(b, r.rows_n1000);
  files.add("table2_N100.csv", a.str());
  files.add("table2_N1000.csv", b.str());
  const std::string text = "N = 100\n" + table2_text(r.rows_n100) + "\nN = 1000\n" +
                           table2_text(r.rows_n1000);
  files.add("table2_report.txt", text);
  files.commit();
  out << text;
  return 0;
}

inline int cmd_theorem_check(const CliConfig& c, std::ostream& out) {
  if (c.draws < 1) throw DomainError("--draws must be >= 1");
  const StageLethality order = c.violate ? StageLethality::Reversed : StageLethality::Ordered;
  Rng rng(SeedSpec{c.seed, 0, 0}, StreamTag::Parameters);
  // Only n/m enters the certificate; keep both sizes >= 1.
  const double n = std::max(1.0, c.n_over_m), m = n / c.n_over_m;
  double min_a = std::numeric_limits<double>::infinity();
  double min_b = min_a, min_cov = min_a;
  long held = 0, certified = 0, negative_cov = 0;
  for (long i = 0; i < c.draws; ++i) {
    const TrialParams p = draw_trial(rng, order);
    const auto cert = theorem2_certificate(p, n, m);
    min_a = std::min(min_a, cert.A);
    min_b = std::min(min_b, cert.B);
    min_cov = std::min(min_cov, cert.cov12);
    held += cert.assumption_holds;
    certified += cert.certified();
    negative_cov += !(cert.cov12 > 0.0);
  }

  const bool pass = !c.violate && certified == c.draws;
  if (c.format == "json") {
    json j = {{"draws", c.draws},
              {"mode", c.violate ? "reversed" : "ordered"},
              {"assumptionHolds", held == c.draws},
              {"minA", num6(min_a)},
              {"minB", num6(min_b)},
              {"minCov12", num6(min_cov)},
              {"nonPositiveCov12", negative_cov}};
    if (!c.violate) j["pass"] = pass;
    out << j.dump(2) << "\n";
  } else {
    out << (c.violate ? "NO-CLAIM" : (pass ? "PASS" : "FAIL")) << " draws=" << c.draws
        << " mode=" << (c.violate ? "reversed" : "ordered")
        << " assumption_holds=" << (held == c.draws ? "true" : (held == 0 ? "false" : "mixed"))
        << " min_A=" << fmt6(min_a) << " min_B=" << fmt6(min_b) << " min_cov12=" << fmt6(min_cov);
    if (c.violate)
      out << " nonpositive_cov12=" << negative_cov << " (assumption not met, no sign claim)\n";
    else
      out << " certified=" << certified << "/" << c.draws << "\n";
  }
  return c.violate || pass ? 0 : 1;
}

inline int cmd_analyze(const CliConfig& c, std::ostream& out) {
  std::ifstream in(c.csv_path);
  if (!in) throw Error("cannot open " + c.csv_path);
  const auto records = read_trial_summaries(in);
  const AnalysisBundle b = analyze_meta(records, c.rho_list, c.region_alpha);

  OutputSet files(c.output_dir, c.force);
  files.add("analyze_fit.json", analysis_json(b).dump(2) + "\n");
  files.add("analyze_fit.csv", std::string(kFitCsvHeader) + "\n" + fit_csv_row(b.fit) + "\n");
  for (const auto& t : b.trials)
    for (const auto& region : t.regions) {
      std::ostringstream os;
      write_ellipse_csv(os, t.record.trial_id, region.rho_used, ellipse_boundary(region, 180));
      files.add("ellipse_" + file_token(t.record.trial_id) + "_rho" + fmt6(region.rho_used) + ".csv",
                os.str());
    }
  if (c.svg)
    for (std::size_t i = 0; i < b.rho_values.size(); ++i)
      files.add("panel_rho" + fmt6(b.rho_values[i]) + ".svg", svg_panel(b, i));
  files.commit();

  char thr[64];
  std::snprintf(thr, sizeof thr, "%.6f", b.threshold);
  out << "alpha=" << fmt6(b.alpha) << " threshold=" << thr << "\n";
  out << "trials used=" << b.trials.size() << " rejected=" << b.rejected.size() << "\n";
  for (const auto& r : b.rejected) out << "  rejected " << r.trial_id << ": " << r.reason << "\n";
  for (const auto& t : b.trials)
    out << "  " << t.record.trial_id << ": S_hat=" << fmt6(t.estimate.S_hat)
        << " M_hat=" << fmt6(t.estimate.M_hat) << (t.low_count ? " [low-count]" : "") << "\n";
  out << kFitCsvHeader << "\n" << fit_csv_row(b.fit) << "\n";
  return 0;
}

inline int cmd_scenarios(const CliConfig& c, std::ostream& out) {
  if (c.format == "json") {
    out << registry_json().dump(2) << "\n";
    return 0;
  }
  out << "set,label,arm,pE,pL,pDgE,pDgL,S,M\n";
  const std::pair<const char*, std::vector<TrialParams>> sets[] = {
      {"printed", printed_scenarios()}, {"reconstructed", scenario_table()}};
  for (const auto& [name, set] : sets)
    for (const auto& t : set) {
      const auto e = derive_endpoints(t);
      for (const auto* arm : {&t.control, &t.screen})
        out << name << ',' << t.label << ',' << (arm == &t.control ? "control" : "screen") << ','
            << fmt6(arm->p_early) << ',' << fmt6(arm->p_late) << ',' << fmt6(arm->p_death_early)
            << ',' << fmt6(arm->p_death_late) << ',' << fmt6(e.S) << ',' << fmt6(e.M) << '\n';
    }
  return 0;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CliConfig c;
  if (const char* env = std::getenv(kOutputDirEnv)) c.output_dir = env;
  if (c.output_dir.empty()) c.output_dir = ".";

  CLI::App app{"Meta-analytic surrogate endpoint simulation and inference toolkit", "surrogate"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", c.seed, "Master random seed");
    sub->add_option("-o,--out", c.output_dir, std::string("Output directory (default $") + kOutputDirEnv + " or .)");
    sub->add_flag("--force", c.force, "Overwrite existing output files");
    sub->add_option("--workers", c.workers, "Worker threads (output is independent of this)")
        ->check(CLI::Range(1u, 256u));
  };

  auto* sim = app.add_subcommand("simulate", "Run one meta-regression simulation design");
  sim->add_option("design", c.design, "Design name")->required()->check(CLI::IsMember({"A", "B", "C", "D"}));
  sim->add_option("--N", c.repetitions, "Repetitions")->check(CLI::PositiveNumber);
  sim->add_option("--nT", c.n_trials, "Trials per repetition")->check(CLI::Range(3, 1000000));
  sim->add_option("--n", c.n, "Control arm size")->check(CLI::PositiveNumber);
  sim->add_option("--m", c.m, "Screen arm size")->check(CLI::PositiveNumber);
  sim->add_option("--alpha", c.test_alpha, "Test level")->check(CLI::Range(1e-12, 1.0 - 1e-12));
  sim->add_option("--param-set", c.param_set, "Scenario parameter set")
      ->check(CLI::IsMember({"printed", "reconstructed"}));
  sim->add_option("--registry", c.registry_path, "Scenario registry JSON")->check(CLI::ExistingFile);
  common(sim);

  auto* t2 = app.add_subcommand("table2", "Run designs A-D at N=100 and N=1000");
  t2->add_option("--param-set", c.param_set, "Scenario parameter set")
      ->check(CLI::IsMember({"printed", "reconstructed"}));
  t2->add_option("--registry", c.registry_path, "Scenario registry JSON")->check(CLI::ExistingFile);
  common(t2);

  auto* th = app.add_subcommand("theorem-check", "Check the covariance sign certificate on random parameters");
  th->add_option("--draws", c.draws, "Number of random parameter draws")->check(CLI::PositiveNumber);
  th->add_option("--seed", c.seed, "Master random seed");
  th->add_option("--n-over-m", c.n_over_m, "Arm size ratio n/m")->check(CLI::PositiveNumber);
  th->add_flag("--violate", c.violate, "Draw parameters with p_D|E > p_D|L in both arms");
  th->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));

  auto* an = app.add_subcommand("analyze", "Meta-regression and confidence regions from trial summaries");
  an->add_option("csv", c.csv_path, "Trial summary CSV")->required();
  an->add_option("--rho", c.rho_list, "Sampling-correlation values")->delimiter(',')->check(CLI::Range(-0.999999, 0.999999));
  an->add_option("--alpha", c.region_alpha, "Region miscoverage level")->check(CLI::Range(1e-12, 1.0 - 1e-12));
  an->add_flag("!--no-svg", c.svg, "Skip SVG panels");
  common(an);

  auto* sc = app.add_subcommand("scenarios", "Print the scenario registry (printed and reconstructed sets)");
  sc->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (sim->parsed()) return detail::cmd_simulate(c, out);
    if (t2->parsed()) return detail::cmd_table2(c, out);
    if (th->parsed()) return detail::cmd_theorem_check(c, out);
    if (an->parsed()) return detail::cmd_analyze(c, out);
    if (sc->parsed()) return detail::cmd_scenarios(c, out);
  } catch (const SchemaError& e) {
    err << "error: " << c.csv_path << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace surrogate::cli

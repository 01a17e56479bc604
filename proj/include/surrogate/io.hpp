#pragma once

// File formats: scenario registry JSON, summary/fit/certificate JSON, CSV
// exports, trial-summary CSV ingestion and SVG panels.
//
// Exported floating-point values carry 6 significant digits. The scenario
// registry is the exception: it is written at full precision so that a
// reloaded registry reproduces its endpoints exactly.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "surrogate/asymptotics.hpp"
#include "surrogate/errors.hpp"
#include "surrogate/experiments.hpp"
#include "surrogate/inference.hpp"
#include "surrogate/model.hpp"
#include "surrogate/regions.hpp"

namespace surrogate {

using json = nlohmann::ordered_json;

inline std::string fmt6(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// x rounded to 6 significant digits; non-finite values become JSON null.
inline json num6(double x) {
  if (!std::isfinite(x)) return nullptr;
  return std::stod(fmt6(x));
}

inline json num6(const std::optional<double>& x) { return x ? num6(*x) : json(nullptr); }

// --- scenario registry ---------------------------------------------------------

inline json to_json(const ArmParams& a) {
  return {{"pE", a.p_early}, {"pL", a.p_late}, {"pDgE", a.p_death_early}, {"pDgL", a.p_death_late}};
}

inline json to_json(const TrialParams& t) {
  return {{"label", t.label}, {"control", to_json(t.control)}, {"screen", to_json(t.screen)}};
}

inline ArmParams arm_from_json(const json& j) {
  try {
    return {j.at("pE").get<double>(), j.at("pL").get<double>(), j.at("pDgE").get<double>(),
            j.at("pDgL").get<double>()};
  } catch (const json::exception& e) {
    throw ParameterError(std::string("arm parameters: ") + e.what());
  }
}

inline TrialParams trial_from_json(const json& j) {
  if (!j.is_object() || !j.contains("control") || !j.contains("screen"))
    throw ParameterError("scenario entry needs 'control' and 'screen' objects");
  TrialParams t;
  t.label = j.value("label", std::string{});
  t.control = arm_from_json(j.at("control"));
  t.screen = arm_from_json(j.at("screen"));
  return t;
}

inline json scenarios_to_json(const std::vector<TrialParams>& set) {
  json out = json::array();
  for (const auto& t : set) out.push_back(to_json(t));
  return out;
}

inline json registry_json() {
  return {{"printed", scenarios_to_json(printed_scenarios())},
          {"reconstructed", scenarios_to_json(scenario_table())}};
}

// Accepts a bare array of scenarios or an object keyed by parameter set.
inline std::vector<TrialParams> scenarios_from_json(const json& j,
                                                    const std::string& key = "reconstructed") {
  const json* arr = &j;
  if (j.is_object()) {
    if (!j.contains(key)) throw ParameterError("registry has no parameter set '" + key + "'");
    arr = &j.at(key);
  }
  if (!arr->is_array()) throw ParameterError("scenario registry must be an array");
  std::vector<TrialParams> out;
  for (const auto& item : *arr) out.push_back(trial_from_json(item));
  return out;
}

// --- asymptotic summaries --------------------------------------------------------

inline json certificate_json(const std::string& label, const EndpointCovariance& cov,
                             const Theorem2Certificate& cert) {
  return {{"label", label},
          {"varS", num6(cov.var_S)},
          {"varM", num6(cov.var_M)},
          {"rho", num6(cov.rho)},
          {"A", num6(cert.A)},
          {"B", num6(cert.B)},
          {"cov12", num6(cert.cov12)},
          {"assumptionHolds", cert.assumption_holds}};
}

// --- regression fits -------------------------------------------------------------

inline json fit_json(const MetaFit& f) {
  return {{"beta0", num6(f.beta0)},
          {"beta1", num6(f.beta1)},
          {"se", num6(f.se_beta1)},
          {"t", num6(f.t_stat)},
          {"p", num6(f.p_value)},
          {"df", f.df},
          {"r", num6(f.r_pearson)},
          {"r_lo", f.r_ci ? num6(f.r_ci->first) : json(nullptr)},
          {"r_hi", f.r_ci ? num6(f.r_ci->second) : json(nullptr)},
          {"weighted", f.weighted}};
}

inline constexpr const char* kFitCsvHeader = "beta0,beta1,se,t,p,df,r,r_lo,r_hi,weighted";

inline std::string fit_csv_row(const MetaFit& f) {
  auto opt = [](const std::optional<double>& v) { return v ? fmt6(*v) : std::string("NA"); };
  std::ostringstream os;
  os << fmt6(f.beta0) << ',' << fmt6(f.beta1) << ',' << fmt6(f.se_beta1) << ',' << fmt6(f.t_stat)
     << ',' << fmt6(f.p_value) << ',' << f.df << ',' << opt(f.r_pearson) << ','
     << (f.r_ci ? fmt6(f.r_ci->first) : "NA") << ',' << (f.r_ci ? fmt6(f.r_ci->second) : "NA")
     << ',' << (f.weighted ? "true" : "false");
  return os.str();
}

// --- simulation exports ----------------------------------------------------------

inline json summary_json(const SimulationSummary& s) {
  json reps = json::array();
  for (const auto& r : s.per_repetition)
    reps.push_back({{"beta1", r.excluded ? json(nullptr) : num6(r.beta1)},
                    {"p", r.excluded ? json(nullptr) : num6(r.p_value)},
                    {"excluded", r.excluded}});
  return {{"design", s.design},
          {"N", s.repetitions},
          {"nT", s.n_trials},
          {"n", s.n},
          {"m", s.m},
          {"alpha", num6(s.alpha)},
          {"meanBeta1", num6(s.mean_beta1)},
          {"rejectionRate", num6(s.rejection_rate)},
          {"mcSeRejection", num6(s.mc_se_rejection)},
          {"excluded", s.excluded},
          {"resamples", s.total_resamples},
          {"perRepetition", std::move(reps)}};
}

inline void write_scatter_csv(std::ostream& os, const SimulationSummary& s) {
  os << "design,repetition,trial,S_true,M_true,S_hat,M_hat\n";
  for (const auto& r : s.scatter)
    os << s.design << ',' << r.repetition << ',' << r.trial << ',' << fmt6(r.truth.S) << ','
       << fmt6(r.truth.M) << ',' << fmt6(r.estimate.S_hat) << ',' << fmt6(r.estimate.M_hat) << '\n';
}

inline void write_estimates_csv(std::ostream& os, const SimulationSummary& s) {
  os << "repetition,trial,S_hat,M_hat,n,m,resamples\n";
  for (const auto& r : s.scatter)
    os << r.repetition << ',' << r.trial << ',' << fmt6(r.estimate.S_hat) << ','
       << fmt6(r.estimate.M_hat) << ',' << r.estimate.n << ',' << r.estimate.m << ','
       << r.resamples << '\n';
}

inline std::string simulation_report(const SimulationSummary& s) {
  std::ostringstream os;
  os << "Simulation " << s.design << "\n"
     << "  trials per repetition (nT): " << s.n_trials << "\n"
     << "  repetitions (N):            " << s.repetitions << "\n"
     << "  arm sizes (n, m):           " << s.n << ", " << s.m << "\n"
     << "  test level alpha:           " << fmt6(s.alpha) << "\n"
     << "  E[beta1_hat]:               " << fmt6(s.mean_beta1) << "\n"
     << "  rejection rate:             " << fmt6(s.rejection_rate) << " (MC s.e. "
     << fmt6(s.mc_se_rejection) << ")\n"
     << "  excluded repetitions:       " << s.excluded << "\n"
     << "  degenerate redraws:         " << s.total_resamples << "\n";
  return os.str();
}

inline constexpr const char* kTable2CsvHeader = "simulation,beta1,mean_beta1,type1_error,mc_se,N";

inline std::string beta1_label(const Table2Row& r) {
  return r.beta1 ? fmt6(*r.beta1) : std::string("-");
}

inline void write_table2_csv(std::ostream& os, const std::vector<Table2Row>& rows) {
  os << kTable2CsvHeader << '\n';
  for (const auto& r : rows)
    os << r.design << ',' << beta1_label(r) << ',' << fmt6(r.mean_beta1) << ','
       << fmt6(r.type1_error) << ',' << fmt6(r.mc_se) << ',' << r.repetitions << '\n';
}

inline std::string table2_text(const std::vector<Table2Row>& rows) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-14s %8s %14s %14s %10s\n", "", "beta1", "E[beta1_hat]",
                "Type I Error", "MC s.e.");
  os << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-14s %8s %14s %14s %10s\n", ("Simulation " + r.design).c_str(),
                  beta1_label(r).c_str(), fmt6(r.mean_beta1).c_str(), fmt6(r.type1_error).c_str(),
                  fmt6(r.mc_se).c_str());
    os << line;
  }
  return os.str();
}

// --- trial summary ingestion -------------------------------------------------------

inline constexpr const char* kTrialCsvColumns[] = {"trial_id",       "n_control",   "n_screen",
                                                   "late_control",   "late_screen", "deaths_control",
                                                   "deaths_screen"};

// Malformed input; carries the offending line (1-based, header = 1) and column.
class SchemaError : public Error {
public:
  SchemaError(const std::string& msg, std::size_t line, std::string column)
      : Error(msg), line_(line), column_(std::move(column)) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& column() const noexcept { return column_; }

private:
  std::size_t line_;
  std::string column_;
};

namespace detail {

inline std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

inline std::vector<TrialSummaryRecord> read_trial_summaries(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty input: missing header", 1, "");
  const auto header = detail::split_csv(line);
  for (const char* col : kTrialCsvColumns)
    if (std::find(header.begin(), header.end(), col) == header.end())
      throw SchemaError(std::string("missing column '") + col + "'", 1, col);
  constexpr std::size_t kColumns = std::size(kTrialCsvColumns);
  if (header.size() != kColumns) {
    for (const auto& h : header)
      if (std::find(std::begin(kTrialCsvColumns), std::end(kTrialCsvColumns), h) ==
          std::end(kTrialCsvColumns))
        throw SchemaError("unexpected column '" + h + "'", 1, h);
  }
  for (std::size_t i = 0; i < kColumns; ++i)
    if (header[i] != kTrialCsvColumns[i])
      throw SchemaError(std::string("column ") + std::to_string(i + 1) + " must be '" +
                            kTrialCsvColumns[i] + "', found '" + header[i] + "'",
                        1, kTrialCsvColumns[i]);

  std::vector<TrialSummaryRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != kColumns)
      throw SchemaError("line " + std::to_string(lineno) + ": expected " + std::to_string(kColumns) +
                            " fields, found " + std::to_string(f.size()),
                        lineno, "");
    auto integer = [&](std::size_t i) -> std::int64_t {
      const std::string& s = f[i];
      std::size_t used = 0;
      long long v = 0;
      try {
        v = std::stoll(s, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (s.empty() || used != s.size() || v < 0)
        throw SchemaError("line " + std::to_string(lineno) + ", column '" + kTrialCsvColumns[i] +
                              "': expected a nonnegative integer, found '" + s + "'",
                          lineno, kTrialCsvColumns[i]);
      return v;
    };
    TrialSummaryRecord r;
    r.trial_id = f[0];
    if (r.trial_id.empty())
      throw SchemaError("line " + std::to_string(lineno) + ": empty trial_id", lineno, "trial_id");
    r.n_control = integer(1);
    r.n_screen = integer(2);
    r.late_control = integer(3);
    r.late_screen = integer(4);
    r.deaths_control = integer(5);
    r.deaths_screen = integer(6);
    out.push_back(std::move(r));
  }
  return out;
}

inline void write_trial_summaries(std::ostream& os, const std::vector<TrialSummaryRecord>& rs) {
  os << "trial_id,n_control,n_screen,late_control,late_screen,deaths_control,deaths_screen\n";
  for (const auto& r : rs)
    os << r.trial_id << ',' << r.n_control << ',' << r.n_screen << ',' << r.late_control << ','
       << r.late_screen << ',' << r.deaths_control << ',' << r.deaths_screen << '\n';
}

// --- region exports ------------------------------------------------------------------

inline void write_ellipse_csv(std::ostream& os, const std::string& trial, double rho,
                              const std::vector<BoundaryPoint>& pts, bool header = true) {
  if (header) os << "trial,rho,theta,S,M\n";
  for (const auto& p : pts)
    os << trial << ',' << fmt6(rho) << ',' << fmt6(p.theta) << ',' << fmt6(p.S) << ',' << fmt6(p.M)
       << '\n';
}

inline json analysis_json(const AnalysisBundle& b) {
  json trials = json::array();
  for (const auto& t : b.trials) {
    json regions = json::array();
    for (const auto& r : t.regions)
      regions.push_back({{"rho", num6(r.rho_used)},
                         {"containsOrigin", region_contains(r, Eigen::Vector2d::Zero())},
                         {"meetsZeroMortality", region_meets_line(r, 1, 0.0)},
                         {"area", num6(r.area())}});
    trials.push_back({{"trial_id", t.record.trial_id},
                      {"S_hat", num6(t.estimate.S_hat)},
                      {"M_hat", num6(t.estimate.M_hat)},
                      {"varS", num6(t.variances.var_S)},
                      {"varM", num6(t.variances.var_M)},
                      {"n", t.estimate.n},
                      {"m", t.estimate.m},
                      {"lowCount", t.low_count},
                      {"regions", std::move(regions)}});
  }
  json rejected = json::array();
  for (const auto& r : b.rejected) rejected.push_back({{"trial_id", r.trial_id}, {"reason", r.reason}});
  return {{"alpha", num6(b.alpha)},
          {"threshold", num6(b.threshold)},
          {"rho", [&] {
             json a = json::array();
             for (double r : b.rho_values) a.push_back(num6(r));
             return a;
           }()},
          {"fit", fit_json(b.fit)},
          {"trials", std::move(trials)},
          {"rejected", std::move(rejected)}};
}

// Static panel: estimates, regions for one rho, and the fitted line.
inline std::string svg_panel(const AnalysisBundle& b, std::size_t rho_index, int boundary_points = 180) {
  double smin = 0.0, smax = 0.0, mmin = 0.0, mmax = 0.0;
  std::vector<std::vector<BoundaryPoint>> curves;
  for (const auto& t : b.trials) {
    curves.push_back(ellipse_boundary(t.regions.at(rho_index), boundary_points));
    for (const auto& p : curves.back()) {
      smin = std::min(smin, p.S);
      smax = std::max(smax, p.S);
      mmin = std::min(mmin, p.M);
      mmax = std::max(mmax, p.M);
    }
  }
  const double pad_s = 0.05 * (smax - smin + 1e-12), pad_m = 0.05 * (mmax - mmin + 1e-12);
  smin -= pad_s, smax += pad_s, mmin -= pad_m, mmax += pad_m;
  constexpr double W = 480, H = 480, margin = 50;
  auto px = [&](double s) { return margin + (s - smin) / (smax - smin) * (W - 2 * margin); };
  auto py = [&](double m) { return H - margin - (m - mmin) / (mmax - mmin) * (H - 2 * margin); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << fmt6(px(smin)) << "\" y1=\"" << fmt6(py(0)) << "\" x2=\"" << fmt6(px(smax))
     << "\" y2=\"" << fmt6(py(0)) << "\" stroke=\"#bbb\"/>\n";
  os << "<line x1=\"" << fmt6(px(0)) << "\" y1=\"" << fmt6(py(mmin)) << "\" x2=\"" << fmt6(px(0))
     << "\" y2=\"" << fmt6(py(mmax)) << "\" stroke=\"#bbb\"/>\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    os << "<polygon fill=\"none\" stroke=\"#444\" points=\"";
    for (const auto& p : curves[i]) os << fmt6(px(p.S)) << ',' << fmt6(py(p.M)) << ' ';
    os << "\"/>\n";
    const auto& e = b.trials[i].estimate;
    os << "<circle cx=\"" << fmt6(px(e.S_hat)) << "\" cy=\"" << fmt6(py(e.M_hat))
       << "\" r=\"3\" fill=\"black\"/>\n";
    os << "<text x=\"" << fmt6(px(e.S_hat) + 5) << "\" y=\"" << fmt6(py(e.M_hat) - 5)
       << "\" font-size=\"11\">" << b.trials[i].record.trial_id << "</text>\n";
  }
  const double y0 = b.fit.beta0 + b.fit.beta1 * smin, y1 = b.fit.beta0 + b.fit.beta1 * smax;
  os << "<line x1=\"" << fmt6(px(smin)) << "\" y1=\"" << fmt6(py(y0)) << "\" x2=\"" << fmt6(px(smax))
     << "\" y2=\"" << fmt6(py(y1)) << "\" stroke=\"blue\"/>\n";
  os << "<text x=\"" << margin << "\" y=\"20\" font-size=\"13\">rho = " << fmt6(b.rho_values.at(rho_index))
     << ", " << fmt6(100.0 * (1.0 - b.alpha)) << "% regions</text>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" font-size=\"12\">S (late-stage reduction)</text>\n";
  os << "<text x=\"10\" y=\"" << H / 2 << "\" font-size=\"12\" transform=\"rotate(-90 10 " << H / 2
     << ")\">M (mortality reduction)</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace surrogate

#include "hitlaw/cli/report.hpp"

#include <cstdio>
#include <sstream>

namespace hitlaw::cli {

void CheckList::add(std::string name, bool pass, double value, double tolerance) {
  entries_.push_back({{"name", std::move(name)}, {"pass", pass}, {"value", value}, {"tolerance", tolerance}});
  pass_ = pass_ && pass;
}

void CheckList::skip(std::string name, std::string reason) {
  entries_.push_back({{"name", std::move(name)}, {"pass", nullptr}, {"skipped", std::move(reason)}});
}

bool CheckList::all_pass() const noexcept { return pass_; }

Json CheckList::to_json() const { return entries_; }

Json convergence_json(const ConvergenceReport& r) {
  return {{"target", r.target},       {"final_error", r.final_error},
          {"tolerance", r.tolerance}, {"rate", r.rate},
          {"first_step", r.first_step}, {"steps", r.values.size()},
          {"eventually_monotone", r.eventually_monotone}, {"pass", r.pass}};
}

Json limit_test_json(const LimitTestReport& r) {
  Json marks = Json::array();
  for (std::size_t j = 0; j < std::min<std::size_t>(r.mark_counts.size(), 20); ++j) marks.push_back(r.mark_counts[j]);
  return {
      {"lambda", r.lambda},
      {"empirical_lambda", r.empirical_lambda},
      {"lambda_se", r.lambda_se},
      {"lambda_relative_error", r.lambda_relative_error},
      {"entrance_lambda", r.entrance_lambda},
      {"entrance_lambda_se", r.entrance_lambda_se},
      {"entrance_relative_error", r.entrance_relative_error},
      {"gap_ks", {{"statistic", r.gap_ks.statistic}, {"p_value", r.gap_ks.p_value}, {"count", r.gap_ks.count}}},
      {"entrance_ks",
       {{"statistic", r.entrance_ks.statistic}, {"p_value", r.entrance_ks.p_value}, {"count", r.entrance_ks.count}}},
      {"mark_chi_square",
       {{"statistic", r.mark_chi.statistic}, {"p_value", r.mark_chi.p_value}, {"bins", r.mark_chi.bins}, {"dof", r.mark_chi.dof}}},
      {"mark_counts", marks},
      {"moment_errors", r.moment_errors},
      {"samples", r.samples},
      {"hits", r.hits},
      {"clusters", r.clusters},
      {"entrances", r.entrances},
      {"observation_length", r.observation_length},
      {"underpowered", r.underpowered},
  };
}

namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

CsvTable cluster_table_csv(const std::string& name, const std::vector<ClusterConstant>& windowed,
                           const std::vector<ClusterConstant>& full_window) {
  std::ostringstream out;
  out << "m,n,window,tilde,tilde_limit,relative_error,window_n_tilde,window_n_relative_error\n";
  for (std::size_t i = 0; i < windowed.size(); ++i) {
    const auto& c = windowed[i];
    const auto& f = full_window[i];
    out << c.m << ',' << c.n << ',' << c.window << ',' << num(c.tilde) << ',' << num(c.tilde_limit) << ','
        << num(c.tilde_relative_error) << ',' << num(f.tilde) << ',' << num(f.tilde_relative_error) << '\n';
  }
  return {name, out.str()};
}

CsvTable gaps_csv(const std::string& name, std::span<const PointProcessSample> samples) {
  std::ostringstream out;
  out << "replica,cluster,start,gap,mark\n";
  for (std::size_t r = 0; r < samples.size(); ++r) {
    const auto gaps = samples[r].cluster_gaps();
    for (std::size_t i = 0; i < gaps.size(); ++i) {
      out << r << ',' << i << ',' << num(samples[r].clusters[i].start) << ',' << num(gaps[i]) << ','
          << samples[r].clusters[i].mark << '\n';
    }
  }
  return {name, out.str()};
}

CsvTable marks_csv(const std::string& name, const LimitTestReport& report, const MarkedPoissonParams& params) {
  std::ostringstream out;
  out << "mark,count,frequency,pi\n";
  const double total = static_cast<double>(report.clusters);
  for (std::size_t j = 0; j < report.mark_counts.size(); ++j) {
    out << j + 1 << ',' << report.mark_counts[j] << ','
        << num(total > 0 ? static_cast<double>(report.mark_counts[j]) / total : 0.0) << ',' << num(params.pi_at(j + 1))
        << '\n';
  }
  return {name, out.str()};
}

Json without_timing(const Json& report) {
  Json copy = report;
  if (copy.is_object()) copy.erase("timing");
  return copy;
}

}  // namespace hitlaw::cli

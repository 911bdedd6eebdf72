#include "acsplit/report_io.hpp"

#include "acsplit/config.hpp"
#include "acsplit/errors.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

namespace acsplit {

namespace {

std::string norm_label(const Norm& n) {
  switch (n.kind) {
    case NormKind::L2: return "l2";
    case NormKind::Lq: return "lq";
    case NormKind::Sup: return "sup";
    case NormKind::Sobolev: return "sobolev";
  }
  return "l2";
}

// JSON has no NaN/inf; store them as null.
nlohmann::json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

}  // namespace

nlohmann::json to_json(const RunMetadata& meta) {
  return {
      {"scheme", meta.scheme},   {"noise", meta.noise},     {"initial", meta.initial},
      {"modes", meta.modes},     {"horizon", meta.horizon}, {"samples", meta.samples},
      {"seed", meta.seed},       {"divergent", meta.divergent},
  };
}

nlohmann::json to_json(const RateReport& report) {
  nlohmann::json j;
  j["dts"] = report.dts;
  j["errors"] = report.errors;
  j["stderr"] = report.std_errors;
  j["slope"] = number(report.fit.slope);
  j["intercept"] = number(report.fit.intercept);
  j["ci"] = {number(report.fit.ci_low), number(report.fit.ci_high)};
  j["dt_ref"] = report.dt_ref;
  j["error_spec"] = {
      {"space_norm", norm_label(report.error.space_norm)},
      {"q", report.error.space_norm.kind == NormKind::Lq ? report.error.space_norm.param : 2.0},
      {"time", to_string(report.error.time)},
      {"moment", report.error.moment},
      {"samples", report.error.samples},
  };
  j["meta"] = to_json(report.meta);
  return j;
}

void write_rate_csv(std::ostream& os, const RateReport& report) {
  os << "dt,error,stderr\n";
  for (std::size_t i = 0; i < report.dts.size(); ++i) {
    os << format_real(report.dts[i]) << ',' << format_real(report.errors[i]) << ','
       << format_real(report.std_errors[i]) << '\n';
  }
}

void write_rate_long_csv(std::ostream& os, const RateReport& report) {
  os << "dt,sample_stat,value\n";
  for (std::size_t i = 0; i < report.dts.size(); ++i) {
    const std::string dt = format_real(report.dts[i]);
    os << dt << ",error," << format_real(report.errors[i]) << '\n';
    os << dt << ",stderr," << format_real(report.std_errors[i]) << '\n';
    os << dt << ",log_dt," << format_real(std::log(report.dts[i])) << '\n';
    if (report.errors[i] > 0.0) os << dt << ",log_error," << format_real(std::log(report.errors[i])) << '\n';
  }
}

nlohmann::json to_json(const ProbePoint& point) {
  nlohmann::json j{
      {"dt", point.dt},
      {"estimate", number(point.estimate)},
      {"stderr", number(point.std_error)},
      {"samples", point.samples},
      {"divergent", point.divergent},
  };
  if (point.log_estimate) j["log_estimate"] = number(*point.log_estimate);
  if (point.max_exponent) j["max_exponent"] = number(*point.max_exponent);
  if (point.tail_events) j["tail_events"] = *point.tail_events;
  return j;
}

void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& record) {
  os << "t,L2,L4,sup,H1,H2\n";
  for (std::size_t i = 0; i < record.norms.size(); ++i) {
    const auto& n = record.norms[i];
    os << format_real(record.times[i]) << ',' << format_real(n.l2) << ',' << format_real(n.l4) << ','
       << format_real(n.sup) << ',' << format_real(n.h1) << ',' << format_real(n.h2) << '\n';
  }
}

void write_json_file(const std::string& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'", "experiment.out_dir");
  out << doc.dump(2) << '\n';
}

}  // namespace acsplit

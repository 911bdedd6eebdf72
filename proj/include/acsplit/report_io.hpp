#pragma once

// JSON and CSV serialization of experiment results.

#include "acsplit/error_lab.hpp"
#include "acsplit/integrators.hpp"

#include "json.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace acsplit {

/// RateReport schema:
///   { "dts": [..], "errors": [..], "stderr": [..], "slope": s, "intercept": b,
///     "ci": [lo, hi], "dt_ref": r,
///     "error_spec": { "space_norm", "q", "time", "moment", "samples" },
///     "meta": { "scheme", "noise", "initial", "modes", "horizon", "samples",
///               "seed", "divergent" } }
nlohmann::json to_json(const RateReport& report);
nlohmann::json to_json(const RunMetadata& meta);

/// One row per step size: dt,error,stderr.
void write_rate_csv(std::ostream& os, const RateReport& report);
/// Long form for plotting: dt,sample_stat,value with stats error, stderr, log_dt, log_error.
void write_rate_long_csv(std::ostream& os, const RateReport& report);

/// One probe evaluation at a given step size.
struct ProbePoint {
  double dt = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
  std::size_t divergent = 0;
  // Exponential-integrability only.
  std::optional<double> log_estimate;
  std::optional<double> max_exponent;
  std::optional<std::size_t> tail_events;
};

nlohmann::json to_json(const ProbePoint& point);

/// Columns t,L2,L4,sup,H1,H2.
void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& record);

/// Writes a JSON document with a trailing newline.
void write_json_file(const std::string& path, const nlohmann::json& doc);

}  // namespace acsplit

#include "acsplit/config.hpp"
#include "acsplit/errors.hpp"

#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <sstream>

using namespace acsplit;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

std::string canonical(const ExperimentConfig& c) {
  std::ostringstream os;
  write_config(os, c);
  return os.str();
}

std::string error_key(const std::string& text) {
  try {
    parse(text).validate();
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<no error>";
}

const char* kRates = R"(
[experiment]
name = r
kind = rates
seed = 5
[model]
modes = 64
horizon = 0.5
noise = diagonal
gamma = 1.1
initial = bump
initial_amplitude = 1.5
[rates]
dts = 2^-4, 2^-5, 2^-6
dt_ref = 2^-10
time = endpoint
samples = 12
)";

}  // namespace

TEST_CASE("real numbers") {
  CHECK(parse_real("0.25", "k") == 0.25);
  CHECK(parse_real("2^-13", "k") == std::ldexp(1.0, -13));
  CHECK(parse_real(" 2^3 ", "k") == 8.0);
  CHECK(parse_real("1e-3", "k") == 1e-3);
  CHECK_THROWS_AS(parse_real("2^-x", "k"), ConfigError);
  CHECK_THROWS_AS(parse_real("0.1.2", "k"), ConfigError);
  CHECK_THROWS_AS(parse_real("", "k"), ConfigError);
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 6.02e23, std::ldexp(1.0, -13)}) {
    CHECK(parse_real(format_real(v), "k") == v);
  }
  CHECK(format_real(0.5) == "0.5");
}

TEST_CASE("rates config is parsed") {
  const ExperimentConfig c = parse(kRates);
  CHECK(c.kind == ExperimentKind::Rates);
  CHECK(c.name == "r");
  CHECK(c.seed == 5);
  CHECK(c.model.modes == 64);
  CHECK(c.model.noise.gamma == 1.1);
  CHECK(c.dts == std::vector<double>{0.0625, 0.03125, 0.015625});
  CHECK(c.dt_ref == std::ldexp(1.0, -10));
  CHECK(c.error.time == TimeAggregation::Endpoint);
  CHECK(c.error.samples == 12);
  CHECK_NOTHROW(c.validate());
  const RateExperiment x = c.rate_experiment();
  CHECK(x.dts == c.dts);
  CHECK(x.seed == 5);
}

TEST_CASE("canonical form round-trips") {
  const ExperimentConfig c = parse(kRates);
  const std::string once = canonical(c);
  const std::string twice = canonical(parse(once));
  CHECK(once == twice);

  for (const auto& entry : std::filesystem::directory_iterator(ACSPLIT_PRESET_DIR)) {
    if (entry.path().stem() == "malformed-dt-ref") continue;
    CAPTURE(entry.path().string());
    const ExperimentConfig p = load_config(entry.path().string());
    const std::string text = canonical(p);
    CHECK(canonical(parse(text)) == text);
    CHECK_NOTHROW(parse(text).validate());
  }
}

TEST_CASE("errors name the offending key") {
  CHECK(error_key("[experiment]\nkind = rates\nbogus = 1\n") == "experiment.bogus");
  CHECK(error_key("[nowhere]\nx = 1\n") == "nowhere");
  CHECK(error_key("[experiment]\nkind = sometimes\n") == "experiment.kind");
  CHECK(error_key("[experiment]\nseed = -3\n") == "experiment.seed");
  CHECK(error_key("[model]\nmodes = many\n") == "model.modes");
  CHECK(error_key("[model]\nnoise = pink\n") == "model.noise");
  CHECK(error_key("[model]\nnoise = diagonal\ngamma = -1\n") == "model.gamma");
  CHECK(error_key(std::string(kRates) + "\n[probe]\nsamples = 3\n") == "probe");

  std::string bad_ref = kRates;
  bad_ref.replace(bad_ref.find("dt_ref = 2^-10"), 14, "dt_ref = 2^-x");
  CHECK(error_key(bad_ref) == "rates.dt_ref");

  std::string not_dividing = kRates;
  not_dividing.replace(not_dividing.find("dt_ref = 2^-10"), 14, "dt_ref = 0.003");
  CHECK(error_key(not_dividing) == "rates.dt_ref");

  std::string unsorted = kRates;
  unsorted.replace(unsorted.find("2^-4, 2^-5"), 10, "2^-5, 2^-4");
  CHECK(error_key(unsorted) == "rates.dts");
}

TEST_CASE("missing files are configuration errors") {
  CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), ConfigError);
}

TEST_CASE("probe and run configs") {
  const ExperimentConfig p = load_config(std::string(ACSPLIT_PRESET_DIR) + "/exp-integrability-gamma2.ini");
  CHECK(p.kind == ExperimentKind::Probe);
  CHECK(p.probe_kind == ProbeKind::ExpIntegrability);
  CHECK(p.exp_probe.samples == 500);
  CHECK(p.halvings == 1);

  ExperimentConfig rough = p;
  rough.model.noise = QSpec::white();
  CHECK_THROWS_AS(rough.validate(), ConfigError);

  const ExperimentConfig r = load_config(std::string(ACSPLIT_PRESET_DIR) + "/run-plain-euler-blowup.ini");
  CHECK(r.kind == ExperimentKind::Run);
  CHECK(r.model.scheme == Scheme::PlainExpEuler);
  CHECK(r.model.x0.kind == InitialProfile::Kind::Constant);
}

#include "acsplit/config.hpp"

#include "acsplit/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace acsplit {

namespace pt = boost::property_tree;

double parse_real(const std::string& text, const std::string& key) {
  std::string s = text;
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
  const auto caret = s.find('^');
  try {
    std::size_t used = 0;
    double v = 0.0;
    if (caret != std::string::npos) {
      const double base = std::stod(s.substr(0, caret), &used);
      if (used != caret) throw std::invalid_argument(s);
      const std::string ex = s.substr(caret + 1);
      const double e = std::stod(ex, &used);
      if (used != ex.size()) throw std::invalid_argument(s);
      v = std::pow(base, e);
    } else {
      v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
    }
    if (!std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse '" + text + "' as a real number", key);
  }
}

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"experiment", {"name", "kind", "seed", "threads", "bit_repro", "out_dir"}},
      {"model",
       {"scheme", "modes", "horizon", "dt", "dt0", "noise", "gamma", "scale", "initial", "initial_amplitude",
        "initial_width", "initial_mode"}},
      {"rates",
       {"dts", "dt_ref", "space_norm", "q", "time", "moment", "samples", "min_refinement",
        "max_divergent_fraction"}},
      {"probe",
       {"probe", "functional", "q", "p", "aggregation", "samples", "tape_refinement", "halvings", "c", "target",
        "substeps", "require_regular_noise", "max_divergent_fraction"}},
      {"run", {"record_every"}},
  };
  return keys;
}

// Typed access to one section, with the "section.key" name in every error.
class Section {
 public:
  Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  bool has(const std::string& key) const { return tree_ && tree_->find(key) != tree_->not_found(); }

  std::string str(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    return tree_->get<std::string>(key);
  }

  double real(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return parse_real(str(key, ""), qualified(key));
  }

  std::uint64_t u64(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const std::string s = str(key, "");
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw ConfigError("key '" + qualified(key) + "': expected a nonnegative integer, got '" + s + "'",
                        qualified(key));
    }
    return v;
  }

  std::size_t size(const std::string& key, std::size_t fallback) const {
    return static_cast<std::size_t>(u64(key, fallback));
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string s = str(key, "");
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("key '" + qualified(key) + "': expected true or false, got '" + s + "'", qualified(key));
  }

  std::vector<double> reals(const std::string& key) const {
    std::vector<double> out;
    if (!has(key)) return out;
    std::stringstream ss(str(key, ""));
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_real(item, qualified(key)));
    return out;
  }

  std::string qualified(const std::string& key) const { return name_ + "." + key; }

 private:
  const pt::ptree* tree_;
  std::string name_;
};

template <class Fn>
auto with_key(const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(e.what(), key);
  }
}

std::string kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Run: return "run";
    case ExperimentKind::Rates: return "rates";
    case ExperimentKind::Probe: return "probe";
  }
  return "run";
}

std::string noise_name(const QSpec& q) { return q.kind == QSpec::Kind::White ? "white" : "diagonal"; }

std::string initial_name(InitialProfile::Kind k) {
  switch (k) {
    case InitialProfile::Kind::Zero: return "zero";
    case InitialProfile::Kind::Sine: return "sine";
    case InitialProfile::Kind::Bump: return "bump";
    case InitialProfile::Kind::Constant: return "constant";
  }
  return "zero";
}

std::string norm_name(const Norm& n) {
  switch (n.kind) {
    case NormKind::L2: return "l2";
    case NormKind::Lq: return "lq";
    case NormKind::Sup: return "sup";
    case NormKind::Sobolev: return "sobolev";
  }
  return "l2";
}

}  // namespace

ExperimentConfig parse_config(std::istream& is) {
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end() || !body.data().empty()) {
      throw ConfigError("unknown section or key '" + section + "'", section);
    }
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ConfigError("unknown key '" + section + "." + key + "'", section + "." + key);
    }
  }
  auto section = [&](const std::string& name) {
    const auto child = tree.get_child_optional(name);
    return Section(child ? &*child : nullptr, name);
  };

  ExperimentConfig c;
  const Section ex = section("experiment");
  c.name = ex.str("name", c.name);
  const std::string kind = ex.str("kind", "run");
  if (kind == "run") c.kind = ExperimentKind::Run;
  else if (kind == "rates") c.kind = ExperimentKind::Rates;
  else if (kind == "probe") c.kind = ExperimentKind::Probe;
  else throw ConfigError("unknown experiment kind '" + kind + "'", "experiment.kind");
  // Settings for another kind would be silently ignored; treat them as mistakes.
  for (const char* other : {"run", "rates", "probe"}) {
    if (other != kind && tree.get_child_optional(other)) {
      throw ConfigError("section [" + std::string(other) + "] does not apply to kind " + kind, other);
    }
  }
  c.seed = ex.u64("seed", c.seed);
  c.threads = ex.size("threads", c.threads);
  c.bit_repro = ex.boolean("bit_repro", c.bit_repro);
  c.out_dir = ex.str("out_dir", c.out_dir);

  const Section m = section("model");
  c.model.scheme = with_key("model.scheme", [&] { return parse_scheme(m.str("scheme", "splitting")); });
  c.model.modes = m.size("modes", c.model.modes);
  c.model.horizon = m.real("horizon", c.model.horizon);
  c.model.dt = m.real("dt", c.model.dt);
  c.model.dt0 = m.real("dt0", c.model.dt0);
  const std::string noise = m.str("noise", "white");
  if (noise == "white") {
    c.model.noise = QSpec::white();
  } else if (noise == "diagonal") {
    c.model.noise = QSpec::diagonal(m.real("gamma", 0.0), m.real("scale", 1.0));
  } else {
    throw ConfigError("unknown noise '" + noise + "'", "model.noise");
  }
  const std::string init = m.str("initial", "zero");
  const double amp = m.real("initial_amplitude", 1.0);
  if (init == "zero") c.model.x0 = InitialProfile::zero();
  else if (init == "sine") c.model.x0 = InitialProfile::sine(m.size("initial_mode", 1), amp);
  else if (init == "bump") c.model.x0 = InitialProfile::bump(amp, m.real("initial_width", 0.25));
  else if (init == "constant") c.model.x0 = InitialProfile::constant(amp);
  else throw ConfigError("unknown initial profile '" + init + "'", "model.initial");

  const Section r = section("rates");
  c.dts = r.reals("dts");
  c.dt_ref = r.real("dt_ref", c.dt_ref);
  const std::string sn = r.str("space_norm", "l2");
  if (sn == "l2") c.error.space_norm = Norm::l2();
  else if (sn == "sup") c.error.space_norm = Norm::sup();
  else if (sn == "lq") c.error.space_norm = Norm::lq(static_cast<int>(r.size("q", 2)));
  else throw ConfigError("unknown space_norm '" + sn + "'", "rates.space_norm");
  c.error.time = with_key("rates.time", [&] { return parse_time_aggregation(r.str("time", "path-sup")); });
  c.error.moment = r.real("moment", c.error.moment);
  c.error.samples = r.size("samples", c.error.samples);
  c.error.min_refinement = r.size("min_refinement", c.error.min_refinement);
  c.error.max_divergent_fraction = r.real("max_divergent_fraction", c.error.max_divergent_fraction);

  const Section p = section("probe");
  const std::string pk = p.str("probe", "moment");
  if (pk == "moment") c.probe_kind = ProbeKind::Moment;
  else if (pk == "exp-integrability") c.probe_kind = ProbeKind::ExpIntegrability;
  else throw ConfigError("unknown probe '" + pk + "'", "probe.probe");
  c.probe.functional = with_key("probe.functional", [&] { return parse_functional(p.str("functional", "sup-lq-pow")); });
  c.probe.q = static_cast<int>(p.size("q", 4));
  c.probe.p = p.real("p", c.probe.p);
  c.probe.aggregation =
      with_key("probe.aggregation", [&] { return parse_time_aggregation(p.str("aggregation", "moment-sup")); });
  const std::size_t samples = p.size("samples", c.probe.samples);
  const std::size_t refinement = p.size("tape_refinement", 1);
  const double max_div = p.real("max_divergent_fraction", c.probe.max_divergent_fraction);
  c.probe.samples = c.exp_probe.samples = samples;
  c.probe.tape_refinement = c.exp_probe.tape_refinement = refinement;
  c.probe.max_divergent_fraction = c.exp_probe.max_divergent_fraction = max_div;
  c.halvings = p.size("halvings", c.halvings);
  c.exp_probe.c = p.real("c", c.exp_probe.c);
  const std::string target = p.str("target", "grid");
  if (target == "grid") c.exp_probe.target = PathTarget::GridValues;
  else if (target == "interpolant") c.exp_probe.target = PathTarget::Interpolant;
  else throw ConfigError("unknown target '" + target + "'", "probe.target");
  c.exp_probe.substeps = p.size("substeps", c.exp_probe.substeps);
  c.exp_probe.require_regular_noise = p.boolean("require_regular_noise", c.exp_probe.require_regular_noise);

  c.record_every = section("run").size("record_every", c.record_every);

  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'", "config");
  return parse_config(in);
}

RateExperiment ExperimentConfig::rate_experiment() const {
  RateExperiment e;
  e.model = model;
  e.dts = dts;
  e.dt_ref = dt_ref;
  e.error = error;
  e.seed = seed;
  e.threads = threads;
  return e;
}

void ExperimentConfig::validate() const {
  auto prefixed = [](const std::string& section, const ConfigError& e) {
    const std::string key = e.key().empty() ? section : (e.key().find('.') == std::string::npos
                                                             ? section + "." + e.key()
                                                             : e.key());
    return ConfigError(e.what(), key);
  };
  if (name.empty()) throw ConfigError("experiment name must not be empty", "experiment.name");
  switch (kind) {
    case ExperimentKind::Rates:
      try {
        if (dts.size() < 1) throw ConfigError("dts must not be empty", "dts");
        rate_experiment().validate();
      } catch (const ConfigError& e) {
        const std::string k = e.key();
        if (k == "dt") throw ConfigError(e.what(), "rates.dts");
        const bool model_key = k == "modes" || k == "dt0" || k == "gamma" || k == "scale" || k == "horizon" ||
                               k.rfind("initial", 0) == 0;
        throw prefixed(model_key ? "model" : "rates", e);
      }
      break;
    case ExperimentKind::Probe:
      try {
        model.validate();
      } catch (const ConfigError& e) {
        throw prefixed("model", e);
      }
      try {
        if (halvings > 20) throw ConfigError("halvings must be <= 20", "halvings");
        if (probe_kind == ProbeKind::Moment) probe.validate();
        else exp_probe.validate(model.noise);
      } catch (const ConfigError& e) {
        throw prefixed("probe", e);
      }
      break;
    case ExperimentKind::Run:
      try {
        model.validate();
      } catch (const ConfigError& e) {
        throw prefixed("model", e);
      }
      if (record_every == 0) throw ConfigError("record_every must be >= 1", "run.record_every");
      break;
  }
  try {
    model.x0.build(LaplacianSpectrum(model.modes));
  } catch (const ConfigError& e) {
    throw prefixed("model", e);
  }
}

void write_config(std::ostream& os, const ExperimentConfig& c) {
  os << "[experiment]\n"
     << "name = " << c.name << '\n'
     << "kind = " << kind_name(c.kind) << '\n'
     << "seed = " << c.seed << '\n'
     << "threads = " << c.threads << '\n'
     << "bit_repro = " << (c.bit_repro ? "true" : "false") << '\n'
     << "out_dir = " << c.out_dir << '\n';

  const auto& m = c.model;
  os << "\n[model]\n"
     << "scheme = " << to_string(m.scheme) << '\n'
     << "modes = " << m.modes << '\n'
     << "horizon = " << format_real(m.horizon) << '\n'
     << "dt = " << format_real(m.dt) << '\n'
     << "dt0 = " << format_real(m.dt0) << '\n'
     << "noise = " << noise_name(m.noise) << '\n';
  if (m.noise.kind == QSpec::Kind::Diagonal) {
    os << "gamma = " << format_real(m.noise.gamma) << '\n' << "scale = " << format_real(m.noise.scale) << '\n';
  }
  os << "initial = " << initial_name(m.x0.kind) << '\n'
     << "initial_amplitude = " << format_real(m.x0.amplitude) << '\n'
     << "initial_width = " << format_real(m.x0.width) << '\n'
     << "initial_mode = " << m.x0.mode << '\n';

  switch (c.kind) {
    case ExperimentKind::Rates: {
      os << "\n[rates]\n" << "dts = ";
      for (std::size_t i = 0; i < c.dts.size(); ++i) os << (i ? ", " : "") << format_real(c.dts[i]);
      os << '\n'
         << "dt_ref = " << format_real(c.dt_ref) << '\n'
         << "space_norm = " << norm_name(c.error.space_norm) << '\n';
      if (c.error.space_norm.kind == NormKind::Lq) os << "q = " << static_cast<int>(c.error.space_norm.param) << '\n';
      os << "time = " << to_string(c.error.time) << '\n'
         << "moment = " << format_real(c.error.moment) << '\n'
         << "samples = " << c.error.samples << '\n'
         << "min_refinement = " << c.error.min_refinement << '\n'
         << "max_divergent_fraction = " << format_real(c.error.max_divergent_fraction) << '\n';
      break;
    }
    case ExperimentKind::Probe:
      os << "\n[probe]\n"
         << "probe = " << (c.probe_kind == ProbeKind::Moment ? "moment" : "exp-integrability") << '\n'
         << "samples = " << c.probe.samples << '\n'
         << "tape_refinement = " << c.probe.tape_refinement << '\n'
         << "halvings = " << c.halvings << '\n'
         << "max_divergent_fraction = " << format_real(c.probe.max_divergent_fraction) << '\n';
      if (c.probe_kind == ProbeKind::Moment) {
        os << "functional = " << to_string(c.probe.functional) << '\n'
           << "q = " << c.probe.q << '\n'
           << "p = " << format_real(c.probe.p) << '\n'
           << "aggregation = " << to_string(c.probe.aggregation) << '\n';
      } else {
        os << "c = " << format_real(c.exp_probe.c) << '\n'
           << "target = " << (c.exp_probe.target == PathTarget::GridValues ? "grid" : "interpolant") << '\n'
           << "substeps = " << c.exp_probe.substeps << '\n'
           << "require_regular_noise = " << (c.exp_probe.require_regular_noise ? "true" : "false") << '\n';
      }
      break;
    case ExperimentKind::Run:
      os << "\n[run]\n" << "record_every = " << c.record_every << '\n';
      break;
  }
}

}  // namespace acsplit

#include "thermobound/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace thermo::cli {

namespace {

struct Collector {
  std::vector<std::string> fields;
  std::ostringstream msg;

  void bad(const std::string& field, const std::string& why) {
    fields.push_back(field);
    if (fields.size() > 1) msg << "; ";
    msg << field << ": " << why;
  }

  void finish() const {
    if (!fields.empty()) {
      throw ConfigError("invalid configuration: " + msg.str(), fields);
    }
  }
};

void check_known_keys(const json& obj, const std::string& prefix,
                      const std::set<std::string>& known, Collector& c) {
  if (!obj.is_object()) return;
  for (const auto& item : obj.items()) {
    if (!known.count(item.key())) {
      c.bad(prefix.empty() ? item.key() : prefix + "." + item.key(), "unknown field");
    }
  }
}

template <typename T>
bool read_field(const json& obj, const char* key, const std::string& path, T& out, Collector& c) {
  if (!obj.is_object() || !obj.contains(key)) return false;
  try {
    out = obj.at(key).get<T>();
    return true;
  } catch (const json::exception&) {
    c.bad(path, "wrong type");
    return false;
  }
}

std::optional<BoundKind> parse_bound_kind(const std::string& s) {
  if (s == "COBB") return BoundKind::COBB;
  if (s == "CCRLB") return BoundKind::CCRLB;
  if (s == "QOBB") return BoundKind::QOBB;
  if (s == "QCRLB") return BoundKind::QCRLB;
  return std::nullopt;
}

std::vector<long long> parse_values(const json& v, const std::string& path, Collector& c) {
  std::vector<long long> out;
  if (v.is_array()) {
    for (const auto& e : v) {
      if (!e.is_number_integer() && !e.is_number_unsigned()) {
        c.bad(path, "values must be integers");
        return {};
      }
      out.push_back(e.get<long long>());
    }
    return out;
  }
  if (v.is_object() && v.contains("range")) {
    const json& r = v.at("range");
    long long from = 0, to = -1;
    Collector local;
    read_field(r, "from", path + ".range.from", from, local);
    read_field(r, "to", path + ".range.to", to, local);
    if (!local.fields.empty() || to < from) {
      c.bad(path, "bad range generator");
      return {};
    }
    for (long long x = from; x <= to; ++x) out.push_back(x);
    return out;
  }
  if (v.is_object() && v.contains("log_spaced")) {
    const json& r = v.at("log_spaced");
    long long from = 0, to = 0;
    int count = 0;
    Collector local;
    read_field(r, "from", path + ".log_spaced.from", from, local);
    read_field(r, "to", path + ".log_spaced.to", to, local);
    read_field(r, "count", path + ".log_spaced.count", count, local);
    if (!local.fields.empty() || from < 1 || to <= from || count < 2) {
      c.bad(path, "bad log_spaced generator");
      return {};
    }
    return log_spaced_integers(from, to, count);
  }
  c.bad(path, "expected an integer array or a range/log_spaced generator");
  return {};
}

}  // namespace

const char* to_string(Command c) {
  switch (c) {
    case Command::Bound: return "bound";
    case Command::Sweep: return "sweep";
    case Command::Verify: return "verify";
    case Command::Plot: return "plot";
  }
  return "?";
}

RunConfig parse_run_config(const json& doc) {
  Collector c;
  RunConfig cfg;
  if (!doc.is_object()) {
    throw ConfigError("configuration must be a JSON object", {"$"});
  }
  check_known_keys(doc, "",
                   {"command", "model", "prior", "v", "bounds", "grid", "sweep", "mc", "output",
                    "plot_style", "input"},
                   c);

  std::string command;
  if (!doc.contains("command")) {
    c.bad("command", "required");
  } else {
    read_field(doc, "command", "command", command, c);
  }
  if (command == "bound") cfg.command = Command::Bound;
  else if (command == "sweep") cfg.command = Command::Sweep;
  else if (command == "verify") cfg.command = Command::Verify;
  else if (command == "plot") cfg.command = Command::Plot;
  else if (!command.empty()) c.bad("command", "must be one of bound|sweep|verify|plot");

  if (doc.contains("model")) {
    const json& m = doc.at("model");
    check_known_keys(m, "model", {"kind", "n", "N", "eps", "c"}, c);
    read_field(m, "kind", "model.kind", cfg.model.kind, c);
    read_field(m, "n", "model.n", cfg.model.n, c);
    read_field(m, "N", "model.N", cfg.model.levels, c);
    read_field(m, "eps", "model.eps", cfg.model.eps, c);
    read_field(m, "c", "model.c", cfg.model.c, c);
  }
  if (cfg.model.kind != "spin_gas" && cfg.model.kind != "n_level" && cfg.model.kind != "power_law") {
    c.bad("model.kind", "must be one of spin_gas|n_level|power_law");
  }
  if (cfg.model.kind == "spin_gas" && cfg.model.n < 1) c.bad("model.n", "must be >= 1");
  if (cfg.model.kind == "n_level" && cfg.model.levels < 2) c.bad("model.N", "must be >= 2");
  if (cfg.model.kind == "power_law" && !(cfg.model.c > 0)) c.bad("model.c", "must be positive");
  if (!(cfg.model.eps > 0)) c.bad("model.eps", "must be positive");

  if (doc.contains("prior")) {
    const json& p = doc.at("prior");
    check_known_keys(p, "prior", {"family", "a1", "a2"}, c);
    read_field(p, "family", "prior.family", cfg.prior.family, c);
    read_field(p, "a1", "prior.a1", cfg.prior.a1, c);
    read_field(p, "a2", "prior.a2", cfg.prior.a2, c);
  }
  if (cfg.prior.family != "log_uniform") c.bad("prior.family", "only log_uniform is built in");
  if (!(cfg.prior.a1 > 0)) c.bad("prior.a1", "must be positive");
  if (!(cfg.prior.a2 > cfg.prior.a1)) c.bad("prior.a2", "must exceed a1");

  read_field(doc, "v", "v", cfg.v, c);
  if (cfg.v < 1) c.bad("v", "must be >= 1");

  const ModelKind model_kind =
      cfg.model.kind == "n_level" ? ModelKind::Quantum : ModelKind::Classical;
  if (doc.contains("bounds")) {
    if (!doc.at("bounds").is_array()) {
      c.bad("bounds", "must be an array of bound kinds");
    } else {
      for (const auto& e : doc.at("bounds")) {
        if (!e.is_string()) {
          c.bad("bounds", "entries must be strings");
          continue;
        }
        const auto k = parse_bound_kind(e.get<std::string>());
        if (!k) {
          c.bad("bounds", "unknown kind '" + e.get<std::string>() + "'");
        } else if (flavor_of(*k) != model_kind) {
          c.bad("bounds", std::string("kind ") + thermo::to_string(*k) +
                              " does not apply to model kind " + cfg.model.kind);
        } else {
          cfg.bounds.push_back(*k);
        }
      }
    }
  }
  if ((cfg.command == Command::Bound || cfg.command == Command::Sweep) && cfg.bounds.empty() &&
      std::find(c.fields.begin(), c.fields.end(), "bounds") == c.fields.end()) {
    c.bad("bounds", "at least one bound kind is required");
  }

  if (doc.contains("grid")) {
    const json& g = doc.at("grid");
    check_known_keys(g, "grid", {"m", "spacing"}, c);
    long long m = cfg.grid.m;
    read_field(g, "m", "grid.m", m, c);
    cfg.grid.m = Index(m);
    read_field(g, "spacing", "grid.spacing", cfg.grid.spacing, c);
  }
  if (cfg.grid.m < 3) c.bad("grid.m", "must be >= 3");
  if (cfg.grid.spacing != "log" && cfg.grid.spacing != "linear") {
    c.bad("grid.spacing", "must be log or linear");
  }

  if (cfg.command == Command::Sweep) {
    if (!doc.contains("sweep")) {
      c.bad("sweep", "required for the sweep command");
    } else {
      const json& s = doc.at("sweep");
      check_known_keys(s, "sweep", {"variable", "values", "sizes"}, c);
      read_field(s, "variable", "sweep.variable", cfg.sweep.variable, c);
      if (cfg.sweep.variable != "n" && cfg.sweep.variable != "N" && cfg.sweep.variable != "v") {
        c.bad("sweep.variable", "must be one of n|N|v");
      }
      if (s.contains("values")) {
        cfg.sweep.values = parse_values(s.at("values"), "sweep.values", c);
      } else {
        c.bad("sweep.values", "required");
      }
      if (s.contains("sizes")) {
        if (cfg.sweep.variable != "v") {
          c.bad("sweep.sizes", "only valid when sweeping v");
        } else {
          cfg.sweep.sizes = parse_values(s.at("sizes"), "sweep.sizes", c);
        }
      }
      if (cfg.sweep.values.empty() &&
          std::find(c.fields.begin(), c.fields.end(), "sweep.values") == c.fields.end()) {
        c.bad("sweep.values", "must be nonempty");
      }
      const long long min_allowed =
          cfg.sweep.variable == "N" ? 2 : 1;
      for (long long x : cfg.sweep.values) {
        if (x < min_allowed) {
          c.bad("sweep.values", "entries must be >= " + std::to_string(min_allowed));
          break;
        }
      }
      const long long min_size = cfg.model.kind == "n_level" ? 2 : 1;
      for (long long x : cfg.sweep.sizes) {
        if (x < min_size) {
          c.bad("sweep.sizes", "entries must be >= " + std::to_string(min_size));
          break;
        }
      }
      if (cfg.sweep.variable == "n" && cfg.model.kind != "spin_gas") {
        c.bad("sweep.variable", "sweeping n requires model.kind = spin_gas");
      }
      if (cfg.sweep.variable == "N" && cfg.model.kind != "n_level") {
        c.bad("sweep.variable", "sweeping N requires model.kind = n_level");
      }
    }
  }

  if (doc.contains("mc")) {
    const json& m = doc.at("mc");
    check_known_keys(m, "mc", {"trials", "seed", "estimator", "dump_trials"}, c);
    read_field(m, "trials", "mc.trials", cfg.mc.trials, c);
    read_field(m, "seed", "mc.seed", cfg.mc.seed, c);
    read_field(m, "estimator", "mc.estimator", cfg.mc.estimator, c);
    read_field(m, "dump_trials", "mc.dump_trials", cfg.mc.dump_trials, c);
  }
  if (cfg.command == Command::Verify) {
    if (cfg.mc.trials < 100) c.bad("mc.trials", "must be >= 100");
    if (cfg.mc.estimator != "posterior_mean_log" && cfg.mc.estimator != "posterior_mean_theta" &&
        cfg.mc.estimator != "max_likelihood") {
      c.bad("mc.estimator", "must be posterior_mean_log|posterior_mean_theta|max_likelihood");
    }
    if (cfg.model.kind == "power_law") {
      c.bad("model.kind", "verify needs a sampleable likelihood (spin_gas or n_level)");
    }
  }

  if (doc.contains("output")) {
    const json& o = doc.at("output");
    check_known_keys(o, "output", {"format", "path", "plot_path"}, c);
    read_field(o, "format", "output.format", cfg.output.format, c);
    read_field(o, "path", "output.path", cfg.output.path, c);
    read_field(o, "plot_path", "output.plot_path", cfg.output.plot_path, c);
  }
  if (cfg.output.format != "csv" && cfg.output.format != "json") {
    c.bad("output.format", "must be csv or json");
  }
  if (cfg.command == Command::Verify && cfg.output.format != "json") {
    c.bad("output.format", "the verify command emits a single JSON object; use json");
  }
  if (cfg.command != Command::Plot && cfg.output.path.empty()) {
    c.bad("output.path", "required");
  }
  if (!cfg.output.plot_path.empty() && cfg.command != Command::Sweep && cfg.command != Command::Plot) {
    c.bad("output.plot_path", "plots require a sweep table");
  }

  if (doc.contains("plot_style")) {
    const json& p = doc.at("plot_style");
    check_known_keys(p, "plot_style", {"log_x", "log_y", "title"}, c);
    bool b = false;
    if (read_field(p, "log_x", "plot_style.log_x", b, c)) cfg.plot_style.log_x = b;
    if (read_field(p, "log_y", "plot_style.log_y", b, c)) cfg.plot_style.log_y = b;
    read_field(p, "title", "plot_style.title", cfg.plot_style.title, c);
  }

  read_field(doc, "input", "input", cfg.input, c);
  if (cfg.command == Command::Plot) {
    if (cfg.input.empty()) c.bad("input", "plot requires an input CSV path");
    if (cfg.output.plot_path.empty()) c.bad("output.plot_path", "plot requires an SVG output path");
  }

  c.finish();
  return cfg;
}

ordered_json resolved_config_json(const RunConfig& cfg) {
  ordered_json j;
  j["command"] = to_string(cfg.command);
  ordered_json model;
  model["kind"] = cfg.model.kind;
  if (cfg.model.kind == "spin_gas") model["n"] = cfg.model.n;
  if (cfg.model.kind == "n_level") model["N"] = cfg.model.levels;
  if (cfg.model.kind == "power_law") model["c"] = cfg.model.c;
  model["eps"] = cfg.model.eps;
  j["model"] = std::move(model);
  ordered_json prior;
  prior["family"] = cfg.prior.family;
  prior["a1"] = cfg.prior.a1;
  prior["a2"] = cfg.prior.a2;
  j["prior"] = std::move(prior);
  j["v"] = cfg.v;
  ordered_json kinds = ordered_json::array();
  for (BoundKind k : cfg.bounds) kinds.push_back(thermo::to_string(k));
  j["bounds"] = std::move(kinds);
  ordered_json grid;
  grid["m"] = cfg.grid.m;
  grid["spacing"] = cfg.grid.spacing;
  j["grid"] = std::move(grid);
  if (cfg.command == Command::Sweep) {
    ordered_json sw;
    sw["variable"] = cfg.sweep.variable;
    sw["values"] = cfg.sweep.values;
    if (!cfg.sweep.sizes.empty()) sw["sizes"] = cfg.sweep.sizes;
    j["sweep"] = std::move(sw);
  }
  if (cfg.command == Command::Verify) {
    ordered_json mc;
    mc["trials"] = cfg.mc.trials;
    mc["seed"] = cfg.mc.seed;
    mc["estimator"] = cfg.mc.estimator;
    if (!cfg.mc.dump_trials.empty()) mc["dump_trials"] = cfg.mc.dump_trials;
    j["mc"] = std::move(mc);
  }
  if (cfg.command == Command::Plot) j["input"] = cfg.input;
  ordered_json out;
  out["format"] = cfg.output.format;
  out["path"] = cfg.output.path;
  if (!cfg.output.plot_path.empty()) out["plot_path"] = cfg.output.plot_path;
  j["output"] = std::move(out);
  if (cfg.plot_style.log_x || cfg.plot_style.log_y || !cfg.plot_style.title.empty()) {
    ordered_json ps;
    if (cfg.plot_style.log_x) ps["log_x"] = *cfg.plot_style.log_x;
    if (cfg.plot_style.log_y) ps["log_y"] = *cfg.plot_style.log_y;
    if (!cfg.plot_style.title.empty()) ps["title"] = cfg.plot_style.title;
    j["plot_style"] = std::move(ps);
  }
  return j;
}

}  // namespace thermo::cli

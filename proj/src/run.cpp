#include "thermobound/cli/run.hpp"

#include <filesystem>
#include <ostream>
#include <sstream>

#include "thermobound/io/svg.hpp"
#include "thermobound/io/table.hpp"
#include "thermobound/mcverify.hpp"

namespace thermo::cli {

namespace {

using io::Table;
using io::TableRow;

std::string resolve_path(const std::string& path, const std::string& output_dir) {
  if (output_dir.empty()) return path;
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(output_dir) / p).string();
}

Prior make_prior(const RunConfig& cfg) { return log_uniform_prior(cfg.prior.a1, cfg.prior.a2); }

FisherModel make_model(const ModelConfig& m) {
  if (m.kind == "spin_gas") return spin_gas_model(m.n, m.eps);
  if (m.kind == "n_level") return nlevel_model(m.levels, m.eps);
  return power_law_model(m.c);
}

SpacingMode spacing_of(const GridConfig& g) {
  return g.spacing == "linear" ? SpacingMode::UniformInTheta : SpacingMode::UniformInLogTheta;
}

io::PlotStyle plot_style_of(const RunConfig& cfg) {
  io::PlotStyle style;
  style.log_x = cfg.plot_style.log_x;
  style.log_y = cfg.plot_style.log_y;
  style.title = cfg.plot_style.title;
  return style;
}

void emit_table(const Table& table, const RunConfig& cfg, const std::string& output_dir,
                bool quiet, std::ostream& log) {
  const std::string path = resolve_path(cfg.output.path, output_dir);
  const std::string text = cfg.output.format == "csv" ? io::to_csv(table) : io::to_json_text(table);
  io::write_text_file(path, text);
  if (!quiet) log << "wrote " << path << " (" << table.rows.size() << " rows)\n";
}

void maybe_emit_plot(const Table& table, const RunConfig& cfg, const std::string& output_dir,
                     bool quiet, std::ostream& log) {
  if (cfg.output.plot_path.empty()) return;
  const std::string path = resolve_path(cfg.output.plot_path, output_dir);
  io::write_text_file(path, io::emit_plot(table, plot_style_of(cfg)));
  if (!quiet) log << "wrote " << path << "\n";
}

void run_bound(const RunConfig& cfg, const std::string& output_dir, bool quiet, std::ostream& log) {
  const Prior prior = make_prior(cfg);
  const FisherModel model = make_model(cfg.model);
  const TemperatureGrid grid = make_grid(prior.a1, prior.a2, cfg.grid.m, spacing_of(cfg.grid));
  Table table;
  table.config = resolved_config_json(cfg);
  for (BoundKind k : cfg.bounds) {
    const BoundReport rep = is_biased_kind(k) ? obb(prior, model, cfg.v, grid)
                                              : crlb_like(prior, model, cfg.v, grid);
    table.rows.push_back(io::row_from_report(rep, "", std::nullopt));
  }
  emit_table(table, cfg, output_dir, quiet, log);
}

void run_sweep(const RunConfig& cfg, const std::string& output_dir, bool quiet, std::ostream& log) {
  SweepSpec spec;
  if (cfg.sweep.variable == "n") spec.variable = SweepVariable::ParticleCount;
  else if (cfg.sweep.variable == "N") spec.variable = SweepVariable::LevelCount;
  else spec.variable = SweepVariable::Repetitions;
  spec.values = cfg.sweep.values;
  spec.probe_sizes = cfg.sweep.sizes;
  spec.probe = cfg.model.kind == "n_level"
                   ? ProbeFamily::NLevel
                   : (cfg.model.kind == "power_law" ? ProbeFamily::PowerLaw : ProbeFamily::SpinGas);
  spec.n = cfg.model.n;
  spec.levels = cfg.model.levels;
  spec.eps = cfg.model.eps;
  spec.power_law_c = cfg.model.c;
  spec.prior = make_prior(cfg);
  spec.v = cfg.v;
  spec.kinds = cfg.bounds;
  spec.grid_m = cfg.grid.m;
  spec.grid_mode = spacing_of(cfg.grid);
  const std::vector<SweepRow> rows = sweep(spec);
  Table table;
  table.config = resolved_config_json(cfg);
  for (const SweepRow& r : rows) {
    table.rows.push_back(io::row_from_report(r.report, r.sweep_var, double(r.sweep_value)));
  }
  emit_table(table, cfg, output_dir, quiet, log);
  maybe_emit_plot(table, cfg, output_dir, quiet, log);
}

EstimatorKind estimator_of(const McConfig& mc) {
  if (mc.estimator == "posterior_mean_theta") return EstimatorKind::PosteriorMeanTheta;
  if (mc.estimator == "max_likelihood") return EstimatorKind::MaximumLikelihood;
  return EstimatorKind::PosteriorMeanLog;
}

std::string dump_trials_csv(const TrialBatch& batch) {
  std::ostringstream os;
  os << "trial,theta_true,estimate,sq_log_error,outcomes\n";
  for (size_t t = 0; t < batch.records.size(); ++t) {
    const TrialRecord& r = batch.records[t];
    const double e = std::log(r.estimate) - std::log(r.theta_true);
    os << t << ',' << io::fmt17(r.theta_true) << ',' << io::fmt17(r.estimate) << ','
       << io::fmt17(e * e) << ',' << '"';
    for (size_t i = 0; i < r.outcomes.size(); ++i) {
      if (i) os << ';';
      os << r.outcomes[i];
    }
    os << '"' << "\n";
  }
  return os.str();
}

void run_verify(const RunConfig& cfg, const std::string& output_dir, bool quiet,
                std::ostream& log) {
  const Prior prior = make_prior(cfg);
  const FisherModel model = make_model(cfg.model);
  const TemperatureGrid grid = make_grid(prior.a1, prior.a2, cfg.grid.m, spacing_of(cfg.grid));
  const BoundReport bound = obb(prior, model, cfg.v, grid);
  const BoundReport crlb = crlb_like(prior, model, cfg.v, grid);
  const bool keep = !cfg.mc.dump_trials.empty();
  TrialBatch batch;
  if (cfg.model.kind == "spin_gas") {
    const SpinGasLikelihood lik{cfg.model.n, cfg.model.eps};
    batch = empirical_mle(lik, prior, cfg.v, cfg.mc.trials, cfg.mc.seed, grid,
                          estimator_of(cfg.mc), keep);
  } else {
    const NLevelLikelihood lik{cfg.model.levels, cfg.model.eps};
    batch = empirical_mle(lik, prior, cfg.v, cfg.mc.trials, cfg.mc.seed, grid,
                          estimator_of(cfg.mc), keep);
  }
  const bool respected = batch.empirical_mle >= bound.value - 3.0 * batch.standard_error;
  ordered_json doc;
  doc["config"] = resolved_config_json(cfg);
  doc["empirical_mle"] = batch.empirical_mle;
  doc["standard_error"] = batch.standard_error;
  doc["trials"] = batch.trials;
  doc["v"] = batch.v;
  doc["seed"] = batch.seed;
  doc["bound_kind"] = thermo::to_string(bound.kind);
  doc["bound_value"] = bound.value;
  doc["crlb_kind"] = thermo::to_string(crlb.kind);
  doc["crlb_value"] = crlb.value;
  doc["bound_respected"] = respected;
  const std::string path = resolve_path(cfg.output.path, output_dir);
  io::write_text_file(path, doc.dump(2) + "\n");
  if (!quiet) {
    log << "wrote " << path << " (empirical_mle " << batch.empirical_mle << ", "
        << thermo::to_string(bound.kind) << " " << bound.value << ", bound_respected "
        << (respected ? "true" : "false") << ")\n";
  }
  if (keep) {
    const std::string tpath = resolve_path(cfg.mc.dump_trials, output_dir);
    io::write_text_file(tpath, dump_trials_csv(batch));
    if (!quiet) log << "wrote " << tpath << " (" << batch.records.size() << " trials)\n";
  }
}

void run_plot(const RunConfig& cfg, const std::string& output_dir, bool quiet, std::ostream& log) {
  const std::string in_path = resolve_path(cfg.input, output_dir);
  const Table table = io::table_from_csv(io::read_text_file(in_path));
  const std::string path = resolve_path(cfg.output.plot_path, output_dir);
  io::write_text_file(path, io::emit_plot(table, plot_style_of(cfg)));
  if (!quiet) log << "wrote " << path << "\n";
}

ordered_json error_json(int code, const std::string& kind, const std::string& message,
                        const std::vector<std::string>& fields = {}) {
  ordered_json e;
  e["exit_code"] = code;
  e["kind"] = kind;
  e["message"] = message;
  if (!fields.empty()) e["fields"] = fields;
  ordered_json doc;
  doc["error"] = std::move(e);
  return doc;
}

}  // namespace

void run(const RunConfig& cfg, const std::string& output_dir, bool quiet, std::ostream& log) {
  switch (cfg.command) {
    case Command::Bound: run_bound(cfg, output_dir, quiet, log); return;
    case Command::Sweep: run_sweep(cfg, output_dir, quiet, log); return;
    case Command::Verify: run_verify(cfg, output_dir, quiet, log); return;
    case Command::Plot: run_plot(cfg, output_dir, quiet, log); return;
  }
  throw ConfigError("unknown command", {"command"});
}

int run_config_file(const std::string& config_path, const std::string& output_dir, bool quiet,
                    std::ostream& log, std::ostream& err) {
  try {
    const std::string text = io::read_text_file(config_path);
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) {
      throw ConfigError("config file is not valid JSON: " + config_path, {"$"});
    }
    const RunConfig cfg = parse_run_config(doc);
    run(cfg, output_dir, quiet, log);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << error_json(kExitConfig, "config", e.what(), e.fields).dump(2) << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    err << error_json(kExitIo, "io", e.what()).dump(2) << "\n";
    return kExitIo;
  } catch (const ConvergenceError& e) {
    err << error_json(kExitNumeric, "convergence", e.what()).dump(2) << "\n";
    return kExitNumeric;
  } catch (const SolverError& e) {
    err << error_json(kExitNumeric, "solver", e.what()).dump(2) << "\n";
    return kExitNumeric;
  } catch (const EstimationError& e) {
    err << error_json(kExitNumeric, "estimation", e.what()).dump(2) << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << error_json(kExitNumeric, "numeric", e.what()).dump(2) << "\n";
    return kExitNumeric;
  }
}

}  // namespace thermo::cli

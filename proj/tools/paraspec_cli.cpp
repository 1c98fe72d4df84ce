// paraspec: experiment runner. One subcommand per experiment, config file plus a few overrides.

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <iostream>
#include <set>

#include "paraspec/anderson1d.hpp"
#include "paraspec/experiments.hpp"
#include "paraspec/io.hpp"

using namespace paraspec;
using nlohmann::json;

namespace {

std::atomic<bool> g_cancel{false};

extern "C" void on_signal(int) { g_cancel.store(true); }

struct Options {
  std::string config_path;
  std::int64_t seed_offset = 0;
  unsigned threads = 1;
  std::string out;
  bool dry_run = false;
};

struct Failure {
  int code;
  json body;
};

std::string output_dir(const Options& o, const ExperimentConfig& c) {
  if (!o.out.empty()) return o.out;
  if (!c.output.empty()) return c.output;
  if (const char* env = std::getenv("PARASPEC_OUT"); env && *env) return env;
  return "paraspec_out";
}

/// Per-seed status from the rows a record actually holds.
void seed_statuses(RunManifest& m, const ExperimentConfig& c, const Table& t, bool cancelled) {
  std::set<std::int64_t> seen;
  if (!t.empty()) {
    const auto col = t.column("seed");
    for (const auto& r : t.rows)
      if (auto* v = std::get_if<std::int64_t>(&r[col])) seen.insert(*v);
  }
  for (auto s : c.seeds) {
    const bool ok = seen.count(std::int64_t(s));
    m.runs.push_back({"seed=" + std::to_string(s), ok ? "ok" : (cancelled ? "cancelled" : "not_run"), ""});
  }
}

void write_record(RunManifest& m, const std::string& dir, const ExperimentRecord& rec) {
  write_output(m, dir, "runs.csv", to_csv(rec.runs));
  json s = {{"experiment", rec.experiment},
            {"config_hash", rec.config_hash},
            {"complete", rec.complete},
            {"diagnostics", rec.diagnostics},
            {"summary", rec.summary}};
  write_output(m, dir, "summary.json", s.dump(2) + "\n");
  for (const auto& [name, f] : rec.fields) write_output(m, dir, name + ".psfs", snapshot_bytes(f));
  for (const auto& kind : plot_kinds(rec.experiment)) {
    try {
      const auto e = emit_plotdata(rec, kind, dir);
      for (const auto& f : e.files) register_output(m, f);
      m.partial = m.partial || e.partial;
    } catch (const InvalidInput& e) {
      m.diagnostics.push_back(std::string("plot data '") + kind + "' not written: " + e.what());
    }
  }
  for (const auto& d : rec.diagnostics) m.diagnostics.push_back(d);
}

void run_sample(RunManifest& m, const std::string& dir, const ExperimentConfig& c) {
  const TorusGrid g(2, c.L, c.N);
  const MollifierSpec mol{MollifierSpec::parse_kind(c.mollifiers.front()), c.epsilon};
  if (auto w = resolution_warning(g, mol)) m.diagnostics.push_back(*w);
  const DyadicPartition P;
  Table t;
  t.columns = {"seed", "c_eps", "xi_holder_norm", "xi2_holder_norm"};
  for (auto s : c.seeds) {
    if (g_cancel) break;
    const auto e = enhance(sample_white_noise(g, s), mol, P);
    const std::string stem = "seed" + std::to_string(s);
    write_output(m, dir, stem + "_xi_eps.psfs", snapshot_bytes(e.xi_eps));
    write_output(m, dir, stem + "_xi2_eps.psfs", snapshot_bytes(e.xi2_eps));
    json j = to_json(e);
    j["xi_holder_norm"] = holder_norm(e.xi_eps, c.alpha, P);
    j["xi2_holder_norm"] = holder_norm(e.xi2_eps, 2.0 * c.alpha + 2.0, P);
    write_output(m, dir, stem + "_noise.json", j.dump(2) + "\n");
    t.add({std::int64_t(s), e.c_eps, j["xi_holder_norm"].get<double>(), j["xi2_holder_norm"].get<double>()});
  }
  write_output(m, dir, "runs.csv", to_csv(t));
  seed_statuses(m, c, t, g_cancel);
}

void run_spectrum(RunManifest& m, const std::string& dir, const ExperimentConfig& c) {
  const TorusGrid g(2, c.L, c.N);
  const MollifierSpec mol{MollifierSpec::parse_kind(c.mollifiers.front()), c.epsilon};
  if (!c.zero_noise)
    if (auto w = resolution_warning(g, mol)) m.diagnostics.push_back(*w);
  Table t;
  t.columns = {"seed", "k", "eigenvalue", "residual"};
  json all = json::array();
  for (auto s : c.seeds) {
    if (g_cancel) break;
    const Field xi = c.zero_noise ? Field(g, "xi_eps") : mollify(sample_white_noise(g, s), mol);
    const double shift = c.zero_noise ? 0.0 : renorm_constant(g, mol);
    const auto sp = lowest_eigenpairs_multilevel(xi, shift, std::size_t(c.n_eigen), c.tol, 1, c.coarsest);
    for (std::size_t k = 0; k < sp.size(); ++k)
      t.add({std::int64_t(s), std::int64_t(k + 1), sp.eigenvalues[k], sp.residuals[k]});
    json j = to_json(sp);
    j["seed"] = s;
    j["c_eps"] = shift;
    all.push_back(j);
    write_output(m, dir, "seed" + std::to_string(s) + "_ground_state.psfs", snapshot_bytes(sp.eigenvectors[0]));
  }
  write_output(m, dir, "runs.csv", to_csv(t));
  write_output(m, dir, "spectrum.json", json{{"zero_noise", c.zero_noise}, {"spectra", all}}.dump(2) + "\n");
  seed_statuses(m, c, t, g_cancel);
}

void run_riccati1d(RunManifest& m, const std::string& dir, const ExperimentConfig& c, unsigned threads) {
  const auto steps = std::size_t(std::llround(c.L / c.path_step));
  if (std::abs(double(steps) * c.path_step - c.L) > 1e-9 * c.L)
    throw ConfigError("path_step", "L must be a multiple of path_step");
  const std::size_t n = std::size_t(c.n_eigen);
  std::vector<std::vector<double>> sh(c.seeds.size()), fd(c.seeds.size());
  std::vector<char> done(c.seeds.size(), 0);
  parallel_for(c.seeds.size(), threads, [&](std::size_t i) {
    if (g_cancel) return;
    const auto path = c.zero_noise ? anderson1d::BrownianPath::zero(c.L, steps)
                                   : anderson1d::BrownianPath::sample(c.L, steps, c.seeds[i]);
    sh[i] = anderson1d::eigenvalues_by_shooting(path, n, c.tol);
    fd[i] = anderson1d::fd_diagonalize(path, steps, n);
    done[i] = 1;
  });
  Table t;
  t.columns = {"seed", "k", "shooting", "finite_difference", "difference"};
  for (std::size_t i = 0; i < c.seeds.size(); ++i)
    if (done[i])
      for (std::size_t k = 0; k < n; ++k)
        t.add({std::int64_t(c.seeds[i]), std::int64_t(k + 1), sh[i][k], fd[i][k], sh[i][k] - fd[i][k]});
  write_output(m, dir, "runs.csv", to_csv(t));
  seed_statuses(m, c, t, g_cancel);
}

void run_mckean(RunManifest& m, const std::string& dir, const ExperimentConfig& c, unsigned threads) {
  anderson1d::McKeanOptions opt;
  opt.h = c.path_step;
  opt.tol = c.tol;
  opt.threads = threads;
  const auto rep = anderson1d::mckean_statistics(c.L_values, std::size_t(c.paths), c.seeds.front(), opt);
  write_output(m, dir, "samples.csv", anderson1d::mckean_csv(rep));
  json levels = json::array();
  for (const auto& lv : rep.levels)
    levels.push_back({{"L", lv.L}, {"paths", lv.lambda1.size()}, {"ks_gumbel", lv.ks}, {"mean_lambda1", lv.mean},
                      {"standard_error", lv.standard_error}});
  bool decreasing = true;
  for (std::size_t i = 1; i < rep.levels.size(); ++i) decreasing = decreasing && rep.levels[i].ks < rep.levels[i - 1].ks;
  write_output(m, dir, "summary.json",
               json{{"seed", rep.seed}, {"path_step", opt.h}, {"levels", levels}, {"ks_decreasing", decreasing}}.dump(2) +
                   "\n");
  m.runs.push_back({"seed=" + std::to_string(rep.seed), "ok", ""});
}

void execute(RunManifest& m, const std::string& dir, const std::string& sub, const ExperimentConfig& c,
             const Options& o, const RunContext& ctx);

int run(const std::string& sub, const Options& o) {
  RunManifest m;
  m.tool_version = PARASPEC_VERSION;
  m.subcommand = sub;
  m.started = utc_timestamp();
  ExperimentConfig c = load_config(o.config_path);
  if (!c.experiment.empty() && c.experiment != sub)
    throw ConfigError("experiment", "config is for '" + c.experiment + "', not '" + sub + "'");
  c = with_seed_offset(std::move(c), o.seed_offset);
  validate(c);
  m.config_hash = config_hash(c);
  const std::string dir = output_dir(o, c);
  if (o.dry_run) {
    if (sub != "riccati1d" && sub != "mckean") {
      const int N = sub == "paracheck" ? 2 * c.N : c.N;
      const double mb = estimate_memory_mb(N, std::size_t(c.n_eigen));
      if (mb > c.memory_budget_mb) throw BudgetExceeded("estimated memory exceeds memory_budget_mb");
    }
    std::cout << json{{"dry_run", true},
                      {"subcommand", sub},
                      {"config_hash", m.config_hash},
                      {"output_dir", dir},
                      {"seeds", c.seeds.size()},
                      {"config", canonical_text(c)}}
                     .dump(2)
              << "\n";
    return 0;
  }
  RunContext ctx;
  ctx.threads = o.threads;
  ctx.cancel = &g_cancel;
  ctx.log = [](const std::string& s) { std::cerr << s << "\n"; };
  write_output(m, dir, "config.canonical.txt", canonical_text(c));
  try {
    execute(m, dir, sub, c, o, ctx);
  } catch (const std::exception& e) {
    m.runs.push_back({sub, "failed", e.what()});
    write_manifest(m, dir);
    throw;
  }
  if (g_cancel) m.diagnostics.push_back("interrupted: in-flight runs finished, remaining runs not started");
  const auto path = write_manifest(m, dir);
  std::cout << json{{"manifest", path}, {"succeeded", m.succeeded()}}.dump() << "\n";
  return m.succeeded() ? 0 : (g_cancel ? 130 : 1);
}

void execute(RunManifest& m, const std::string& dir, const std::string& sub, const ExperimentConfig& c,
             const Options& o, const RunContext& ctx) {
  if (sub == "sample") run_sample(m, dir, c);
  else if (sub == "spectrum") run_spectrum(m, dir, c);
  else if (sub == "riccati1d") run_riccati1d(m, dir, c, o.threads);
  else if (sub == "mckean") run_mckean(m, dir, c, o.threads);
  else {
    ExperimentRecord rec;
    if (sub == "renorm-sweep") rec = renorm_sweep(c, ctx);
    else if (sub == "lipschitz") rec = lipschitz_probe(c, ctx);
    else if (sub == "scaling") rec = scaling_identity_check(c, ctx);
    else if (sub == "growth") rec = growth_study(c, ctx);
    else if (sub == "tails") rec = tail_study(c, ctx);
    else if (sub == "localization") rec = localization_diagnostic(c, ctx);
    else if (sub == "paracheck") rec = paracontrolled_regularity(c, ctx);
    else throw InvalidInput("unknown subcommand '" + sub + "'");
    write_record(m, dir, rec);
    seed_statuses(m, c, rec.runs, g_cancel);
  }
}

Failure classify(const std::exception& e) {
  if (auto* c = dynamic_cast<const ConfigError*>(&e))
    return {2, {{"error", "invalid_config"}, {"field", c->field()}, {"message", e.what()}}};
  if (dynamic_cast<const BudgetExceeded*>(&e)) return {3, {{"error", "budget_exceeded"}, {"message", e.what()}}};
  if (auto* c = dynamic_cast<const ConvergenceError*>(&e))
    return {4, {{"error", "convergence"}, {"message", e.what()}, {"best_residual", c->best_residual()}}};
  if (dynamic_cast<const InvalidInput*>(&e)) return {2, {{"error", "invalid_input"}, {"message", e.what()}}};
  return {1, {{"error", "runtime"}, {"message", e.what()}}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"paraspec: spectra of the two-dimensional Anderson Hamiltonian on the torus"};
  app.require_subcommand(0, 1);
  bool print_schema = false, version = false;
  app.add_flag("--print-schema", print_schema, "Print the config file schema and exit");
  app.add_flag("--version", version, "Print the tool version and exit");
  Options o;
  const std::vector<std::pair<std::string, std::string>> subs = {
      {"sample", "Sample and enhance white noise; write field snapshots"},
      {"spectrum", "Lowest eigenpairs of the renormalized operator"},
      {"renorm-sweep", "Renormalized eigenvalues over an epsilon schedule"},
      {"lipschitz", "Eigenvalue response to small noise perturbations"},
      {"scaling", "Torus rescaling identity, deterministic and in law"},
      {"growth", "E|Lambda_1|/log L and noise norms over L"},
      {"tails", "Lower tail of the ground-state law"},
      {"localization", "Inverse participation ratio of the ground state"},
      {"riccati1d", "1D shooting and finite-difference eigenvalues"},
      {"mckean", "1D ground state against the Gumbel law"},
      {"paracheck", "Strong paracontrolled split of the ground state"}};
  for (const auto& [name, help] : subs) {
    auto* s = app.add_subcommand(name, help);
    s->add_option("--config", o.config_path, "Config file (key = value)")->required()->check(CLI::ExistingFile);
    s->add_option("--seed-offset", o.seed_offset, "Added to every seed");
    s->add_option("--threads", o.threads, "Worker threads (0 = hardware)")->check(CLI::NonNegativeNumber);
    s->add_option("--out", o.out, "Output directory (default: config output, then $PARASPEC_OUT)");
    s->add_flag("--dry-run", o.dry_run, "Validate the config and print the plan; write nothing");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << json{{"error", "usage"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  }
  if (version) {
    std::cout << PARASPEC_VERSION << "\n";
    return 0;
  }
  if (print_schema) {
    std::cout << config_schema_text();
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << json{{"error", "usage"}, {"message", "a subcommand is required"}}.dump() << "\n";
    return 2;
  }
  o.threads = resolve_threads(o.threads);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  try {
    return run(app.get_subcommands().front()->get_name(), o);
  } catch (const std::exception& e) {
    const auto f = classify(e);
    std::cerr << f.body.dump() << "\n";
    return f.code;
  }
}

#include "cli/commands.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <ostream>

#include <fmt/format.h>

#include "cli/config.hpp"
#include "cli/experiments.hpp"
#include "edgepipe/bounds.hpp"
#include "edgepipe/data.hpp"
#include "edgepipe/errors.hpp"
#include "edgepipe/rng.hpp"

namespace edgepipe::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr std::int64_t kDefaultN = 18576;
constexpr double kReferenceL = 1.908;
constexpr double kReferenceC = 0.061;

std::string num(double v) { return format_number(v); }
std::string regime(Regime r) { return std::string(to_string(r)); }

class CsvOut {
 public:
  CsvOut(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw DataError("cannot write " + path.string());
    row(header);
  }
  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << fields[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

struct Loaded {
  Dataset train;
  DatasetManifest manifest;
};

struct Context {
  std::string command;
  std::string figure;
  Settings settings;
  fs::path out_dir;
  std::ostream& out;
  Json manifest = Json::object();
  std::vector<std::string> files;

  fs::path file(const std::string& name) {
    files.push_back(name);
    return out_dir / name;
  }
};

std::optional<Loaded> load_data(const Settings& s) {
  if (!s.has("data.source")) return std::nullopt;
  const std::uint64_t master = require_seed(s, "loading data");
  const std::string& source = s.raw("data.source");

  Dataset raw;
  if (source == "synthetic") {
    SyntheticSpec spec;
    spec.N = s.integer("data.synthetic_N");
    spec.d = static_cast<Eigen::Index>(s.integer("data.synthetic_d"));
    spec.noise = s.number("data.synthetic_noise");
    raw = synthesize(spec, derive_seed(master, {0xda7aULL})).data;
  } else {
    CsvSchema schema;
    schema.has_header = s.boolean("data.has_header");
    const std::string& delim = s.raw("data.delimiter");
    if (delim.size() != 1) throw ConfigError("data.delimiter must be a single character");
    schema.delimiter = delim.front();
    schema.label_column = s.raw("data.label_column");
    std::string cols = s.raw("data.feature_columns");
    for (std::size_t p; (p = cols.find(',')) != std::string::npos;) cols[p] = ' ';
    std::istringstream words(cols);
    for (std::string w; words >> w;) schema.feature_columns.push_back(w);
    raw = load_csv(source, schema).data;
  }

  const double fraction = s.number("data.split_fraction");
  const std::uint64_t split_seed = derive_seed(master, {0x5b17ULL});
  Split parts = split(raw, fraction, split_seed);
  const Preprocessing mode = parse_preprocessing(s.raw("data.preprocessing"));
  Preprocessed pre = preprocess(parts.train, mode, s.boolean("data.scale_labels"));

  Loaded l{std::move(pre.data), {}};
  l.manifest.source = source;
  l.manifest.preprocessing = mode;
  l.manifest.transform = pre.transform;
  l.manifest.split_fraction = fraction;
  l.manifest.split_seed = split_seed;
  l.manifest.total_rows = raw.size();
  l.manifest.train_rows = parts.train.size();
  l.manifest.holdout_rows = parts.holdout.size();
  l.manifest.dim = raw.dim();
  return l;
}

std::int64_t resolve_N(const Settings& s, const std::optional<Loaded>& data) {
  if (data) {
    const auto n = static_cast<std::int64_t>(data->train.size());
    if (s.has("protocol.N") && s.integer("protocol.N") != n)
      throw ConfigError(fmt::format("protocol.N = {} but the training set has {} rows",
                                    s.integer("protocol.N"), n));
    return n;
  }
  return s.has("protocol.N") ? s.integer("protocol.N") : kDefaultN;
}

const Dataset& need_data(const std::optional<Loaded>& data, const std::string& what) {
  if (!data)
    throw ConfigError(what + " needs a dataset: set data.source to a CSV path or 'synthetic'");
  return data->train;
}

ProtocolConfig pilot_config(const Settings& s, const ProtocolConfig& tmpl) {
  ProtocolConfig cfg = tmpl;
  cfg.n_c = s.has("constants.pilot_n_c") ? s.integer("constants.pilot_n_c") : tmpl.N;
  return cfg;
}

BoundConstants resolve_constants(Context& ctx, const ProtocolConfig& tmpl,
                                 const std::optional<Loaded>& data) {
  const Settings& s = ctx.settings;
  Json prov = Json::object();
  const LossSpec spec = loss_spec(s, tmpl.N);

  auto given = [&](const std::string& name) {
    const double v = s.number("constants." + name);
    prov[name] = {{"value", v}, {"source", "given"}};
    return v;
  };

  double L, c;
  const bool est_L = s.raw("constants.L") == "estimate";
  const bool est_c = s.raw("constants.c") == "estimate";
  if (est_L || est_c) {
    const auto sc = estimate_smoothness_constants(need_data(data, "estimating L and c"), spec);
    L = est_L ? sc.L : given("L");
    c = est_c ? sc.c : given("c");
    if (est_L) prov["L"] = {{"value", L}, {"source", "estimated from the Hessian"}};
    if (est_c) prov["c"] = {{"value", c}, {"source", "estimated from the Hessian"}};
  } else {
    L = given("L");
    c = given("c");
  }

  const InitPolicy init = init_policy(s);
  double M;
  if (s.raw("constants.M") == "estimate") {
    const Dataset& train = need_data(data, "estimating M");
    const std::uint64_t seed = derive_seed(require_seed(s, "estimating M"),
                                           {static_cast<std::uint64_t>(Stream::Pilot), 1});
    const ProtocolConfig pcfg = pilot_config(s, tmpl);
    RunOptions opts;
    const auto total = compute_schedule(pcfg).total_updates();
    opts.trace_stride = std::max<std::int64_t>(1, total);
    opts.iterate_stride = std::max<std::int64_t>(1, total / 64);
    const auto run = run_pipeline(train, pcfg, spec, init.draw(train.dim(), seed), seed, opts);
    M = estimate_noise_constants(train, spec, run.trace.iterates).M;
    prov["M"] = {{"value", M},
                 {"source", "largest gradient variance along a pilot run"},
                 {"probes", run.trace.iterates.size()}};
  } else {
    M = given("M");
  }

  const double M_V = given("M_V");
  double M_G;
  if (s.has("constants.M_G")) {
    M_G = given("M_G");
  } else {
    M_G = M_V + 1.0;
    prov["M_G"] = {{"value", M_G}, {"source", "M_V + 1"}};
  }

  double D;
  if (s.raw("constants.D") == "pilot") {
    const ProtocolConfig pcfg = pilot_config(s, tmpl);
    D = pilot_diameter(need_data(data, "a pilot diameter"), pcfg, spec, init,
                       require_seed(s, "a pilot diameter"));
    prov["D"] = {{"value", D},
                 {"source", "1.1 x largest iterate distance of a pilot run"},
                 {"pilot_n_c", pcfg.n_c}};
  } else {
    D = given("D");
  }

  const BoundConstants k = BoundConstants::make(L, c, M, M_V, M_G, D, tmpl.alpha);
  prov["gamma"] = k.gamma;
  prov["noise_floor"] = noise_floor(k);
  ctx.manifest["constants"] = prov;
  return k;
}

void record_data(Context& ctx, const std::optional<Loaded>& data) {
  if (data) ctx.manifest["dataset"] = Json::parse(manifest_text(data->manifest));
}

std::vector<std::string> schedule_fields(const PipelineSchedule& sc, double n_o) {
  return {std::to_string(sc.n_c),   num(n_o),
          std::to_string(sc.B_d),   std::to_string(sc.B),
          std::to_string(sc.n_p),   std::to_string(sc.n_l),
          num(sc.tau_l),            regime(sc.regime),
          num(sc.delivered_fraction)};
}

void cmd_schedule(Context& ctx) {
  const Settings& s = ctx.settings;
  const auto data = load_data(s);
  record_data(ctx, data);
  const ProtocolConfig tmpl = protocol_template(s, resolve_N(s, data));
  CsvOut csv(ctx.file("schedule.csv"),
             {"n_c", "n_o", "B_d", "B", "n_p", "n_l", "tau_l", "regime", "delivered_fraction"});
  ctx.out << fmt::format("{:>8} {:>8} {:>6} {:>6} {:>6} {:>8} {:>10} {:>8} {:>9}\n", "n_c", "n_o",
                         "B_d", "B", "n_p", "n_l", "tau_l", "regime", "delivered");
  for (double n_o : overheads(s)) {
    ProtocolConfig cfg = tmpl;
    cfg.n_o = n_o;
    for (std::int64_t n_c : block_sizes(s, cfg)) {
      cfg.n_c = n_c;
      const auto sc = compute_schedule(cfg);
      csv.row(schedule_fields(sc, n_o));
      ctx.out << fmt::format("{:>8} {:>8} {:>6} {:>6} {:>6} {:>8} {:>10.6g} {:>8} {:>9.4f}\n",
                             n_c, n_o, sc.B_d, sc.B, sc.n_p, sc.n_l, sc.tau_l,
                             regime(sc.regime), sc.delivered_fraction);
    }
  }
}

void write_curve(CsvOut& csv, double n_o, const OptimizationResult& r) {
  for (const auto& e : r.curve.entries)
    csv.row({std::to_string(e.n_c), num(n_o), num(e.bound), regime(e.regime),
             (r.boundary_n_c && *r.boundary_n_c == e.n_c) ? "1" : "0",
             e.n_c == r.n_c_opt ? "1" : "0"});
}

const std::vector<std::string> kCurveHeader = {"n_c",    "n_o",         "bound",
                                               "regime", "is_boundary", "is_optimum"};

std::string optimum_line(double n_o, const OptimizationResult& r) {
  return fmt::format("n_o = {:<8} optimal n_c = {:<8} bound = {:.8g} ({}){}\n", n_o, r.n_c_opt,
                     r.bound_at_opt, regime(r.regime_at_opt),
                     r.boundary_n_c ? fmt::format(", full delivery from n_c = {}", *r.boundary_n_c)
                                    : std::string(", full delivery never reached"));
}

void cmd_bound_curve(Context& ctx, bool with_optimum_table) {
  const Settings& s = ctx.settings;
  const auto data = load_data(s);
  record_data(ctx, data);
  const ProtocolConfig tmpl = protocol_template(s, resolve_N(s, data));
  const BoundConstants k = resolve_constants(ctx, tmpl, data);

  CsvOut curve(ctx.file(with_optimum_table ? "curve.csv" : "bound_curve.csv"), kCurveHeader);
  std::optional<CsvOut> optimum;
  if (with_optimum_table)
    optimum.emplace(ctx.file("optimum.csv"),
                    std::vector<std::string>{"n_o", "n_c_opt", "bound", "regime", "boundary_n_c"});
  for (double n_o : overheads(s)) {
    ProtocolConfig cfg = tmpl;
    cfg.n_o = n_o;
    const auto sizes = block_sizes(s, cfg);
    std::vector<std::int64_t> grid(sizes.begin(), sizes.end());
    const auto r = optimize_block_size(cfg, grid, k);
    write_curve(curve, n_o, r);
    if (optimum)
      optimum->row({num(n_o), std::to_string(r.n_c_opt), num(r.bound_at_opt),
                    regime(r.regime_at_opt),
                    r.boundary_n_c ? std::to_string(*r.boundary_n_c) : ""});
    ctx.out << optimum_line(n_o, r);
  }
}

RunOptions run_options(const Settings& s) {
  RunOptions o;
  o.trace_stride = s.integer("run.trace_stride");
  const auto threads = s.integer("run.threads");
  if (threads < 1) throw ConfigError("run.threads must be at least 1");
  o.threads = static_cast<unsigned>(threads);
  return o;
}

std::vector<std::uint64_t> seeds_for(Context& ctx, const std::string& what) {
  const std::uint64_t master = require_seed(ctx.settings, what);
  const auto runs = ctx.settings.integer("run.runs");
  if (runs < 1) throw ConfigError("run.runs must be at least 1");
  auto seeds = run_seeds(master, static_cast<std::size_t>(runs));
  ctx.manifest["run_seeds"] = seeds;
  return seeds;
}

void cmd_simulate(Context& ctx) {
  const Settings& s = ctx.settings;
  const auto data = load_data(s);
  record_data(ctx, data);
  const Dataset& train = need_data(data, "simulate");
  const ProtocolConfig tmpl = protocol_template(s, resolve_N(s, data));
  const LossSpec spec = loss_spec(s, tmpl.N);
  const InitPolicy init = init_policy(s);
  const RunOptions opts = run_options(s);
  const auto seeds = seeds_for(ctx, "simulate");

  CsvOut summary(ctx.file("summary.csv"), {"n_o", "n_c", "mean_initial", "mean_final",
                                           "stderr_final", "is_best"});
  for (double n_o : overheads(s)) {
    ProtocolConfig cfg = tmpl;
    cfg.n_o = n_o;
    std::vector<std::int64_t> sizes = s.has("sweep.n_c") ? s.integers("sweep.n_c")
                                                         : block_sizes(s, cfg);
    std::vector<std::pair<std::int64_t, AveragedTrace>> results;
    for (std::int64_t n_c : sizes) {
      cfg.n_c = n_c;
      auto avg = average_runs(train, cfg, spec, init, seeds, opts);
      CsvOut trace(ctx.file(fmt::format("trace_no{}_nc{}.csv", num(n_o), n_c)),
                   {"time", "mean_loss", "stderr_loss"});
      for (std::size_t i = 0; i < avg.times.size(); ++i)
        trace.row({num(avg.times[i]), num(avg.mean_loss[i]), num(avg.stderr_loss[i])});
      results.emplace_back(n_c, std::move(avg));
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < results.size(); ++i)
      if (results[i].second.mean_final < results[best].second.mean_final) best = i;
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& [n_c, avg] = results[i];
      summary.row({num(n_o), std::to_string(n_c), num(avg.mean_initial), num(avg.mean_final),
                   num(avg.stderr_final), i == best ? "1" : "0"});
      ctx.out << fmt::format("n_o = {:<8} n_c = {:<8} final loss {:.8g} +- {:.2g}{}\n", n_o, n_c,
                             avg.mean_final, avg.stderr_final, i == best ? "  (best)" : "");
    }
  }
}

void write_checks(Context& ctx, const std::vector<Check>& checks, std::ostream& summary) {
  Json list = Json::array();
  for (const auto& c : checks) {
    const std::string line =
        fmt::format("[{}] {}: {}\n", c.pass ? "PASS" : "FAIL", c.name, c.detail);
    summary << line;
    ctx.out << line;
    list.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  }
  ctx.manifest["checks"] = list;
}

void reproduce_fig3(Context& ctx) {
  const Settings& s = ctx.settings;
  const auto data = load_data(s);
  record_data(ctx, data);
  const ProtocolConfig tmpl = protocol_template(s, resolve_N(s, data));
  const BoundConstants k = resolve_constants(ctx, tmpl, data);
  const auto rep = fig3_experiment(tmpl, grid_policy(s), k, overheads(s));

  CsvOut curve(ctx.file("bound_curve.csv"), kCurveHeader);
  CsvOut optimum(ctx.file("optimum.csv"), {"n_o", "n_c_opt", "bound", "regime", "boundary_n_c"});
  for (std::size_t i = 0; i < rep.overheads.size(); ++i) {
    const auto& r = rep.results[i];
    write_curve(curve, rep.overheads[i], r);
    optimum.row({num(rep.overheads[i]), std::to_string(r.n_c_opt), num(r.bound_at_opt),
                 regime(r.regime_at_opt),
                 r.boundary_n_c ? std::to_string(*r.boundary_n_c) : ""});
    ctx.out << optimum_line(rep.overheads[i], r);
  }
  std::ofstream summary(ctx.file("summary.txt"));
  summary << "Bound-versus-block-size curves\n";
  for (std::size_t i = 0; i < rep.overheads.size(); ++i)
    summary << optimum_line(rep.overheads[i], rep.results[i]);
  write_checks(ctx, rep.checks, summary);
}

void reproduce_fig4(Context& ctx) {
  const Settings& s = ctx.settings;
  const auto data = load_data(s);
  record_data(ctx, data);
  const Dataset& train = need_data(data, "reproduce fig4");
  Fig4Options opt;
  opt.tmpl = protocol_template(s, resolve_N(s, data));
  opt.spec = loss_spec(s, opt.tmpl.N);
  opt.grid = grid_policy(s);
  opt.reference = s.integers("sweep.n_c");
  opt.k = resolve_constants(ctx, opt.tmpl, data);
  opt.init = init_policy(s);
  opt.seeds = seeds_for(ctx, "reproduce fig4");
  opt.run = run_options(s);
  opt.thresholds = s.numbers("check.thresholds");
  opt.gap_tolerance = s.number("check.gap_tolerance");

  // Constants of the data itself, for comparison only.
  const auto est = estimate_smoothness_constants(train, opt.spec);
  ctx.manifest["estimated_constants"] = {
      {"L", est.L},
      {"c", est.c},
      {"reference_L", kReferenceL},
      {"reference_c", kReferenceC},
      {"relative_difference_L", (est.L - kReferenceL) / kReferenceL},
      {"relative_difference_c", (est.c - kReferenceC) / kReferenceC}};

  const auto rep = fig4_experiment(train, opt);

  CsvOut traces(ctx.file("traces.csv"), {"n_c", "time", "mean_loss", "stderr_loss"});
  for (const auto& [n_c, t] : rep.traces)
    for (std::size_t i = 0; i < t.times.size(); ++i)
      traces.row({std::to_string(n_c), num(t.times[i]), num(t.mean_loss[i]),
                  num(t.stderr_loss[i])});

  CsvOut finals(ctx.file("final_losses.csv"), {"n_c", "mean_final", "stderr_final", "bound",
                                               "is_experimental_optimum", "is_bound_optimum"});
  for (std::size_t i = 0; i < rep.experimental.table.size(); ++i) {
    const auto& row = rep.experimental.table[i];
    double bound = 0.0;
    for (const auto& e : rep.bound.curve.entries)
      if (e.n_c == row.n_c) bound = e.bound;
    finals.row({std::to_string(row.n_c), num(row.mean_final), num(row.stderr_final), num(bound),
                row.n_c == rep.experimental.n_c_star ? "1" : "0",
                row.n_c == rep.bound.n_c_opt ? "1" : "0"});
  }

  std::ofstream summary(ctx.file("summary.txt"));
  const std::string head = fmt::format(
      "Training loss versus time, {} runs, n_o = {}\n"
      "experimental optimum n_c* = {} (final loss {:.8g})\n"
      "bound-optimal n_c = {} (final loss {:.8g})\n"
      "estimated L = {:.6g}, c = {:.6g} (reference values {} and {})\n",
      opt.seeds.size(), opt.tmpl.n_o, rep.experimental.n_c_star, rep.final_at_exp_opt,
      rep.bound.n_c_opt, rep.final_at_bound_opt, est.L, est.c, kReferenceL, kReferenceC);
  summary << head;
  ctx.out << head;
  write_checks(ctx, rep.checks, summary);
}

void apply_preset(Settings& s, const std::string& figure) {
  if (figure == "fig3") {
    s.set("sweep.n_o", "0 200 1000 5000");
    s.set("grid.kind", "step");
    s.set("grid.min", "100");
    s.set("grid.step", "100");
  } else if (figure == "fig4") {
    s.set("protocol.n_o", "1000");
    s.set("sweep.n_c", "500 1032 2064 4644 9288 18576");
    s.set("grid.kind", "step");
    s.set("grid.min", "100");
    s.set("grid.step", "100");
    s.set("constants.D", "pilot");
    s.set("run.trace_stride", "50");
  }
}

void write_manifest(Context& ctx) {
  const std::string ini = ctx.settings.to_ini();
  {
    std::ofstream f(ctx.out_dir / "resolved.ini");
    f << ini;
  }
  Json m = Json::object();
  m["tool"] = "edgepipe";
  m["version"] = kVersion;
  m["command"] = ctx.command;
  if (!ctx.figure.empty()) m["figure"] = ctx.figure;
  m["rerun"] = fmt::format("edgepipe {}{} --config resolved.ini --out <dir>", ctx.command,
                           ctx.figure.empty() ? "" : " " + ctx.figure);
  m["config_hash"] = fmt::format("fnv1a64:{:016x}", fnv1a(ini));
  Json config = Json::object();
  for (const auto& [key, value] : ctx.settings.entries()) {
    const auto dot = key.find('.');
    config[key.substr(0, dot)][key.substr(dot + 1)] = value;
  }
  m["config"] = config;
  for (auto& [key, value] : ctx.manifest.items()) m[key] = value;
  m["outputs"] = ctx.files;
  m["libraries"] = {
      {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION,
                            EIGEN_MINOR_VERSION)},
      {"fmt", FMT_VERSION},
      {"nlohmann_json", fmt::format("{}.{}.{}", NLOHMANN_JSON_VERSION_MAJOR,
                                    NLOHMANN_JSON_VERSION_MINOR, NLOHMANN_JSON_VERSION_PATCH)},
      {"compiler", __VERSION__}};
  std::ofstream f(ctx.out_dir / "manifest.json");
  f << m.dump(2) << '\n';
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const DataError*>(&e)) return 3;
  if (dynamic_cast<const NumericalError*>(&e)) return 4;
  return 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pipelined edge-learning simulator and block-size optimizer", "edgepipe"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "edgepipe_out", figure;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> runs, threads;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "INI file with [protocol], [constants], ...")
        ->check(CLI::ExistingFile);
    sub->add_option("--set", sets, "override, section.key=value (repeatable)");
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "master seed (run.seed)");
    sub->add_option("--runs", runs, "Monte Carlo runs (run.runs)");
    sub->add_option("--threads", threads, "worker threads (run.threads)");
  };
  auto* sched = app.add_subcommand("schedule", "block timeline for each n_c and n_o");
  auto* curve = app.add_subcommand("bound-curve", "optimality-gap bound versus n_c");
  auto* optim = app.add_subcommand("optimize", "bound-optimal block size");
  auto* sim = app.add_subcommand("simulate", "averaged training-loss traces");
  auto* repro = app.add_subcommand("reproduce", "canned experiments: fig3 or fig4");
  for (auto* sub : {sched, curve, optim, sim, repro}) common(sub);
  repro->add_option("figure", figure, "fig3 | fig4")
      ->required()
      ->check(CLI::IsMember({"fig3", "fig4"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "edgepipe: " << e.what() << "\n"
        << "run 'edgepipe --help' for usage\n";
    return 2;
  }

  CLI::App* chosen = app.get_subcommands().front();
  Context ctx{chosen->get_name(), figure, Settings{}, out_dir, out, Json::object(), {}};
  const bool reproducing = chosen == repro;
  try {
    if (reproducing) apply_preset(ctx.settings, figure);
    if (!config_path.empty()) ctx.settings.load_ini(config_path);
    for (const auto& a : sets) ctx.settings.assign(a);
    if (seed) ctx.settings.set("run.seed", std::to_string(*seed));
    if (runs) ctx.settings.set("run.runs", std::to_string(*runs));
    if (threads) ctx.settings.set("run.threads", std::to_string(*threads));

    fs::create_directories(ctx.out_dir);
    fs::remove(ctx.out_dir / "FAILED");
    if (chosen == sched) {
      cmd_schedule(ctx);
    } else if (chosen == curve) {
      cmd_bound_curve(ctx, false);
    } else if (chosen == optim) {
      cmd_bound_curve(ctx, true);
    } else if (chosen == sim) {
      cmd_simulate(ctx);
    } else if (figure == "fig3") {
      reproduce_fig3(ctx);
    } else {
      reproduce_fig4(ctx);
    }
    write_manifest(ctx);
  } catch (const std::exception& e) {
    err << "edgepipe " << ctx.command << ": " << e.what() << '\n';
    if (reproducing && fs::is_directory(ctx.out_dir)) {
      std::ofstream marker(ctx.out_dir / "FAILED");
      marker << e.what() << '\n';
    }
    return exit_code_for(e);
  }
  return 0;
}

}  // namespace edgepipe::cli

#include "adaptsim/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <future>
#include <iomanip>
#include <sstream>

#include "CLI11.hpp"
#include "adaptsim/errors.hpp"
#include "adaptsim/scenario.hpp"
#include "adaptsim/textio.hpp"

namespace fs = std::filesystem;

namespace adaptsim {

namespace {

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

// Collects written files and emits the run manifest beside them.
class Run {
 public:
  Run(std::vector<std::string> command) : command_(std::move(command)), started_(utc_now()) {}

  void write(const std::string& path, const std::string& content) {
    if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
    write_file(path, content);
    outputs_.push_back({{"path", path}, {"sha256", sha256_hex(content)}});
  }

  void finish(const std::string& manifest_path, const std::string& scenario_hash, std::uint64_t seed) {
    nlohmann::json m = {{"tool", "adaptsim"},
                        {"tool_version", kToolVersion},
                        {"scenario_hash", scenario_hash},
                        {"master_seed", seed},
                        {"command", command_},
                        {"started_at", started_},
                        {"finished_at", utc_now()},
                        {"outputs", outputs_}};
    if (auto parent = fs::path(manifest_path).parent_path(); !parent.empty()) fs::create_directories(parent);
    write_file(manifest_path, m.dump(2) + "\n");
  }

 private:
  std::vector<std::string> command_;
  std::string started_;
  nlohmann::json outputs_ = nlohmann::json::array();
};

std::string manifest_beside(const std::string& file) { return file + ".manifest.json"; }

InstalledMeasures parse_installs(const std::vector<std::string>& specs, const World& w) {
  InstalledMeasures inst(static_cast<int>(w.city.zones.size()));
  for (const auto& s : specs) {
    const auto colon = s.rfind(':');
    if (colon == std::string::npos) throw ValidationError("install '" + s + "' must look like zone_id:MeasureKind");
    const auto zone_id = s.substr(0, colon);
    const auto kind = measure_from_string(s.substr(colon + 1));
    int zone = -1;
    for (std::size_t z = 0; z < w.city.zones.size(); ++z)
      if (w.city.zones[z].id == zone_id) zone = static_cast<int>(z);
    if (zone < 0) throw ValidationError("install '" + s + "' names an unknown zone");
    apply_measure(inst, zone, kind, w.city, w.catalog);
  }
  return inst;
}

// Rain for a one-off event: a fixed quantile, or a draw from `seed` when given.
double event_rain(const Scenario& sc, int year, double q, const std::optional<std::uint64_t>& seed) {
  if (seed) {
    Rng rng = Rng(sc.env.master_seed).split(*seed);
    return sample_event(sc.world->rainfall, year, rng).intensity;
  }
  return quantile(sc.world->rainfall, year, q);
}

struct EventOpts {
  std::string config;
  int year = kFirstYear;
  double quantile = 0.5;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> installs;

  void add(CLI::App* app) {
    app->add_option("--config", config, "Scenario config file")->required();
    app->add_option("--year", year, "Event year")->capture_default_str();
    app->add_option("--quantile", quantile, "Rain quantile in [0,1] (ignored when --seed is given)")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    app->add_option("--seed", seed, "Draw the rain at random from this seed instead");
    app->add_option("--install", installs, "Installed measure as zone_id:MeasureKind (repeatable)");
  }
};

struct EventResult {
  double rain_mm;
  DepthRaster depth;
  std::vector<AccessProfile> access;
  std::vector<double> q;
};

EventResult run_event(const Scenario& sc, const EventOpts& o) {
  Environment env(sc.env);
  env.set_state(0, parse_installs(o.installs, *sc.world));
  EventResult r;
  r.rain_mm = event_rain(sc, o.year, o.quantile, o.seed);
  r.depth = env.flood_for(r.rain_mm);
  const auto& w = *sc.world;
  const auto times = effective_edge_times(w.city.graph, r.depth, w.impedance, env.params().drainage_bonus);
  for (const auto& zone : w.city.zones) {
    r.access.push_back(accessibility(zone, w.city.pois, shortest_times(w.city.graph, times, zone.centroid),
                                     w.access_threshold_s));
    r.q.push_back(qol(r.access.back(), w.weights));
  }
  return r;
}

std::string format_access_csv(const World& w, const std::vector<AccessProfile>& access) {
  std::ostringstream out;
  out << "zone_id,category,per_capita\n";
  for (const auto& a : access)
    for (const auto& [cat, v] : a.per_capita) out << a.zone_id << ',' << cat << ',' << format_double(v) << '\n';
  (void)w;
  return out.str();
}

std::string format_q_csv(const World& w, const std::vector<double>& q) {
  std::ostringstream out;
  out << "zone_id,q\n";
  for (std::size_t z = 0; z < q.size(); ++z) out << w.city.zones[z].id << ',' << format_double(q[z]) << '\n';
  return out.str();
}

std::string trace_text(const Environment& env, const Trajectory& tr, std::optional<int> episode) {
  std::string out;
  for (const auto& r : tr.results) {
    auto rec = trace_record(env, r);
    if (episode) rec["episode"] = *episode;
    out += rec.dump() + "\n";
  }
  return out;
}

QTable load_qtable(const std::string& path) { return parse_qtable(read_file(path), path); }

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Climate adaptation planning simulator: rainfall, flooding, accessibility, QoL and RL."};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  int jobs = 1;
  app.add_option("--jobs", jobs, "Worker threads for episode-parallel commands (1 = sequential)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  std::vector<std::string> command{"adaptsim"};
  command.insert(command.end(), args.begin(), args.end());
  Run run(command);

  // validate
  std::string v_config;
  auto* c_validate = app.add_subcommand("validate", "Load and validate a scenario, print a summary");
  c_validate->add_option("--config", v_config, "Scenario config file")->required();

  // sample-rain
  std::string sr_config, sr_out;
  int sr_year = kFirstYear, sr_count = 10;
  std::uint64_t sr_seed = 0;
  auto* c_rain = app.add_subcommand("sample-rain", "Draw rain intensities for one year");
  c_rain->add_option("--config", sr_config, "Scenario config file")->required();
  c_rain->add_option("--year", sr_year, "Year")->capture_default_str();
  c_rain->add_option("--count", sr_count, "Number of draws")->capture_default_str()->check(CLI::PositiveNumber);
  c_rain->add_option("--seed", sr_seed, "Stream seed")->capture_default_str();
  c_rain->add_option("--out", sr_out, "Output CSV (stdout when omitted)");

  // simulate-flood
  EventOpts f_opts;
  std::string f_out;
  auto* c_flood = app.add_subcommand("simulate-flood", "Flood depth raster for one rain event");
  f_opts.add(c_flood);
  c_flood->add_option("--out", f_out, "Output ASCII grid")->required();

  // accessibility / qol
  EventOpts a_opts, q_opts;
  std::string a_out, q_out;
  auto* c_access = app.add_subcommand("accessibility", "Per-zone per-capita accessibility after one event");
  a_opts.add(c_access);
  c_access->add_option("--out", a_out, "Output CSV")->required();
  auto* c_qol = app.add_subcommand("qol", "Per-zone QoL index after one event");
  q_opts.add(c_qol);
  c_qol->add_option("--out", q_out, "Output CSV")->required();

  // fit-weights
  std::string fw_survey, fw_out;
  FitConfig fw_cfg;
  auto* c_fit = app.add_subcommand("fit-weights", "Fit QoL weights to a survey CSV");
  c_fit->add_option("--survey", fw_survey, "Survey CSV (satisfied,<categories...>)")->required();
  c_fit->add_option("--lambda", fw_cfg.l2_lambda, "L2 penalty")->capture_default_str();
  c_fit->add_option("--max-iterations", fw_cfg.max_iterations, "Newton iteration cap")->capture_default_str();
  c_fit->add_option("--tolerance", fw_cfg.tolerance, "Gradient norm tolerance")->capture_default_str();
  c_fit->add_flag("!--no-intercept", fw_cfg.include_intercept, "Fit without an intercept");
  c_fit->add_option("--out", fw_out, "Fit report JSON")->required();

  // train
  std::string t_config, t_out;
  std::optional<int> t_episodes;
  std::optional<std::uint64_t> t_seed;
  auto* c_train = app.add_subcommand("train", "Train a tabular Q-learning agent");
  c_train->add_option("--config", t_config, "Scenario config file")->required();
  c_train->add_option("--episodes", t_episodes, "Training episodes (default from config)");
  c_train->add_option("--seed", t_seed, "Training seed (default from config)");
  c_train->add_option("--out", t_out, "Output directory")->required();

  // evaluate
  std::string e_config, e_policy = "do-nothing", e_qtable, e_out;
  std::uint64_t e_seed = 0;
  int e_episodes = 1;
  auto* c_eval = app.add_subcommand("evaluate", "Run a policy over several seeded episodes");
  c_eval->add_option("--config", e_config, "Scenario config file")->required();
  c_eval->add_option("--policy", e_policy, "greedy, random or do-nothing")->capture_default_str();
  c_eval->add_option("--qtable", e_qtable, "Q-table checkpoint (greedy policy)");
  c_eval->add_option("--seed", e_seed, "First episode seed")->capture_default_str();
  c_eval->add_option("--episodes", e_episodes, "Episodes, seeds seed..seed+n-1")->capture_default_str()->check(CLI::PositiveNumber);
  c_eval->add_option("--out", e_out, "Output directory")->required();

  // rollout
  std::string r_config, r_policy = "do-nothing", r_qtable, r_out;
  std::uint64_t r_seed = 0;
  auto* c_roll = app.add_subcommand("rollout", "Run one episode and write its trace");
  c_roll->add_option("--config", r_config, "Scenario config file")->required();
  c_roll->add_option("--policy", r_policy, "greedy, random or do-nothing")->capture_default_str();
  c_roll->add_option("--qtable", r_qtable, "Q-table checkpoint (greedy policy)");
  c_roll->add_option("--seed", r_seed, "Episode seed")->capture_default_str();
  c_roll->add_option("--out", r_out, "Trace JSON-lines file")->required();

  // export-map
  EventOpts m_opts;
  std::string m_out;
  bool m_depth = false;
  auto* c_map = app.add_subcommand("export-map", "Write per-zone QoL CSV and optionally the flood depth grid");
  m_opts.add(c_map);
  c_map->add_option("--out-dir", m_out, "Output directory")->required();
  c_map->add_flag("--depth", m_depth, "Also write depth.asc");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    (void)e;
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    // Help for the subcommand that failed, when one was named.
    for (auto* sub : app.get_subcommands()) err << sub->help();
    return kExitUsage;
  }

  try {
    if (*c_validate) {
      const auto sc = load_scenario(v_config);
      const auto& c = sc.world->city;
      out << "scenario " << sc.name << ": ok\n"
          << "grid " << c.dem.geo.nrows << "x" << c.dem.geo.ncols << ", zones " << c.zones.size() << ", nodes "
          << c.graph.node_count() << ", edges " << c.graph.edge_count() << ", pois " << c.pois.size()
          << ", measure kinds " << kMeasureKinds << "\n"
          << "content hash " << content_hash(sc) << "\n";
      return kExitOk;
    }
    if (*c_rain) {
      const auto sc = load_scenario(sr_config);
      Rng rng = Rng(sc.env.master_seed).split(sr_seed);
      std::ostringstream csv;
      csv << "draw,intensity_mm\n";
      for (int i = 0; i < sr_count; ++i)
        csv << i << ',' << format_double(sample_event(sc.world->rainfall, sr_year, rng).intensity) << '\n';
      if (sr_out.empty()) {
        out << csv.str();
      } else {
        run.write(sr_out, csv.str());
        run.finish(manifest_beside(sr_out), content_hash(sc), sc.env.master_seed);
      }
      return kExitOk;
    }
    if (*c_flood) {
      const auto sc = load_scenario(f_opts.config);
      const auto ev = run_event(sc, f_opts);
      run.write(f_out, format_ascii_grid(ev.depth.geo, ev.depth.depth, sc.world->city.dem.nodata));
      run.finish(manifest_beside(f_out), content_hash(sc), sc.env.master_seed);
      out << "rain_mm " << format_double(ev.rain_mm) << ", ponded_m3 " << format_double(ev.depth.ponded_volume())
          << ", outflow_m3 " << format_double(ev.depth.outflow_volume) << "\n";
      return kExitOk;
    }
    if (*c_access || *c_qol) {
      const bool is_access = c_access->parsed();
      const auto& o = is_access ? a_opts : q_opts;
      const auto& path = is_access ? a_out : q_out;
      const auto sc = load_scenario(o.config);
      const auto ev = run_event(sc, o);
      run.write(path, is_access ? format_access_csv(*sc.world, ev.access) : format_q_csv(*sc.world, ev.q));
      run.finish(manifest_beside(path), content_hash(sc), sc.env.master_seed);
      return kExitOk;
    }
    if (*c_fit) {
      const auto survey = parse_survey_csv(read_csv(fw_survey));
      const auto rep = fit_weights(survey, fw_cfg);
      run.write(fw_out, to_json(rep).dump(2) + "\n");
      run.finish(manifest_beside(fw_out), sha256_hex(read_file(fw_survey)), 0);
      out << "converged in " << rep.iterations << " iterations, gradient norm " << format_double(rep.gradient_norm)
          << "\n";
      return kExitOk;
    }
    if (*c_train) {
      auto sc = load_scenario(t_config);
      if (t_episodes) sc.agent.episodes = *t_episodes;
      if (t_seed) sc.agent.seed = *t_seed;
      Environment env(sc.env);
      const auto res = train(env, sc.agent);
      const fs::path dir(t_out);
      run.write((dir / "qtable.tsv").string(), format_qtable(res.table));
      run.write((dir / "curve.csv").string(), format_curve_csv(res.curve));
      run.finish((dir / "manifest.json").string(), content_hash(sc), sc.env.master_seed);
      out << "trained " << sc.agent.episodes << " episodes, " << res.table.size() << " states, final return "
          << format_double(res.curve.back().ret) << "\n";
      return kExitOk;
    }
    if (*c_eval) {
      const auto sc = load_scenario(e_config);
      const auto policy = policy_from_string(e_policy);
      std::optional<QTable> table;
      if (!e_qtable.empty()) table = load_qtable(e_qtable);
      if (policy == PolicyKind::Greedy && !table) throw ValidationError("--policy greedy needs --qtable");
      // Episodes are independent; with --jobs they run concurrently and are collected in seed order.
      std::vector<std::string> traces(static_cast<std::size_t>(e_episodes));
      std::vector<double> returns(traces.size());
      auto run_one = [&](int i) {
        Environment env(sc.env);
        const auto tr = rollout(env, policy, e_seed + static_cast<std::uint64_t>(i), table ? &*table : nullptr);
        traces[static_cast<std::size_t>(i)] = trace_text(env, tr, i);
        returns[static_cast<std::size_t>(i)] = tr.total_return;
      };
      for (int start = 0; start < e_episodes; start += jobs) {
        std::vector<std::future<void>> batch;
        for (int i = start; i < std::min(e_episodes, start + jobs); ++i)
          batch.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred, run_one, i));
        for (auto& f : batch) f.get();
      }
      std::string all;
      std::ostringstream csv;
      csv << "episode,seed,return\n";
      double mean = 0.0;
      for (std::size_t i = 0; i < traces.size(); ++i) {
        all += traces[i];
        csv << i << ',' << e_seed + i << ',' << format_double(returns[i]) << '\n';
        mean += returns[i] / static_cast<double>(returns.size());
      }
      const fs::path dir(e_out);
      run.write((dir / "trace.jsonl").string(), all);
      run.write((dir / "returns.csv").string(), csv.str());
      run.finish((dir / "manifest.json").string(), content_hash(sc), sc.env.master_seed);
      out << "policy " << e_policy << ", episodes " << e_episodes << ", mean return " << format_double(mean) << "\n";
      return kExitOk;
    }
    if (*c_roll) {
      const auto sc = load_scenario(r_config);
      const auto policy = policy_from_string(r_policy);
      std::optional<QTable> table;
      if (!r_qtable.empty()) table = load_qtable(r_qtable);
      if (policy == PolicyKind::Greedy && !table) throw ValidationError("--policy greedy needs --qtable");
      Environment env(sc.env);
      const auto tr = rollout(env, policy, r_seed, table ? &*table : nullptr);
      run.write(r_out, trace_text(env, tr, std::nullopt));
      run.finish(manifest_beside(r_out), content_hash(sc), sc.env.master_seed);
      out << "return " << format_double(tr.total_return) << " over " << tr.steps.size() << " steps\n";
      return kExitOk;
    }
    if (*c_map) {
      const auto sc = load_scenario(m_opts.config);
      const auto ev = run_event(sc, m_opts);
      const fs::path dir(m_out);
      run.write((dir / "zones_q.csv").string(), format_q_csv(*sc.world, ev.q));
      if (m_depth)
        run.write((dir / "depth.asc").string(), format_ascii_grid(ev.depth.geo, ev.depth.depth, sc.world->city.dem.nodata));
      run.finish((dir / "manifest.json").string(), content_hash(sc), sc.env.master_seed);
      return kExitOk;
    }
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace adaptsim

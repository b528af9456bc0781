// qrlma command-line front end. Exit codes: 0 success, 1 invalid input,
// 2 numerical failure.

#include "qrlma/fixtures.hpp"
#include "qrlma/forecast.hpp"
#include "qrlma/gillespie.hpp"
#include "qrlma/infer.hpp"
#include "qrlma/io.hpp"
#include "qrlma/matfun.hpp"
#include "qrlma/model_select.hpp"
#include "qrlma/study.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using namespace qrlma;

// Where the reaction system, rates and initial state come from.
struct SystemArgs {
  std::string preset;
  std::string spec;
  std::string theta;
  std::string y0;

  void add(CLI::App* cmd, bool with_state) {
    auto* p = cmd->add_option("--preset", preset, "built-in preset name");
    auto* s = cmd->add_option("--spec", spec, "system spec JSON file");
    p->excludes(s);
    cmd->add_option("--theta", theta, "comma-separated rates (default: spec rates or preset truth)");
    if (with_state) cmd->add_option("--y0", y0, "comma-separated initial state (default: preset y0)");
  }

  struct Loaded {
    ReactionSystem system;
    std::optional<RateVector> theta;
    std::optional<StateVector> y0;
    std::optional<Preset> preset;
  };

  Loaded load() const {
    Loaded out;
    if (!preset.empty()) {
      Preset p = load_preset(preset);
      out.system = p.system;
      out.theta = p.theta_true;
      if (p.y0.size() > 0) out.y0 = p.y0;
      out.preset = std::move(p);
    } else if (!spec.empty()) {
      SystemSpec sp = read_system_spec(spec);
      out.system = sp.system;
      out.theta = sp.rate_vector();
    } else {
      throw ValidationError("either --preset or --spec is required");
    }
    if (!theta.empty()) out.theta = parse_number_list(theta, "--theta");
    if (!y0.empty()) out.y0 = parse_number_list(y0, "--y0");
    if (out.theta && out.theta->size() != out.system.num_reactions()) {
      throw DimensionError("--theta has " + std::to_string(out.theta->size()) + " entries, the system has " +
                           std::to_string(out.system.num_reactions()) + " reactions");
    }
    if (out.y0 && out.y0->size() != out.system.num_species()) {
      throw DimensionError("--y0 has " + std::to_string(out.y0->size()) + " entries, the system has " +
                           std::to_string(out.system.num_species()) + " species");
    }
    return out;
  }

  RateVector require_theta(const Loaded& l) const {
    if (!l.theta) throw ValidationError("rates needed: pass --theta or give every reaction a rate in the spec");
    return *l.theta;
  }
  StateVector require_y0(const Loaded& l) const {
    if (!l.y0) throw ValidationError("initial state needed: pass --y0");
    return *l.y0;
  }

  void echo(RunManifest& m) const {
    m.preset = preset;
    m.spec_path = spec;
    if (!theta.empty()) m.parameters["theta"] = theta;
    if (!y0.empty()) m.parameters["y0"] = y0;
  }
};

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text_file(path, text);
  }
}

template <typename T>
std::string str(const T& value) {
  std::ostringstream os;
  os << std::setprecision(17) << value;
  return os.str();
}

std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& what) {
  std::vector<std::size_t> out;
  for (double x : parse_number_list(text, what)) {
    if (x < 1 || x != static_cast<double>(static_cast<std::size_t>(x))) {
      throw ValidationError(what + ": expected positive integers, got " + str(x));
    }
    out.push_back(static_cast<std::size_t>(x));
  }
  return out;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

struct FitArgs {
  std::string init = "lla";
  std::string theta0;
  bool stderr_flag = false;
  std::string stderr_method = "outer_product";
  int max_iter = 500;
  double gtol = 1e-8;
  double lower_bound = 1e-12;
  std::string gradient = "analytic";
  unsigned threads = 0;

  void add(CLI::App* cmd, bool with_init) {
    if (with_init) {
      cmd->add_option("--init", init, "initializer: lla or values")->check(CLI::IsMember({"lla", "values"}));
      cmd->add_option("--theta0", theta0, "comma-separated start rates for --init values");
      cmd->add_flag("--stderr", stderr_flag, "compute Fisher-information standard errors");
      cmd->add_option("--stderr-method", stderr_method, "outer_product or sandwich")
          ->check(CLI::IsMember({"outer_product", "sandwich"}));
    }
    cmd->add_option("--max-iter", max_iter, "optimizer iteration limit");
    cmd->add_option("--gtol", gtol, "projected-gradient tolerance");
    cmd->add_option("--lower-bound", lower_bound, "lower bound on every rate");
    cmd->add_option("--gradient", gradient, "analytic or finite_difference")
        ->check(CLI::IsMember({"analytic", "finite_difference"}));
    cmd->add_option("--threads", threads, "worker threads (0: QRLMA_THREADS or hardware)");
  }

  FitConfig config() const {
    FitConfig c;
    c.max_iterations = max_iter;
    c.gradient_tolerance = gtol;
    c.theta_lower_bound = lower_bound;
    c.initializer = parse_initializer(init);
    if (!theta0.empty()) c.initial_theta = parse_number_list(theta0, "--theta0");
    c.gradient_mode = parse_gradient_mode(gradient);
    c.compute_stderr = stderr_flag;
    c.stderr_method = parse_covariance_method(stderr_method);
    c.threads = threads;
    c.validate();
    return c;
  }
};

int run(int argc, char** argv) {
  CLI::App app{"Rate estimation for stochastic quasi-reaction systems"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "simulate observed SSA trajectories to CSV");
  SystemArgs sim_sys;
  sim_sys.add(sim, true);
  std::size_t sim_reps = 0, sim_keep = 0, sim_points = 0;
  std::string sim_times, sim_out, sim_manifest;
  std::optional<std::uint64_t> sim_seed;
  sim->add_option("--replicates", sim_reps, "number of replicates (default: preset)");
  sim->add_option("--keep-every", sim_keep, "keep every k-th event (default: largest preset value)");
  sim->add_option("--points", sim_points, "transitions per replicate (default: preset)");
  sim->add_option("--times", sim_times, "observe on this time grid instead of event counts");
  sim->add_option("--seed", sim_seed, "master seed (default: preset seed, else 1)");
  sim->add_option("--out", sim_out, "output CSV ('-' for stdout)");
  sim->add_option("--manifest", sim_manifest, "manifest JSON (default: <out>.manifest.json)");

  // fit
  auto* fit = app.add_subcommand("fit", "estimate rates by LMA least squares");
  SystemArgs fit_sys;
  fit_sys.add(fit, false);
  FitArgs fit_args;
  fit_args.add(fit, true);
  std::string fit_data, fit_out;
  fit->add_option("--data", fit_data, "observation CSV")->required();
  fit->add_option("--out", fit_out, "output JSON ('-' for stdout)");

  // predict
  auto* pred = app.add_subcommand("predict", "conditional mean after a horizon");
  SystemArgs pred_sys;
  pred_sys.add(pred, true);
  double pred_horizon = 0.0, pred_dt = 0.0;
  std::string pred_method = "closed_form", pred_out;
  pred->add_option("--horizon", pred_horizon, "prediction horizon")->required();
  pred->add_option("--method", pred_method, "closed_form, euler or rk4")
      ->check(CLI::IsMember({"closed_form", "euler", "rk4"}));
  pred->add_option("--dt", pred_dt, "step size for euler and rk4");
  pred->add_option("--out", pred_out, "output JSON ('-' for stdout)");

  // stiffness
  auto* stiff = app.add_subcommand("stiffness", "Euler/RK4 error against the closed form over step sizes");
  SystemArgs stiff_sys;
  stiff_sys.add(stiff, true);
  std::string stiff_grid, stiff_out;
  double stiff_horizon = 0.0;
  stiff->add_option("--dt-grid", stiff_grid, "comma-separated step sizes (default: preset)");
  stiff->add_option("--horizon", stiff_horizon, "largest evaluation time (default: preset)");
  stiff->add_option("--out", stiff_out, "output CSV ('-' for stdout)");

  // select
  auto* sel = app.add_subcommand("select", "stepwise BIC search over a candidate library");
  SystemArgs sel_sys;
  sel_sys.add(sel, false);
  FitArgs sel_fit;
  sel_fit.add(sel, false);
  std::string sel_data, sel_fixed, sel_stopping = "full_sweep", sel_out, sel_profile;
  sel->add_option("--data", sel_data, "observation CSV")->required();
  sel->add_option("--fixed", sel_fixed, "comma-separated reaction labels kept in every model");
  sel->add_option("--stopping", sel_stopping, "full_sweep or first_local_minimum")
      ->check(CLI::IsMember({"full_sweep", "first_local_minimum"}));
  sel->add_option("--out", sel_out, "trace JSON ('-' for stdout)");
  sel->add_option("--profile", sel_profile, "per-complexity best-BIC CSV");

  // study
  auto* stu = app.add_subcommand("study", "LLA vs LMA over a dt or T sweep");
  std::string stu_preset, stu_sweep = "dt", stu_grid, stu_out, stu_summary;
  std::size_t stu_seeds = 0;
  std::uint64_t stu_seed = 1;
  unsigned stu_threads = 0;
  bool stu_stderr = false;
  stu->add_option("--preset", stu_preset, "study preset")->required();
  stu->add_option("--sweep", stu_sweep, "dt or T")->check(CLI::IsMember({"dt", "T"}));
  stu->add_option("--n-seeds", stu_seeds, "datasets per grid value (default: preset)");
  stu->add_option("--grid", stu_grid, "comma-separated keep_every or n_points values");
  stu->add_option("--seed", stu_seed, "master seed");
  stu->add_option("--out", stu_out, "per-dataset estimates CSV ('-' for stdout)");
  stu->add_option("--summary", stu_summary, "bias and W1 summary CSV");
  stu->add_option("--threads", stu_threads, "concurrent datasets (0: QRLMA_THREADS or hardware)");
  stu->add_flag("--stderr", stu_stderr, "also compute LMA standard errors");

  // preset
  auto* pre = app.add_subcommand("preset", "list or export built-in presets");
  pre->require_subcommand(1);
  auto* pre_list = pre->add_subcommand("list", "print preset names and descriptions");
  auto* pre_export = pre->add_subcommand("export", "write a preset as a system spec JSON");
  std::string pre_name, pre_out;
  pre_export->add_option("name", pre_name, "preset name")->required();
  pre_export->add_option("--out", pre_out, "output JSON ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (sim->parsed()) {
    const auto l = sim_sys.load();
    const RateVector theta = sim_sys.require_theta(l);
    const StateVector y0 = sim_sys.require_y0(l);
    const std::uint64_t seed = sim_seed.value_or(l.preset ? l.preset->seed : 1);
    const std::size_t reps = sim_reps ? sim_reps : (l.preset ? l.preset->n_replicates : 1);
    RunManifest m;
    m.command = "simulate";
    m.seed = seed;
    m.output = sim_out;
    sim_sys.echo(m);
    m.parameters["replicates"] = std::to_string(reps);
    ObservationSet data;
    std::vector<double> times;
    if (!sim_times.empty()) {
      times = to_std(parse_number_list(sim_times, "--times"));
    } else if (sim_keep == 0 && l.preset && !l.preset->observation_times.empty()) {
      times = l.preset->observation_times;
    }
    if (!times.empty()) {
      std::string t;
      for (double x : times) t += (t.empty() ? "" : ",") + str(x);
      m.parameters["times"] = t;
      data = simulate_dataset_on_grid(l.system, theta, y0, reps, times, seed);
    } else {
      std::size_t keep = sim_keep;
      if (keep == 0 && l.preset && !l.preset->keep_every_grid.empty()) {
        keep = *std::max_element(l.preset->keep_every_grid.begin(), l.preset->keep_every_grid.end());
      }
      if (keep == 0) keep = 1;
      const std::size_t points = sim_points ? sim_points : (l.preset ? l.preset->n_points : 20);
      m.parameters["keep_every"] = std::to_string(keep);
      m.parameters["points"] = std::to_string(points);
      data = simulate_dataset(l.system, theta, y0, reps, keep, points, seed);
    }
    std::ostringstream os;
    write_observations(os, data);
    emit(sim_out, os.str());
    std::string manifest_path = sim_manifest;
    if (manifest_path.empty() && !sim_out.empty() && sim_out != "-") manifest_path = sim_out + ".manifest.json";
    if (!manifest_path.empty()) write_text_file(manifest_path, m.to_json());
    return 0;
  }

  if (fit->parsed()) {
    const auto l = fit_sys.load();
    const ObservationSet data = read_observations(fit_data);
    FitConfig cfg = fit_args.config();
    if (cfg.initializer == Initializer::user_supplied && !cfg.initial_theta) {
      if (!fit_sys.theta.empty() && l.theta) {
        cfg.initial_theta = *l.theta;
      } else {
        throw ValidationError("--init values needs --theta0");
      }
    }
    const FitResult res = lma_fit(data, l.system, cfg);
    RunManifest m;
    m.command = "fit";
    m.output = fit_out;
    fit_sys.echo(m);
    m.parameters["data"] = fit_data;
    emit(fit_out, fit_result_to_json(res, l.system, cfg, m));
    if (!res.converged) std::cerr << "warning: fit did not converge (" << to_string(res.termination) << ")\n";
    return 0;
  }

  if (pred->parsed()) {
    const auto l = pred_sys.load();
    PredictionRequest req;
    req.system = l.system;
    req.theta = pred_sys.require_theta(l);
    req.y0 = pred_sys.require_y0(l);
    req.horizon = pred_horizon;
    req.method = parse_prediction_method(pred_method);
    req.dt = pred_dt;
    const StateVector mean = predict(req);
    RunManifest m;
    m.command = "predict";
    m.output = pred_out;
    pred_sys.echo(m);
    m.parameters["horizon"] = str(pred_horizon);
    m.parameters["method"] = pred_method;
    if (req.method != PredictionMethod::closed_form) m.parameters["dt"] = str(pred_dt);
    emit(pred_out, prediction_to_json(l.system, mean, pred_horizon, pred_method, m));
    return 0;
  }

  if (stiff->parsed()) {
    const auto l = stiff_sys.load();
    const RateVector theta = stiff_sys.require_theta(l);
    const StateVector y0 = stiff_sys.require_y0(l);
    std::vector<double> grid = l.preset ? l.preset->dt_grid : std::vector<double>{};
    if (!stiff_grid.empty()) grid = to_std(parse_number_list(stiff_grid, "--dt-grid"));
    if (grid.empty()) throw ValidationError("--dt-grid is required for this system");
    double horizon = stiff_horizon > 0 ? stiff_horizon : (l.preset ? l.preset->horizon : 0.0);
    if (!(horizon > 0)) throw ValidationError("--horizon must be positive");
    const StiffnessReport report = stiffness_report(l.system, theta, y0, grid, evaluation_times(horizon));
    std::ostringstream os;
    write_stiffness_csv(os, report);
    emit(stiff_out, os.str());
    std::ostream& info = (stiff_out.empty() || stiff_out == "-") ? std::cerr : std::cout;
    info << std::setprecision(6) << "eigenvalues:";
    for (Index i = 0; i < report.eigenvalues.size(); ++i) {
      const auto z = report.eigenvalues(i);
      info << ' ' << z.real();
      if (z.imag() != 0) info << (z.imag() > 0 ? "+" : "") << z.imag() << 'i';
    }
    info << "\nstiffness ratio: " << report.stiffness_ratio << (report.stiff ? " (stiff)" : "") << '\n';
    return 0;
  }

  if (sel->parsed()) {
    const auto l = sel_sys.load();
    const ObservationSet data = read_observations(sel_data);
    CandidateLibrary lib;
    lib.full_system = l.system;
    if (!sel_fixed.empty()) {
      std::stringstream ss(sel_fixed);
      std::string label;
      while (std::getline(ss, label, ',')) {
        const auto& labels = l.system.reaction_labels();
        const auto it = std::find(labels.begin(), labels.end(), label);
        if (it == labels.end()) throw ValidationError("--fixed: no reaction labelled '" + label + "'");
        lib.fixed_reactions.push_back(static_cast<Index>(it - labels.begin()));
      }
    }
    SelectionConfig cfg;
    cfg.fit = sel_fit.config();
    cfg.stopping = parse_stopping_rule(sel_stopping);
    cfg.threads = sel_fit.threads;
    const SelectionTrace trace = stepwise_search(data, lib, cfg);
    RunManifest m;
    m.command = "select";
    m.output = sel_out;
    sel_sys.echo(m);
    m.parameters["data"] = sel_data;
    m.parameters["stopping"] = sel_stopping;
    if (!sel_fixed.empty()) m.parameters["fixed"] = sel_fixed;
    emit(sel_out, selection_trace_to_json(trace, m));
    if (!sel_profile.empty()) {
      std::ostringstream os;
      write_complexity_profile(os, trace);
      write_text_file(sel_profile, os.str());
    }
    return 0;
  }

  if (stu->parsed()) {
    StudyConfig cfg;
    cfg.preset = load_preset(stu_preset);
    cfg.sweep = parse_sweep(stu_sweep);
    if (!stu_grid.empty()) cfg.grid = parse_size_list(stu_grid, "--grid");
    cfg.n_seeds = stu_seeds;
    cfg.seed = stu_seed;
    cfg.compute_stderr = stu_stderr;
    cfg.threads = stu_threads;
    const StudyResult result = run_study(cfg);
    std::ostringstream os;
    write_study_csv(os, result);
    emit(stu_out, os.str());
    if (!stu_summary.empty()) {
      std::ostringstream ss;
      write_study_summary(ss, result, stu_seed);
      write_text_file(stu_summary, ss.str());
    }
    std::size_t failed = 0;
    for (const auto& row : result.rows) failed += !row.error.empty();
    if (failed) std::cerr << "warning: " << failed << " datasets could not be fitted\n";
    return 0;
  }

  if (pre_list->parsed()) {
    for (const auto& name : preset_names()) {
      std::cout << std::left << std::setw(16) << name << ' ' << load_preset(name).description << '\n';
    }
    return 0;
  }
  if (pre_export->parsed()) {
    const Preset p = load_preset(pre_name);
    emit(pre_out, serialize_system_spec(p.system, p.theta_true));
    return 0;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const qrlma::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const qrlma::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

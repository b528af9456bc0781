#include "qrlma/study.hpp"

#include "qrlma/gillespie.hpp"
#include "qrlma/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace qrlma {

std::string to_string(Sweep sweep) { return sweep == Sweep::dt ? "dt" : "T"; }

Sweep parse_sweep(const std::string& name) {
  if (name == "dt") return Sweep::dt;
  if (name == "T") return Sweep::T;
  throw ValidationError("unknown sweep '" + name + "' (expected dt or T)");
}

EstimateEnsemble StudyResult::ensemble(std::size_t grid_value, bool lma) const {
  EstimateEnsemble out;
  out.truth = truth;
  for (const auto& row : rows) {
    if (row.grid_value != grid_value || !row.error.empty()) continue;
    out.estimates.push_back(lma ? row.lma : row.lla);
  }
  return out;
}

namespace {

double mean_spacing(const ObservationSet& data) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& rep : data.replicates) {
    for (std::size_t k = 1; k < rep.times.size(); ++k) {
      total += rep.times[k] - rep.times[k - 1];
      ++n;
    }
  }
  return n ? total / static_cast<double>(n) : 0.0;
}

}  // namespace

StudyResult run_study(const StudyConfig& config) {
  const Preset& preset = config.preset;
  config.fit.validate();
  StudyResult result;
  result.sweep = config.sweep;
  result.truth = preset.theta_true;
  result.labels = preset.system.reaction_labels();
  result.grid = config.grid;
  if (result.grid.empty()) result.grid = config.sweep == Sweep::dt ? preset.keep_every_grid : preset.n_points_grid;
  if (result.grid.empty()) throw ValidationError("preset '" + preset.name + "' has no grid for this sweep");
  const std::size_t n_seeds = config.n_seeds ? config.n_seeds : preset.n_seeds;
  if (n_seeds == 0) throw ValidationError("study needs at least one seed");

  std::size_t fixed_keep = 0;
  if (config.fixed_keep_every) {
    fixed_keep = *config.fixed_keep_every;
  } else if (!preset.keep_every_grid.empty()) {
    fixed_keep = *std::max_element(preset.keep_every_grid.begin(), preset.keep_every_grid.end());
  }
  const std::size_t fixed_points = config.fixed_n_points.value_or(preset.n_points);

  result.rows.resize(result.grid.size() * n_seeds);
  parallel_for(
      result.rows.size(),
      [&](std::size_t task) {
        StudyRow& row = result.rows[task];
        row.grid_value = result.grid[task / n_seeds];
        row.seed_index = task % n_seeds;
        row.dataset_seed = derive_seed(config.seed, row.seed_index);
        row.keep_every = config.sweep == Sweep::dt ? row.grid_value : fixed_keep;
        row.n_points = config.sweep == Sweep::T ? row.grid_value : fixed_points;
        try {
          const ObservationSet data = simulate_dataset(preset.system, preset.theta_true, preset.y0,
                                                       preset.n_replicates, row.keep_every, row.n_points,
                                                       row.dataset_seed);
          row.mean_dt = mean_spacing(data);
          row.lla = lla_estimate(data, preset.system);
          FitConfig fit = config.fit;
          fit.threads = 1;
          fit.compute_stderr = config.compute_stderr;
          const FitResult res = lma_fit(data, preset.system, fit);
          row.lma = res.theta_hat;
          row.lma_converged = res.converged;
          row.lma_objective = res.objective;
          row.lma_stderr = res.standard_errors;
        } catch (const Error& e) {
          row.error = e.what();
        }
      },
      config.threads == 0 ? default_thread_count() : config.threads);
  return result;
}

void write_study_csv(std::ostream& os, const StudyResult& result) {
  os << "sweep,grid_value,keep_every,n_points,seed_index,dataset_seed,mean_dt,method,converged,objective";
  for (const auto& l : result.labels) os << ',' << l;
  os << '\n' << std::setprecision(17);
  for (const auto& row : result.rows) {
    if (!row.error.empty()) continue;
    for (int lma = 0; lma < 2; ++lma) {
      os << to_string(result.sweep) << ',' << row.grid_value << ',' << row.keep_every << ',' << row.n_points << ','
         << row.seed_index << ',' << row.dataset_seed << ',' << row.mean_dt << ',' << (lma ? "lma" : "lla") << ','
         << (lma ? (row.lma_converged ? "true" : "false") : "") << ',';
      if (lma) os << row.lma_objective;
      const RateVector& est = lma ? row.lma : row.lla;
      for (Index j = 0; j < est.size(); ++j) os << ',' << est(j);
      os << '\n';
    }
  }
}

void write_study_summary(std::ostream& os, const StudyResult& result, std::uint64_t bootstrap_seed) {
  os << "grid_value,method,rate,truth,median,mean_bias,abs_median_bias,sd,w1,w1_q25,w1_q75,n\n"
     << std::setprecision(17);
  for (std::size_t g : result.grid) {
    for (int lma = 0; lma < 2; ++lma) {
      const EstimateEnsemble ens = result.ensemble(g, lma != 0);
      if (ens.estimates.empty()) continue;
      const std::vector<CoordinateBias> bias = bias_summary(ens);
      const Vector w1 = wasserstein1_by_coordinate(ens);
      for (std::size_t j = 0; j < bias.size(); ++j) {
        const auto jj = static_cast<Index>(j);
        EstimateEnsemble one;
        one.truth = ens.truth.segment(jj, 1);
        for (const auto& e : ens.estimates) one.estimates.push_back(e.segment(jj, 1));
        const Band band = bootstrap_band(one, 1000, bootstrap_seed);
        os << g << ',' << (lma ? "lma" : "lla") << ',' << result.labels[j] << ',' << ens.truth(jj) << ','
           << bias[j].median << ',' << bias[j].mean_bias << ',' << std::abs(bias[j].median - ens.truth(jj)) << ','
           << bias[j].sd << ',' << w1(jj) << ',' << band.q25 << ',' << band.q75 << ',' << ens.estimates.size()
           << '\n';
      }
    }
  }
}

}  // namespace qrlma

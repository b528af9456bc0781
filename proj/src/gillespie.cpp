#include "qrlma/gillespie.hpp"

#include "qrlma/hazard.hpp"
#include "qrlma/parallel.hpp"

#include <cmath>
#include <random>

namespace qrlma {

Index ObservationSet::num_transitions() const noexcept {
  Index total = 0;
  for (const auto& rep : replicates) total += std::max<Index>(0, rep.num_points() - 1);
  return total;
}

void ObservationSet::validate() const {
  if (species.empty()) throw ValidationError("observation set has no species");
  if (replicates.empty()) throw ValidationError("observation set has no replicates");
  const Index p = num_species();
  for (const auto& rep : replicates) {
    const std::string where = "replicate '" + rep.id + "'";
    if (rep.num_points() < 2) throw ValidationError(where + " has fewer than 2 time points");
    if (rep.states.rows() != p || rep.states.cols() != rep.num_points()) {
      throw DimensionError(where + ": states are " + std::to_string(rep.states.rows()) + "x" +
                           std::to_string(rep.states.cols()) + ", expected " + std::to_string(p) + "x" +
                           std::to_string(rep.num_points()));
    }
    for (std::size_t k = 0; k < rep.times.size(); ++k) {
      if (!std::isfinite(rep.times[k])) throw ValidationError(where + " has a non-finite time");
      if (k > 0 && !(rep.times[k] > rep.times[k - 1])) {
        throw ValidationError(where + ": times must be strictly increasing (index " + std::to_string(k) + ")");
      }
    }
    if (!rep.states.allFinite() || (rep.states.array() < 0).any()) {
      throw ValidationError(where + " has negative or non-finite counts");
    }
  }
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 finalizer over (master, index): a counter-based stream split.
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

// Uniform on [0, 1) from the top 53 bits; independent of the standard library's distributions.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

Trajectory simulate_ssa(const ReactionSystem& system, const RateVector& theta, const StateVector& y0,
                        const StopCondition& stop, std::uint64_t seed) {
  detail::check_state_dim(system, y0.size());
  detail::check_rates(system, theta);
  for (Index l = 0; l < y0.size(); ++l) {
    if (!(y0(l) >= 0) || y0(l) != std::floor(y0(l))) {
      throw ValidationError("initial state for simulation must be nonnegative integers");
    }
  }

  const Index p = system.num_species();
  const Matrix& v = system.net_effect_real();
  std::mt19937_64 rng(seed);

  Trajectory traj;
  std::vector<double> flat(y0.data(), y0.data() + p);
  traj.event_times.push_back(0.0);

  StateVector y = y0;
  double t = 0.0;
  while (!stop.max_events || traj.num_events() < *stop.max_events) {
    const Vector rates = hazard(system, y, theta);
    const double total = rates.sum();
    if (!(total > 0)) {
      traj.absorbed = true;
      break;
    }
    const double wait = -std::log1p(-uniform01(rng)) / total;
    if (stop.max_time && t + wait > *stop.max_time) break;
    t += wait;

    const double target = uniform01(rng) * total;
    Index j = 0;
    double cumulative = rates(0);
    while (cumulative <= target && j + 1 < rates.size()) cumulative += rates(++j);
    // Rounding can leave target past the last positive entry; step back to it.
    while (rates(j) <= 0 && j > 0) --j;

    y += v.col(j);
    traj.event_times.push_back(t);
    traj.reaction_indices.push_back(j);
    flat.insert(flat.end(), y.data(), y.data() + p);
  }
  traj.states = Eigen::Map<const Matrix>(flat.data(), p, static_cast<Index>(traj.event_times.size()));
  return traj;
}

ObservationSet subsample(const Trajectory& trajectory, std::size_t keep_every, std::size_t count,
                         const std::vector<std::string>& species) {
  if (keep_every == 0 || count == 0) throw ValidationError("subsample needs positive keep_every and count");
  const std::size_t required = keep_every * count;
  if (trajectory.num_events() < required) {
    throw ValidationError("trajectory has " + std::to_string(trajectory.num_events()) + " events, subsampling needs " +
                          std::to_string(required));
  }
  Replicate rep;
  rep.id = "0";
  rep.states.resize(trajectory.states.rows(), static_cast<Index>(count + 1));
  for (std::size_t i = 0; i <= count; ++i) {
    const std::size_t event = i * keep_every;
    rep.times.push_back(trajectory.event_times[event]);
    rep.states.col(static_cast<Index>(i)) = trajectory.states.col(static_cast<Index>(event));
  }
  ObservationSet out;
  out.species = species;
  out.replicates.push_back(std::move(rep));
  return out;
}

ObservationSet subsample_times(const Trajectory& trajectory, const std::vector<double>& times,
                               const std::vector<std::string>& species) {
  if (times.size() < 2) throw ValidationError("time grid needs at least 2 points");
  Replicate rep;
  rep.id = "0";
  rep.times = times;
  rep.states.resize(trajectory.states.rows(), static_cast<Index>(times.size()));
  std::size_t event = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (k > 0 && !(times[k] > times[k - 1])) throw ValidationError("time grid must be strictly increasing");
    while (event + 1 < trajectory.event_times.size() && trajectory.event_times[event + 1] <= times[k]) ++event;
    rep.states.col(static_cast<Index>(k)) = trajectory.states.col(static_cast<Index>(event));
  }
  ObservationSet out;
  out.species = species;
  out.replicates.push_back(std::move(rep));
  return out;
}

ObservationSet simulate_dataset(const ReactionSystem& system, const RateVector& theta, const StateVector& y0,
                                std::size_t n_replicates, std::size_t keep_every, std::size_t count,
                                std::uint64_t seed) {
  if (n_replicates == 0) throw ValidationError("dataset needs at least one replicate");
  ObservationSet out;
  out.species = system.species_names();
  out.replicates.resize(n_replicates);
  parallel_for(n_replicates, [&](std::size_t c) {
    StopCondition stop;
    stop.max_events = keep_every * count;
    const Trajectory traj = simulate_ssa(system, theta, y0, stop, derive_seed(seed, c));
    ObservationSet one = subsample(traj, keep_every, count, out.species);
    out.replicates[c] = std::move(one.replicates.front());
    out.replicates[c].id = std::to_string(c);
  });
  return out;
}

ObservationSet simulate_dataset_on_grid(const ReactionSystem& system, const RateVector& theta,
                                        const StateVector& y0, std::size_t n_replicates,
                                        const std::vector<double>& times, std::uint64_t seed) {
  if (n_replicates == 0) throw ValidationError("dataset needs at least one replicate");
  if (times.empty() || times.front() != 0.0) throw ValidationError("time grid must start at 0");
  ObservationSet out;
  out.species = system.species_names();
  out.replicates.resize(n_replicates);
  parallel_for(n_replicates, [&](std::size_t c) {
    StopCondition stop;
    stop.max_time = times.back();
    const Trajectory traj = simulate_ssa(system, theta, y0, stop, derive_seed(seed, c));
    ObservationSet one = subsample_times(traj, times, out.species);
    out.replicates[c] = std::move(one.replicates.front());
    out.replicates[c].id = std::to_string(c);
  });
  return out;
}

}  // namespace qrlma

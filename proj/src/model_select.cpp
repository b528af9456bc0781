#include "qrlma/model_select.hpp"

#include "qrlma/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>

namespace qrlma {

void CandidateLibrary::validate() const {
  if (full_system.num_reactions() < 1) throw ValidationError("candidate library needs at least one reaction");
  std::set<Index> seen;
  for (Index j : fixed_reactions) {
    if (j < 0 || j >= full_system.num_reactions()) {
      throw ValidationError("fixed reaction index " + std::to_string(j) + " is outside the library");
    }
    if (!seen.insert(j).second) throw ValidationError("fixed reaction index " + std::to_string(j) + " repeated");
  }
}

std::string to_string(StoppingRule rule) {
  return rule == StoppingRule::full_sweep ? "full_sweep" : "first_local_minimum";
}

StoppingRule parse_stopping_rule(const std::string& name) {
  if (name == "full_sweep") return StoppingRule::full_sweep;
  if (name == "first_local_minimum") return StoppingRule::first_local_minimum;
  throw ValidationError("unknown stopping rule '" + name + "' (expected full_sweep or first_local_minimum)");
}

double bic(const FitResult& fit, const ObservationSet& data) {
  return bic_value(fit.objective, data.num_residuals(), fit.theta_hat.size());
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// BIC, then fewer reactions, then lexicographic reaction indices.
bool better(const ModelRecord& a, const ModelRecord& b) {
  if (a.bic != b.bic) return a.bic < b.bic;
  if (a.reactions.size() != b.reactions.size()) return a.reactions.size() < b.reactions.size();
  return a.reactions < b.reactions;
}

class Search {
 public:
  Search(const ObservationSet& data, const CandidateLibrary& library, const SelectionConfig& config)
      : data_(data), library_(library), config_(config) {
    trace_.reaction_labels = library.full_system.reaction_labels();
    trace_.num_residuals = data.num_residuals();
  }

  // Fits every set not already cached; returns the model indices in input order.
  std::vector<std::size_t> evaluate(const std::vector<ReactionSet>& sets) {
    std::vector<ReactionSet> fresh;
    for (const auto& s : sets) {
      if (!index_.count(s) && std::find(fresh.begin(), fresh.end(), s) == fresh.end()) fresh.push_back(s);
    }
    std::vector<ModelRecord> fitted(fresh.size());
    const unsigned threads = config_.threads == 0 ? default_thread_count() : config_.threads;
    parallel_for(fresh.size(), [&](std::size_t k) { fitted[k] = fit(fresh[k]); }, threads);
    for (auto& rec : fitted) {
      index_[rec.reactions] = trace_.models.size();
      trace_.models.push_back(std::move(rec));
    }
    std::vector<std::size_t> out;
    for (const auto& s : sets) out.push_back(index_.at(s));
    return out;
  }

  SelectionTrace run() {
    const Index r = library_.full_system.num_reactions();
    const std::set<Index> fixed(library_.fixed_reactions.begin(), library_.fixed_reactions.end());

    std::vector<ReactionSet> starts;
    for (Index j = 0; j < r; ++j) {
      if (fixed.count(j)) continue;
      ReactionSet s(fixed.begin(), fixed.end());
      s.push_back(j);
      std::sort(s.begin(), s.end());
      starts.push_back(s);
    }
    if (starts.empty()) starts.emplace_back(fixed.begin(), fixed.end());
    std::size_t current = pick(evaluate(starts));
    trace_.path.push_back({"start", -1, current, false});
    std::set<ReactionSet> on_path{trace_.models[current].reactions};
    bool sweeping = false;

    for (;;) {
      const ReactionSet& cur = trace_.models[current].reactions;
      if (static_cast<Index>(cur.size()) == r) break;
      std::vector<ReactionSet> moves;
      std::vector<std::pair<std::string, Index>> labels;
      for (Index j = 0; j < r; ++j) {
        const bool member = std::binary_search(cur.begin(), cur.end(), j);
        if (!member) {
          ReactionSet s = cur;
          s.insert(std::upper_bound(s.begin(), s.end(), j), j);
          moves.push_back(std::move(s));
          labels.emplace_back("add", j);
        } else if (!sweeping && !fixed.count(j) && cur.size() > 1) {
          ReactionSet s = cur;
          s.erase(std::find(s.begin(), s.end(), j));
          moves.push_back(std::move(s));
          labels.emplace_back("remove", j);
        }
      }
      const std::vector<std::size_t> ids = evaluate(moves);
      const double current_bic = trace_.models[current].bic;

      std::optional<std::size_t> chosen;
      std::optional<std::size_t> best_add;
      for (std::size_t k = 0; k < ids.size(); ++k) {
        if (on_path.count(trace_.models[ids[k]].reactions)) continue;
        if (!chosen || better(trace_.models[ids[k]], trace_.models[ids[*chosen]])) chosen = k;
        if (labels[k].first == "add" && (!best_add || better(trace_.models[ids[k]], trace_.models[ids[*best_add]]))) {
          best_add = k;
        }
      }
      std::optional<std::size_t> move;
      if (!sweeping && chosen && trace_.models[ids[*chosen]].bic < current_bic) {
        move = chosen;
      } else if (config_.stopping == StoppingRule::full_sweep && best_add) {
        // Past the first local minimum the sweep only adds reactions, one per step.
        sweeping = true;
        move = best_add;
      }
      if (!move) break;
      const std::size_t next = ids[*move];
      trace_.path.push_back({labels[*move].first, labels[*move].second, next, trace_.models[next].bic < current_bic});
      on_path.insert(trace_.models[next].reactions);
      current = next;
    }

    trace_.best = 0;
    for (std::size_t i = 1; i < trace_.models.size(); ++i) {
      if (better(trace_.models[i], trace_.models[trace_.best])) trace_.best = i;
    }
    for (std::size_t i = 0; i < trace_.models.size(); ++i) {
      const auto size = static_cast<Index>(trace_.models[i].reactions.size());
      auto it = trace_.best_by_complexity.find(size);
      if (it == trace_.best_by_complexity.end() || better(trace_.models[i], trace_.models[it->second])) {
        trace_.best_by_complexity[size] = i;
      }
    }
    return std::move(trace_);
  }

 private:
  std::size_t pick(const std::vector<std::size_t>& ids) const {
    std::size_t best = ids.front();
    for (std::size_t id : ids) {
      if (better(trace_.models[id], trace_.models[best])) best = id;
    }
    return best;
  }

  ModelRecord fit(const ReactionSet& reactions) const {
    ModelRecord rec;
    rec.reactions = reactions;
    const ReactionSystem sub = library_.full_system.subsystem(reactions);
    FitConfig cfg = config_.fit;
    cfg.compute_stderr = true;
    if (cfg.initial_theta) {
      RateVector init(static_cast<Index>(reactions.size()));
      for (std::size_t k = 0; k < reactions.size(); ++k) init(static_cast<Index>(k)) = (*cfg.initial_theta)(reactions[k]);
      cfg.initial_theta = init;
    }
    try {
      const FitResult res = lma_fit(data_, sub, cfg);
      rec.theta_hat = res.theta_hat;
      rec.objective = res.objective;
      rec.converged = res.converged;
      rec.n_iterations = res.n_iterations;
      rec.bic = res.converged ? res.bic : kInf;
      rec.identifiable = res.stderr_warning.empty();
      rec.note = res.converged ? res.stderr_warning : "fit did not converge (" + to_string(res.termination) + ")";
    } catch (const Error& e) {
      rec.bic = kInf;
      rec.objective = kInf;
      rec.converged = false;
      rec.note = std::string("fit failed: ") + e.what();
    }
    return rec;
  }

  const ObservationSet& data_;
  const CandidateLibrary& library_;
  const SelectionConfig& config_;
  SelectionTrace trace_;
  std::map<ReactionSet, std::size_t> index_;
};

}  // namespace

SelectionTrace stepwise_search(const ObservationSet& data, const CandidateLibrary& library,
                               const SelectionConfig& config) {
  library.validate();
  config.fit.validate();
  data.validate();
  if (data.num_residuals() == 0) throw ValidationError("stepwise search needs at least one residual");
  return Search(data, library, config).run();
}

std::vector<double> bic_weights(const std::vector<double>& bics) {
  if (bics.empty()) throw ValidationError("bic_weights needs at least one model");
  const double min_bic = *std::min_element(bics.begin(), bics.end());
  std::vector<double> w(bics.size(), 0.0);
  if (!std::isfinite(min_bic)) {
    // No finite BIC: spread the weight over the tied models.
    std::size_t count = 0;
    for (double b : bics) count += b == min_bic;
    for (std::size_t i = 0; i < bics.size(); ++i) w[i] = bics[i] == min_bic ? 1.0 / static_cast<double>(count) : 0.0;
    return w;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < bics.size(); ++i) {
    w[i] = std::exp(-0.5 * (bics[i] - min_bic));
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

std::vector<double> bic_weights(const SelectionTrace& trace) {
  std::vector<double> bics;
  for (const auto& m : trace.models) bics.push_back(m.bic);
  return bic_weights(bics);
}

std::vector<double> reaction_relevance(const SelectionTrace& trace) {
  const std::vector<double> w = bic_weights(trace);
  std::vector<double> p(trace.reaction_labels.size(), 0.0);
  for (std::size_t i = 0; i < trace.models.size(); ++i) {
    for (Index j : trace.models[i].reactions) p[static_cast<std::size_t>(j)] += w[i];
  }
  for (double& x : p) x = std::min(1.0, x);
  return p;
}

}  // namespace qrlma

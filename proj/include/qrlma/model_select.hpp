#pragma once

// Stepwise BIC search over subsets of a candidate reaction library, BIC
// weights and per-reaction relevance.

#include "qrlma/infer.hpp"
#include "qrlma/observation_set.hpp"
#include "qrlma/reaction_system.hpp"

#include <map>
#include <string>
#include <vector>

namespace qrlma {

struct CandidateLibrary {
  ReactionSystem full_system;
  std::vector<Index> fixed_reactions;  // always part of every model

  void validate() const;
};

enum class StoppingRule {
  full_sweep,           // continue to the saturated model, report the global minimum
  first_local_minimum,  // stop once no single move lowers the BIC
};

std::string to_string(StoppingRule rule);
StoppingRule parse_stopping_rule(const std::string& name);

struct SelectionConfig {
  FitConfig fit;
  StoppingRule stopping = StoppingRule::full_sweep;
  unsigned threads = 1;  // concurrent candidate fits; 0 means default_thread_count()
};

using ReactionSet = std::vector<Index>;  // sorted library indices

struct ModelRecord {
  ReactionSet reactions;
  double bic = 0.0;
  double objective = 0.0;
  RateVector theta_hat;
  bool converged = false;
  bool identifiable = true;
  int n_iterations = 0;
  std::string note;  // fit failure or identifiability warning
};

struct SelectionStep {
  std::string move;     // "start", "add" or "remove"
  Index reaction = -1;  // library index moved, -1 for the start
  std::size_t model = 0;  // index into SelectionTrace::models
  bool improved = false;  // the move lowered the BIC
};

struct SelectionTrace {
  std::vector<std::string> reaction_labels;  // library labels
  Index num_residuals = 0;
  std::vector<ModelRecord> models;  // every fitted model, in order of first evaluation
  std::vector<SelectionStep> path;
  std::size_t best = 0;
  std::map<Index, std::size_t> best_by_complexity;  // number of reactions -> model index

  const ModelRecord& best_model() const { return models.at(best); }
};

/// N ln(RSS / N) + k ln N with N the number of scalar residuals and k the number of rates.
double bic(const FitResult& fit, const ObservationSet& data);

SelectionTrace stepwise_search(const ObservationSet& data, const CandidateLibrary& library,
                               const SelectionConfig& config = {});

/// exp(-(BIC_i - BIC_min) / 2), normalized over the fitted models of the trace.
std::vector<double> bic_weights(const SelectionTrace& trace);
std::vector<double> bic_weights(const std::vector<double>& bics);

/// p_j: summed weight of the models containing library reaction j.
std::vector<double> reaction_relevance(const SelectionTrace& trace);

}  // namespace qrlma

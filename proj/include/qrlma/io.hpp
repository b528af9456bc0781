#pragma once

// File formats: system-spec JSON, observation CSV, result JSON, run manifests.

#include "qrlma/infer.hpp"
#include "qrlma/model_select.hpp"
#include "qrlma/observation_set.hpp"
#include "qrlma/reaction_system.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qrlma {

/// {species: [...], reactions: [{label, reactants: {name: n}, products: {name: n}, rate?}]}
struct SystemSpec {
  ReactionSystem system;
  std::vector<std::optional<double>> rates;  // one per reaction

  // All rates, or nullopt when any is missing.
  std::optional<RateVector> rate_vector() const;
};

SystemSpec parse_system_spec(const std::string& text);
SystemSpec read_system_spec(const std::string& path);
std::string serialize_system_spec(const ReactionSystem& system, const std::optional<RateVector>& rates = std::nullopt);

/// CSV with header replicate_id,time,<species...>; rows of one replicate
/// are contiguous and in increasing time.
ObservationSet parse_observations(std::istream& in, const std::string& source = "<input>");
ObservationSet read_observations(const std::string& path);
void write_observations(std::ostream& os, const ObservationSet& data);

/// Free-form provenance echoed into every output.
struct RunManifest {
  std::string command;
  std::optional<std::uint64_t> seed;
  std::string preset;
  std::string spec_path;
  std::string output;
  std::map<std::string, std::string> parameters;

  std::string to_json() const;
};

std::string fit_result_to_json(const FitResult& fit, const ReactionSystem& system, const FitConfig& config,
                               const RunManifest& manifest);

std::string selection_trace_to_json(const SelectionTrace& trace, const RunManifest& manifest);

// CSV with columns complexity,best_bic,model_reactions (labels joined by ';').
void write_complexity_profile(std::ostream& os, const SelectionTrace& trace);

std::string prediction_to_json(const ReactionSystem& system, const StateVector& m, double horizon,
                               const std::string& method, const RunManifest& manifest);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// "0.2,0.1,0.2" -> vector; throws ValidationError naming `what` on bad input.
Vector parse_number_list(const std::string& text, const std::string& what);

}  // namespace qrlma

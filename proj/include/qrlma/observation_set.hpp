#pragma once

#include "qrlma/types.hpp"

#include <string>
#include <vector>

namespace qrlma {

/// One observed replicate: strictly increasing absolute times and one count
/// vector per time (column k of `states` is observed at times[k]).
struct Replicate {
  std::string id;
  std::vector<double> times;
  Matrix states;  // p x (number of time points)

  Index num_points() const noexcept { return static_cast<Index>(times.size()); }
};

/// Replicate-indexed, possibly irregularly timed count observations.
/// The first point of each replicate only conditions the next prediction.
struct ObservationSet {
  std::vector<std::string> species;
  std::vector<Replicate> replicates;

  Index num_species() const noexcept { return static_cast<Index>(species.size()); }
  // Number of (previous, next) observation pairs across replicates.
  Index num_transitions() const noexcept;
  // Scalar residual entries: transitions times species.
  Index num_residuals() const noexcept { return num_transitions() * num_species(); }

  // Throws ValidationError when an invariant is broken: >= 2 points per
  // replicate, increasing times, finite nonnegative counts, consistent species.
  void validate() const;
};

}  // namespace qrlma

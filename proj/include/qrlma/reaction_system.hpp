#pragma once

#include "qrlma/types.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qrlma {

/// A quasi-reaction network over p species and r reactions.
///
/// Column j of the reactant matrix K holds the species consumed by reaction j,
/// column j of the product matrix S the species produced. The net-effect matrix
/// V = S - K is the state change caused by one firing. A reaction whose K column
/// is all zero is a spontaneous source.
class ReactionSystem {
 public:
  ReactionSystem() = default;
  ReactionSystem(std::vector<std::string> species, IntMatrix reactants, IntMatrix products,
                 std::vector<std::string> labels = {});

  Index num_species() const noexcept { return reactants_.rows(); }
  Index num_reactions() const noexcept { return reactants_.cols(); }

  const std::vector<std::string>& species_names() const noexcept { return species_; }
  const std::vector<std::string>& reaction_labels() const noexcept { return labels_; }
  const IntMatrix& reactants() const noexcept { return reactants_; }
  const IntMatrix& products() const noexcept { return products_; }
  const IntMatrix& net_effect() const noexcept { return net_; }
  // V as doubles, cached for the linear algebra paths.
  const Matrix& net_effect_real() const noexcept { return net_real_; }

  // Every reaction consumes at most one particle in total, so the hazard is affine in y.
  bool is_unitary() const;

  // Index of a species by name; throws ValidationError when absent.
  Index species_index(const std::string& name) const;

  // Same species, only the listed reactions (in the given order).
  ReactionSystem subsystem(std::span<const Index> reactions) const;

  // Human-readable form of reaction j, e.g. "A + B -> 3C".
  std::string describe_reaction(Index j) const;

 private:
  std::vector<std::string> species_;
  std::vector<std::string> labels_;
  IntMatrix reactants_;
  IntMatrix products_;
  IntMatrix net_;
  Matrix net_real_;
};

// One reaction written by species name, e.g. {"R1", {{"A", 2}}, {{"B", 2}}}.
struct ReactionDef {
  std::string label;
  std::vector<std::pair<std::string, int>> reactants;
  std::vector<std::pair<std::string, int>> products;
};

// Builds K and S from named stoichiometries; unknown species names are an error.
ReactionSystem make_system(std::vector<std::string> species, const std::vector<ReactionDef>& reactions);

// Block-diagonal union: species and reactions of b appended after those of a.
ReactionSystem block_union(const ReactionSystem& a, const ReactionSystem& b);

}  // namespace qrlma

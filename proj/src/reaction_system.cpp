#include "qrlma/reaction_system.hpp"

#include <set>
#include <sstream>

namespace qrlma {

ReactionSystem::ReactionSystem(std::vector<std::string> species, IntMatrix reactants,
                               IntMatrix products, std::vector<std::string> labels)
    : species_(std::move(species)),
      labels_(std::move(labels)),
      reactants_(std::move(reactants)),
      products_(std::move(products)) {
  const Index p = reactants_.rows();
  const Index r = reactants_.cols();
  if (p < 1 || r < 1) throw DimensionError("reaction system needs at least one species and one reaction");
  if (products_.rows() != p || products_.cols() != r) {
    throw DimensionError("product matrix is " + std::to_string(products_.rows()) + "x" +
                         std::to_string(products_.cols()) + ", reactant matrix is " +
                         std::to_string(p) + "x" + std::to_string(r));
  }
  if (static_cast<Index>(species_.size()) != p) {
    throw DimensionError("got " + std::to_string(species_.size()) + " species names for " +
                         std::to_string(p) + " matrix rows");
  }
  if ((reactants_.array() < 0).any() || (products_.array() < 0).any()) {
    throw ValidationError("stoichiometric coefficients must be nonnegative");
  }
  std::set<std::string> seen;
  for (const auto& name : species_) {
    if (name.empty()) throw ValidationError("empty species name");
    if (!seen.insert(name).second) throw ValidationError("duplicate species name '" + name + "'");
  }
  if (labels_.empty()) {
    for (Index j = 0; j < r; ++j) labels_.push_back("R" + std::to_string(j + 1));
  } else if (static_cast<Index>(labels_.size()) != r) {
    throw DimensionError("got " + std::to_string(labels_.size()) + " reaction labels for " +
                         std::to_string(r) + " reactions");
  }
  net_ = products_ - reactants_;
  net_real_ = net_.cast<double>();
}

bool ReactionSystem::is_unitary() const {
  for (Index j = 0; j < num_reactions(); ++j) {
    if (reactants_.col(j).sum() > 1) return false;
  }
  return true;
}

Index ReactionSystem::species_index(const std::string& name) const {
  for (std::size_t i = 0; i < species_.size(); ++i) {
    if (species_[i] == name) return static_cast<Index>(i);
  }
  throw ValidationError("unknown species '" + name + "'");
}

ReactionSystem ReactionSystem::subsystem(std::span<const Index> reactions) const {
  if (reactions.empty()) throw DimensionError("subsystem needs at least one reaction");
  IntMatrix k(num_species(), static_cast<Index>(reactions.size()));
  IntMatrix s(num_species(), static_cast<Index>(reactions.size()));
  std::vector<std::string> labels;
  for (std::size_t c = 0; c < reactions.size(); ++c) {
    const Index j = reactions[c];
    if (j < 0 || j >= num_reactions()) {
      throw DimensionError("reaction index " + std::to_string(j) + " out of range");
    }
    k.col(static_cast<Index>(c)) = reactants_.col(j);
    s.col(static_cast<Index>(c)) = products_.col(j);
    labels.push_back(labels_[static_cast<std::size_t>(j)]);
  }
  return ReactionSystem(species_, std::move(k), std::move(s), std::move(labels));
}

namespace {

std::string side(const ReactionSystem& sys, const IntMatrix& m, Index j) {
  std::ostringstream os;
  bool first = true;
  for (Index l = 0; l < m.rows(); ++l) {
    if (m(l, j) == 0) continue;
    if (!first) os << " + ";
    if (m(l, j) > 1) os << m(l, j);
    os << sys.species_names()[static_cast<std::size_t>(l)];
    first = false;
  }
  return first ? std::string("0") : os.str();
}

}  // namespace

std::string ReactionSystem::describe_reaction(Index j) const {
  return side(*this, reactants_, j) + " -> " + side(*this, products_, j);
}

ReactionSystem block_union(const ReactionSystem& a, const ReactionSystem& b) {
  const Index p = a.num_species() + b.num_species();
  const Index r = a.num_reactions() + b.num_reactions();
  IntMatrix k = IntMatrix::Zero(p, r);
  IntMatrix s = IntMatrix::Zero(p, r);
  k.topLeftCorner(a.num_species(), a.num_reactions()) = a.reactants();
  s.topLeftCorner(a.num_species(), a.num_reactions()) = a.products();
  k.bottomRightCorner(b.num_species(), b.num_reactions()) = b.reactants();
  s.bottomRightCorner(b.num_species(), b.num_reactions()) = b.products();
  auto species = a.species_names();
  species.insert(species.end(), b.species_names().begin(), b.species_names().end());
  auto labels = a.reaction_labels();
  labels.insert(labels.end(), b.reaction_labels().begin(), b.reaction_labels().end());
  return ReactionSystem(std::move(species), std::move(k), std::move(s), std::move(labels));
}

ReactionSystem make_system(std::vector<std::string> species, const std::vector<ReactionDef>& reactions) {
  const auto p = static_cast<Index>(species.size());
  const auto r = static_cast<Index>(reactions.size());
  auto lookup = [&](const std::string& name, const std::string& label) {
    for (Index l = 0; l < p; ++l) {
      if (species[static_cast<std::size_t>(l)] == name) return l;
    }
    throw ValidationError("reaction '" + label + "' refers to undeclared species '" + name + "'");
  };
  IntMatrix k = IntMatrix::Zero(p, r);
  IntMatrix s = IntMatrix::Zero(p, r);
  std::vector<std::string> labels;
  for (Index j = 0; j < r; ++j) {
    const ReactionDef& def = reactions[static_cast<std::size_t>(j)];
    const std::string label = def.label.empty() ? "R" + std::to_string(j + 1) : def.label;
    for (const auto& [name, n] : def.reactants) k(lookup(name, label), j) += n;
    for (const auto& [name, n] : def.products) s(lookup(name, label), j) += n;
    labels.push_back(label);
  }
  return ReactionSystem(std::move(species), std::move(k), std::move(s), std::move(labels));
}

}  // namespace qrlma

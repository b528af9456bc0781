#include "qrlma/fixtures.hpp"

#include <functional>
#include <map>

namespace qrlma {

ReactionSystem cyclic3_system(const std::string& suffix) {
  const std::string a = "A" + suffix;
  const std::string b = "B" + suffix;
  const std::string c = "C" + suffix;
  return make_system({a, b, c}, {
                                    {"R1" + suffix, {{a, 2}}, {{b, 2}}},
                                    {"R2" + suffix, {{a, 1}, {b, 1}}, {{c, 3}}},
                                    {"R3" + suffix, {{c, 2}}, {{a, 2}}},
                                });
}

namespace {

Vector values(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Preset cyclic3() {
  Preset p;
  p.name = "cyclic3";
  p.description = "cyclic network 2A->2B, A+B->3C, 2C->2A";
  p.system = cyclic3_system();
  p.theta_true = values({0.2, 0.1, 0.2});
  p.y0 = values({100, 100, 100});
  p.n_points = 20;
  p.keep_every_grid = {100};
  p.true_reactions = {0, 1, 2};
  return p;
}

Preset cyclic3_stiff() {
  Preset p = cyclic3();
  p.name = "cyclic3-stiff";
  p.description = "cyclic network with one fast and two slow reactions";
  p.theta_true = values({2e-6, 1e-7, 2e-1});
  p.y0 = values({10, 20, 10});
  // Both explicit schemes lose stability near dt = 0.5 (Euler) and 0.73 (RK4)
  // for the fast eigenvalue; the grid divides the horizon evenly.
  p.dt_grid = {0.01, 0.02, 0.05, 0.1, 0.2, 0.4, 0.8};
  p.horizon = 8.0;
  return p;
}

Preset cyclic3_study() {
  Preset p = cyclic3();
  p.name = "cyclic3-study";
  p.description = "cyclic network, estimator comparison over observation spacing and series length";
  p.n_replicates = 1;
  p.n_points = 20;
  p.keep_every_grid = {10, 30, 50, 70, 100};
  p.n_points_grid = {20, 40, 60, 80, 100};
  p.n_seeds = 100;
  return p;
}

Preset cyclic3_library() {
  Preset p = cyclic3_study();
  p.name = "cyclic3-library";
  p.description = "cyclic network plus six decoy reactions, for model selection";
  p.system = make_system({"A", "B", "C"}, {
                                              {"R1", {{"A", 2}}, {{"B", 2}}},
                                              {"R2", {{"A", 1}, {"B", 1}}, {{"C", 3}}},
                                              {"R3", {{"C", 2}}, {{"A", 2}}},
                                              {"D1", {{"A", 1}}, {}},
                                              {"D2", {{"B", 1}}, {}},
                                              {"D3", {{"C", 1}}, {}},
                                              {"D4", {}, {{"A", 1}}},
                                              {"D5", {{"B", 1}}, {{"A", 1}}},
                                              {"D6", {{"C", 1}}, {{"B", 1}}},
                                          });
  p.theta_true = values({0.2, 0.1, 0.2, 0, 0, 0, 0, 0, 0});
  p.keep_every_grid = {100};
  p.n_seeds = 50;
  return p;
}

Preset unitary3() {
  Preset p;
  p.name = "unitary3";
  p.description = "unitary chain 0->A->B->C->0 with A decay";
  p.system = make_system({"A", "B", "C"}, {
                                              {"R1", {}, {{"A", 1}}},
                                              {"R2", {{"A", 1}}, {{"B", 1}}},
                                              {"R3", {{"B", 1}}, {{"C", 1}}},
                                              {"R4", {{"C", 1}}, {}},
                                              {"R5", {{"A", 1}}, {}},
                                          });
  p.theta_true = values({20.0, 0.5, 0.3, 0.4, 0.1});
  p.y0 = values({50, 20, 10});
  p.observation_times = {0.0, 0.5, 1.0, 2.0, 4.0, 8.0};
  p.n_replicates = 100;
  p.true_reactions = {0, 1, 2, 3, 4};
  return p;
}

Preset scaling_p(int copies) {
  Preset p = cyclic3();
  p.name = "scaling-p" + std::to_string(3 * copies);
  p.description = std::to_string(copies) + " independent copies of the cyclic network";
  p.system = cyclic3_system("1");
  for (int k = 2; k <= copies; ++k) p.system = block_union(p.system, cyclic3_system(std::to_string(k)));
  p.theta_true = Vector(3 * copies);
  p.y0 = Vector::Constant(3 * copies, 100.0);
  for (int k = 0; k < copies; ++k) p.theta_true.segment(3 * k, 3) = values({0.2, 0.1, 0.2});
  p.true_reactions.clear();
  for (Index j = 0; j < 3 * copies; ++j) p.true_reactions.push_back(j);
  return p;
}

Preset scaling_r(int reactions) {
  const std::vector<ReactionDef> all = {
      {"R1", {{"A", 2}}, {{"B", 2}}},
      {"R2", {{"A", 1}, {"B", 1}}, {{"C", 3}}},
      {"R3", {{"C", 2}}, {{"A", 2}}},
      {"R4", {{"A", 2}}, {}},
      {"R5", {{"C", 1}}, {}},
      {"R6", {{"C", 2}}, {}},
      {"R7", {{"A", 2}}, {{"B", 3}}},
      {"R8", {{"C", 1}}, {{"B", 1}}},
      {"R9", {{"C", 1}}, {{"A", 2}}},
      {"R10", {{"A", 1}}, {{"C", 1}}},
      {"R11", {{"B", 1}, {"C", 1}}, {{"A", 1}}},
      {"R12", {{"B", 1}}, {{"A", 2}, {"C", 1}}},
      {"R13", {}, {{"A", 1}}},
      {"R14", {}, {{"B", 1}}},
      {"R15", {}, {{"C", 1}}},
  };
  const std::vector<double> rates = {0.2, 0.1, 0.2, 0.01, 0.02, 0.03, 0.1, 0.06, 0.05, 0.1, 0.09, 0.08, 50, 50, 50};
  Preset p = cyclic3();
  p.name = "scaling-r" + std::to_string(reactions);
  p.description = "three species, first " + std::to_string(reactions) + " reactions of the extended library";
  p.system = make_system({"A", "B", "C"}, std::vector<ReactionDef>(all.begin(), all.begin() + reactions));
  p.theta_true = Vector(reactions);
  for (int j = 0; j < reactions; ++j) p.theta_true(j) = rates[static_cast<std::size_t>(j)];
  p.true_reactions.clear();
  for (Index j = 0; j < reactions; ++j) p.true_reactions.push_back(j);
  return p;
}

Preset hematopoiesis() {
  Preset p;
  p.name = "hematopoiesis";
  p.description = "HSC self-renewal, two progenitor types, five mature lineages";
  p.system = make_system({"HSC", "Pa", "Pb", "G", "M", "T", "B", "NK"},
                         {
                             {"lambda", {{"HSC", 1}}, {{"HSC", 2}}},
                             {"nu_a", {{"HSC", 1}}, {{"Pa", 1}}},
                             {"nu_b", {{"HSC", 1}}, {{"Pb", 1}}},
                             {"mu_a", {{"Pa", 1}}, {}},
                             {"mu_b", {{"Pb", 1}}, {}},
                             {"nu_1", {{"Pa", 1}}, {{"G", 1}}},
                             {"nu_2", {{"Pa", 1}}, {{"M", 1}}},
                             {"nu_3", {{"Pb", 1}}, {{"T", 1}}},
                             {"nu_4", {{"Pb", 1}}, {{"B", 1}}},
                             {"nu_5", {{"Pb", 1}}, {{"NK", 1}}},
                             {"mu_1", {{"G", 1}}, {}},
                             {"mu_2", {{"M", 1}}, {}},
                             {"mu_3", {{"T", 1}}, {}},
                             {"mu_4", {{"B", 1}}, {}},
                             {"mu_5", {{"NK", 1}}, {}},
                         });
  p.theta_true = values({2850, 1400, 700, 50, 40, 3600, 1800, 1000, 2000, 1200, 26, 13, 11, 16, 9});
  p.y0 = values({1, 0, 0, 0, 0, 0, 0, 0});
  p.observation_times = {0.0, 0.08, 0.11, 0.14, 0.17};
  p.n_replicates = 100;
  p.true_reactions.clear();
  for (Index j = 0; j < 15; ++j) p.true_reactions.push_back(j);
  return p;
}

const std::map<std::string, std::function<Preset()>>& registry() {
  static const std::map<std::string, std::function<Preset()>> presets = {
      {"cyclic3", cyclic3},
      {"cyclic3-stiff", cyclic3_stiff},
      {"cyclic3-study", cyclic3_study},
      {"cyclic3-library", cyclic3_library},
      {"unitary3", unitary3},
      {"scaling-p3", [] { return scaling_p(1); }},
      {"scaling-p6", [] { return scaling_p(2); }},
      {"scaling-p9", [] { return scaling_p(3); }},
      {"scaling-r3", [] { return scaling_r(3); }},
      {"scaling-r6", [] { return scaling_r(6); }},
      {"scaling-r9", [] { return scaling_r(9); }},
      {"scaling-r12", [] { return scaling_r(12); }},
      {"scaling-r15", [] { return scaling_r(15); }},
      {"hematopoiesis", hematopoiesis},
  };
  return presets;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, make] : registry()) names.push_back(name);
  return names;
}

Preset load_preset(const std::string& name) {
  const auto& presets = registry();
  const auto it = presets.find(name);
  if (it == presets.end()) {
    std::string list;
    for (const auto& n : preset_names()) list += (list.empty() ? "" : ", ") + n;
    throw ValidationError("unknown preset '" + name + "'; available: " + list);
  }
  return it->second();
}

}  // namespace qrlma

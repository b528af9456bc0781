#include "qrlma/io.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace qrlma {

using json = nlohmann::ordered_json;

namespace {

// Line and column (1-based) of a byte offset.
std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ValidationError(what + ": malformed JSON at line " + std::to_string(line) + ", column " +
                          std::to_string(col));
  }
}

int stoichiometry(const json& value, const std::string& label, const std::string& species) {
  if (!value.is_number_integer() || value.get<long long>() < 0) {
    throw ValidationError("reaction '" + label + "': stoichiometry of '" + species +
                          "' must be a nonnegative integer");
  }
  return static_cast<int>(value.get<long long>());
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json vector_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(number_or_null(v(i)));
  return out;
}

json manifest_json(const RunManifest& m) {
  json out;
  out["command"] = m.command;
  out["seed"] = m.seed ? json(*m.seed) : json(nullptr);
  if (!m.preset.empty()) out["preset"] = m.preset;
  if (!m.spec_path.empty()) out["spec"] = m.spec_path;
  if (!m.output.empty()) out["output"] = m.output;
  json params = json::object();
  for (const auto& [k, v] : m.parameters) params[k] = v;
  out["parameters"] = params;
  return out;
}

}  // namespace

std::optional<RateVector> SystemSpec::rate_vector() const {
  RateVector out(static_cast<Index>(rates.size()));
  for (std::size_t j = 0; j < rates.size(); ++j) {
    if (!rates[j]) return std::nullopt;
    out(static_cast<Index>(j)) = *rates[j];
  }
  return out;
}

SystemSpec parse_system_spec(const std::string& text) {
  const json doc = parse_json(text, "system spec");
  if (!doc.is_object()) throw ValidationError("system spec: top level must be an object");
  if (!doc.contains("species") || !doc["species"].is_array()) {
    throw ValidationError("system spec: 'species' must be an array of names");
  }
  if (!doc.contains("reactions") || !doc["reactions"].is_array()) {
    throw ValidationError("system spec: 'reactions' must be an array");
  }
  std::vector<std::string> species;
  for (const auto& s : doc["species"]) {
    if (!s.is_string()) throw ValidationError("system spec: species names must be strings");
    species.push_back(s.get<std::string>());
  }
  std::vector<ReactionDef> defs;
  SystemSpec spec;
  std::size_t index = 0;
  for (const auto& r : doc["reactions"]) {
    ++index;
    if (!r.is_object()) throw ValidationError("system spec: reaction " + std::to_string(index) + " is not an object");
    ReactionDef def;
    def.label = r.value("label", "R" + std::to_string(index));
    for (const char* side : {"reactants", "products"}) {
      if (!r.contains(side)) continue;
      if (!r[side].is_object()) {
        throw ValidationError("reaction '" + def.label + "': '" + side + "' must be an object of species: count");
      }
      auto& target = std::string(side) == "reactants" ? def.reactants : def.products;
      for (const auto& [name, n] : r[side].items()) target.emplace_back(name, stoichiometry(n, def.label, name));
    }
    if (r.contains("rate") && !r["rate"].is_null()) {
      if (!r["rate"].is_number() || !(r["rate"].get<double>() >= 0)) {
        throw ValidationError("reaction '" + def.label + "': rate must be a nonnegative number");
      }
      spec.rates.emplace_back(r["rate"].get<double>());
    } else {
      spec.rates.emplace_back(std::nullopt);
    }
    defs.push_back(std::move(def));
  }
  spec.system = make_system(std::move(species), defs);
  return spec;
}

SystemSpec read_system_spec(const std::string& path) {
  try {
    return parse_system_spec(read_text_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::string serialize_system_spec(const ReactionSystem& system, const std::optional<RateVector>& rates) {
  if (rates && rates->size() != system.num_reactions()) {
    throw DimensionError("got " + std::to_string(rates->size()) + " rates for " +
                         std::to_string(system.num_reactions()) + " reactions");
  }
  json doc;
  doc["species"] = system.species_names();
  json reactions = json::array();
  for (Index j = 0; j < system.num_reactions(); ++j) {
    json r;
    r["label"] = system.reaction_labels()[static_cast<std::size_t>(j)];
    for (const auto& [key, mat] : {std::pair<const char*, const IntMatrix*>{"reactants", &system.reactants()},
                                   std::pair<const char*, const IntMatrix*>{"products", &system.products()}}) {
      json side = json::object();
      for (Index l = 0; l < system.num_species(); ++l) {
        if ((*mat)(l, j) != 0) side[system.species_names()[static_cast<std::size_t>(l)]] = (*mat)(l, j);
      }
      r[key] = side;
    }
    if (rates) r["rate"] = (*rates)(j);
    reactions.push_back(r);
  }
  doc["reactions"] = reactions;
  return doc.dump(2) + "\n";
}

namespace {

struct Field {
  std::string text;
  std::size_t column;
};

std::vector<Field> split_csv_line(const std::string& line) {
  std::vector<Field> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    std::string cell = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    std::size_t lead = 0;
    while (lead < cell.size() && std::isspace(static_cast<unsigned char>(cell[lead]))) ++lead;
    std::size_t end = cell.size();
    while (end > lead && std::isspace(static_cast<unsigned char>(cell[end - 1]))) --end;
    out.push_back({cell.substr(lead, end - lead), start + lead + 1});
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

ObservationSet parse_observations(std::istream& in, const std::string& source) {
  auto fail = [&](std::size_t line, std::size_t column, const std::string& msg) -> ValidationError {
    return ValidationError(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + msg);
  };
  std::string line;
  std::size_t line_no = 0;
  std::vector<Field> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    header = split_csv_line(line);
    break;
  }
  if (header.empty()) throw fail(1, 1, "empty observation file");
  if (header.size() < 3 || header[0].text != "replicate_id" || header[1].text != "time") {
    throw fail(line_no, 1, "header must be replicate_id,time,<species...>");
  }
  ObservationSet data;
  for (std::size_t k = 2; k < header.size(); ++k) {
    if (header[k].text.empty()) throw fail(line_no, header[k].column, "empty species name in header");
    data.species.push_back(header[k].text);
  }
  const auto p = static_cast<Index>(data.species.size());

  std::map<std::string, std::size_t> by_id;
  std::vector<std::vector<double>> columns;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::vector<Field> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw fail(line_no, 1,
                 "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    std::vector<double> nums(fields.size() - 1);
    for (std::size_t k = 1; k < fields.size(); ++k) {
      const std::string& t = fields[k].text;
      double x = 0.0;
      const auto res = std::from_chars(t.data(), t.data() + t.size(), x);
      if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(x)) {
        throw fail(line_no, fields[k].column, "'" + t + "' is not a finite number");
      }
      if (k >= 2 && x < 0) {
        throw fail(line_no, fields[k].column, "negative count for species '" + data.species[k - 2] + "'");
      }
      nums[k - 1] = x;
    }
    const std::string& id = fields[0].text;
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      it = by_id.emplace(id, data.replicates.size()).first;
      data.replicates.push_back({id, {}, Matrix()});
      columns.emplace_back();
    }
    Replicate& rep = data.replicates[it->second];
    if (!rep.times.empty() && !(nums[0] > rep.times.back())) {
      throw fail(line_no, fields[1].column, "time must increase within replicate '" + id + "'");
    }
    rep.times.push_back(nums[0]);
    auto& col = columns[it->second];
    col.insert(col.end(), nums.begin() + 1, nums.end());
  }
  for (std::size_t c = 0; c < data.replicates.size(); ++c) {
    data.replicates[c].states =
        Eigen::Map<const Matrix>(columns[c].data(), p, static_cast<Index>(data.replicates[c].times.size()));
  }
  try {
    data.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(source + ": " + e.what());
  }
  return data;
}

ObservationSet read_observations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return parse_observations(in, path);
}

void write_observations(std::ostream& os, const ObservationSet& data) {
  os << "replicate_id,time";
  for (const auto& s : data.species) os << ',' << s;
  os << '\n' << std::setprecision(17);
  for (const auto& rep : data.replicates) {
    for (Index k = 0; k < rep.num_points(); ++k) {
      os << rep.id << ',' << rep.times[static_cast<std::size_t>(k)];
      for (Index l = 0; l < rep.states.rows(); ++l) os << ',' << rep.states(l, k);
      os << '\n';
    }
  }
}

std::string RunManifest::to_json() const { return manifest_json(*this).dump(2) + "\n"; }

std::string fit_result_to_json(const FitResult& fit, const ReactionSystem& system, const FitConfig& config,
                               const RunManifest& manifest) {
  json doc;
  doc["reactions"] = system.reaction_labels();
  doc["theta_hat"] = vector_json(fit.theta_hat);
  doc["stderr"] = fit.standard_errors ? vector_json(*fit.standard_errors) : json(nullptr);
  if (!fit.stderr_warning.empty()) doc["stderr_warning"] = fit.stderr_warning;
  doc["objective"] = number_or_null(fit.objective);
  doc["bic"] = number_or_null(fit.bic);
  doc["bic_convention"] = "N*ln(RSS/N) + k*ln(N), N = scalar residuals, k = rates";
  doc["n_iterations"] = fit.n_iterations;
  doc["converged"] = fit.converged;
  doc["termination"] = to_string(fit.termination);
  if (!fit.message.empty()) doc["message"] = fit.message;
  doc["theta_init"] = vector_json(fit.theta_init);
  doc["boundary_active"] = fit.boundary_active;
  json cfg;
  cfg["max_iterations"] = config.max_iterations;
  cfg["gradient_tolerance"] = config.gradient_tolerance;
  cfg["objective_tolerance"] = config.objective_tolerance;
  cfg["theta_lower_bound"] = config.theta_lower_bound;
  cfg["initializer"] = to_string(config.initializer);
  cfg["gradient_mode"] = to_string(config.gradient_mode);
  cfg["memory_size"] = config.memory_size;
  if (config.compute_stderr) cfg["stderr_method"] = to_string(config.stderr_method);
  doc["config_echo"] = cfg;
  doc["seed_provenance"] = manifest_json(manifest);
  return doc.dump(2) + "\n";
}

std::string selection_trace_to_json(const SelectionTrace& trace, const RunManifest& manifest) {
  auto labels_of = [&](const ReactionSet& set) {
    json out = json::array();
    for (Index j : set) out.push_back(trace.reaction_labels[static_cast<std::size_t>(j)]);
    return out;
  };
  const std::vector<double> weights = bic_weights(trace);
  const std::vector<double> relevance = reaction_relevance(trace);
  json doc;
  doc["bic_convention"] = "N*ln(RSS/N) + k*ln(N), N = scalar residuals, k = rates";
  doc["num_residuals"] = trace.num_residuals;
  doc["reactions"] = trace.reaction_labels;
  json models = json::array();
  for (std::size_t i = 0; i < trace.models.size(); ++i) {
    const ModelRecord& m = trace.models[i];
    json r;
    r["reactions"] = labels_of(m.reactions);
    r["bic"] = number_or_null(m.bic);
    r["objective"] = number_or_null(m.objective);
    r["theta_hat"] = m.theta_hat.size() ? vector_json(m.theta_hat) : json(nullptr);
    r["converged"] = m.converged;
    r["identifiable"] = m.identifiable;
    r["n_iterations"] = m.n_iterations;
    r["weight"] = weights[i];
    if (!m.note.empty()) r["note"] = m.note;
    models.push_back(r);
  }
  doc["models"] = models;
  json path = json::array();
  for (const auto& step : trace.path) {
    json s;
    s["move"] = step.move;
    s["reaction"] = step.reaction >= 0 ? json(trace.reaction_labels[static_cast<std::size_t>(step.reaction)]) : json(nullptr);
    s["model"] = step.model;
    s["bic"] = number_or_null(trace.models[step.model].bic);
    s["improved"] = step.improved;
    path.push_back(s);
  }
  doc["path"] = path;
  doc["best_model"] = labels_of(trace.best_model().reactions);
  doc["best_bic"] = number_or_null(trace.best_model().bic);
  json rel = json::object();
  for (std::size_t j = 0; j < relevance.size(); ++j) rel[trace.reaction_labels[j]] = relevance[j];
  doc["relevance"] = rel;
  doc["seed_provenance"] = manifest_json(manifest);
  return doc.dump(2) + "\n";
}

void write_complexity_profile(std::ostream& os, const SelectionTrace& trace) {
  os << "complexity,best_bic,model_reactions\n" << std::setprecision(17);
  for (const auto& [size, idx] : trace.best_by_complexity) {
    const ModelRecord& m = trace.models[idx];
    os << size << ',' << m.bic << ',';
    for (std::size_t k = 0; k < m.reactions.size(); ++k) {
      os << (k ? ";" : "") << trace.reaction_labels[static_cast<std::size_t>(m.reactions[k])];
    }
    os << '\n';
  }
}

std::string prediction_to_json(const ReactionSystem& system, const StateVector& m, double horizon,
                               const std::string& method, const RunManifest& manifest) {
  json doc;
  doc["horizon"] = horizon;
  doc["method"] = method;
  doc["species"] = system.species_names();
  doc["mean"] = vector_json(m);
  doc["seed_provenance"] = manifest_json(manifest);
  return doc.dump(2) + "\n";
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ValidationError("write to '" + path + "' failed");
}

Vector parse_number_list(const std::string& text, const std::string& what) {
  std::vector<double> xs;
  for (const Field& f : split_csv_line(text)) {
    double x = 0.0;
    const auto res = std::from_chars(f.text.data(), f.text.data() + f.text.size(), x);
    if (f.text.empty() || res.ec != std::errc() || res.ptr != f.text.data() + f.text.size() || !std::isfinite(x)) {
      throw ValidationError(what + ": '" + f.text + "' is not a finite number");
    }
    xs.push_back(x);
  }
  return Eigen::Map<const Vector>(xs.data(), static_cast<Index>(xs.size()));
}

}  // namespace qrlma

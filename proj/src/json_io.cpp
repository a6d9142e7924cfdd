#include "logichint/json_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace logichint {

namespace {

const Json& field(const Json& j, const char* key, const char* what) {
  if (!j.is_object()) throw SchemaError(std::string(what) + " must be a JSON object");
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(std::string(what) + " is missing field \"" + key + "\"");
  return *it;
}

std::string string_field(const Json& j, const char* key, const char* what) {
  const Json& v = field(j, key, what);
  if (!v.is_string()) throw SchemaError(std::string(what) + " field \"" + key + "\" must be a string");
  return v.get<std::string>();
}

void check_schema_tag(const Json& j, const char* what) {
  auto it = j.find("schema");
  if (it != j.end() && *it != kSchemaTag) {
    throw SchemaError(std::string(what) + " has unsupported schema " + it->dump());
  }
}

}  // namespace

Json problem_to_json(const Problem& problem) {
  Json premises = Json::array();
  for (const auto& p : problem.premises) premises.push_back(to_string(p));
  return Json{{"schema", kSchemaTag},
              {"id", problem.id},
              {"level", std::string(level_name(problem.level))},
              {"premises", premises},
              {"conclusion", to_string(problem.conclusion)}};
}

Problem problem_from_json(const Json& j) {
  check_schema_tag(j, "problem");
  Problem p;
  p.id = string_field(j, "id", "problem");
  auto level = level_from_name(string_field(j, "level", "problem"));
  if (!level) throw SchemaError("problem '" + p.id + "' has an unknown level");
  p.level = *level;
  const Json& premises = field(j, "premises", "problem");
  if (!premises.is_array()) throw SchemaError("problem premises must be an array");
  for (const auto& s : premises) {
    if (!s.is_string()) throw SchemaError("problem premises must be formula strings");
    p.premises.push_back(parse_formula(s.get<std::string>()));
  }
  p.conclusion = parse_formula(string_field(j, "conclusion", "problem"));
  try {
    check_problem_invariants(p);
  } catch (const std::invalid_argument& e) {
    throw SchemaError(e.what());
  }
  return p;
}

Json step_to_json(const ProofStep& step) {
  Json parents = Json::array();
  for (const auto& r : step.parents) parents.push_back(to_string(r));
  Json j{{"step", step.index},
         {"formula", to_string(step.formula)},
         {"rule", std::string(rule_name(step.rule))},
         {"parents", parents}};
  if (step.site) j["site"] = *step.site;
  if (step.direction) j["direction"] = std::string(direction_name(*step.direction));
  return j;
}

ProofStep step_from_json(const Json& j, std::size_t position) {
  ProofStep s;
  s.index = position;
  s.formula = parse_formula(string_field(j, "formula", "step"));
  std::string rule = string_field(j, "rule", "step");
  auto id = rule_from_name(rule);
  if (!id) throw SchemaError("unknown rule \"" + rule + "\"");
  s.rule = *id;
  auto it = j.find("parents");
  if (it != j.end()) {
    if (!it->is_array()) throw SchemaError("step parents must be an array");
    for (const auto& r : *it) {
      if (!r.is_string()) throw SchemaError("step parents must be strings like \"P1\" or \"S2\"");
      auto ref = parse_parent_ref(r.get<std::string>());
      if (!ref) throw SchemaError("malformed parent reference \"" + r.get<std::string>() + "\"");
      s.parents.push_back(*ref);
    }
  }
  if (auto site = j.find("site"); site != j.end() && !site->is_null()) {
    if (!site->is_array()) throw SchemaError("step site must be an array of child indices");
    SitePath path;
    for (const auto& k : *site) {
      if (!k.is_number_unsigned()) throw SchemaError("site entries must be non-negative integers");
      path.push_back(k.get<std::size_t>());
    }
    s.site = std::move(path);
  }
  if (auto dir = j.find("direction"); dir != j.end() && !dir->is_null()) {
    auto d = dir->is_string() ? direction_from_name(dir->get<std::string>()) : std::nullopt;
    if (!d) throw SchemaError("step direction must be \"forward\" or \"backward\"");
    s.direction = *d;
  }
  return s;
}

namespace {

Json steps_to_json(const std::vector<ProofStep>& steps) {
  Json out = Json::array();
  for (const auto& s : steps) out.push_back(step_to_json(s));
  return out;
}

std::vector<ProofStep> steps_from_json(const Json& arr, const char* what) {
  if (!arr.is_array()) throw SchemaError(std::string(what) + " must be an array of steps");
  std::vector<ProofStep> out;
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(step_from_json(arr[i], i + 1));
  return out;
}

}  // namespace

Json proof_to_json(const Proof& proof) {
  return Json{{"schema", kSchemaTag},
              {"problem", problem_to_json(proof.problem)},
              {"mode", proof.mode == ProofMode::Direct ? "direct" : "indirect"},
              {"steps", steps_to_json(proof.steps)}};
}

Proof proof_from_json(const Json& j) {
  check_schema_tag(j, "proof");
  Proof p;
  p.problem = problem_from_json(field(j, "problem", "proof"));
  if (auto it = j.find("mode"); it != j.end()) {
    if (*it == "indirect") {
      p.mode = ProofMode::Indirect;
    } else if (*it != "direct") {
      throw SchemaError("proof mode must be \"direct\" or \"indirect\"");
    }
  }
  p.steps = steps_from_json(field(j, "steps", "proof"), "proof steps");
  return p;
}

Json pss_to_json(const Pss& state) {
  Json j{{"schema", kSchemaTag},
         {"problem", problem_to_json(state.problem)},
         {"order", state.order},
         {"derived", steps_to_json(state.derived)}};
  if (state.timestamp) j["timestamp"] = *state.timestamp;
  return j;
}

Pss pss_from_json(const Json& j) {
  check_schema_tag(j, "state");
  Pss s;
  s.problem = problem_from_json(field(j, "problem", "state"));
  if (auto it = j.find("derived"); it != j.end()) s.derived = steps_from_json(*it, "state derived steps");
  if (auto it = j.find("order"); it != j.end() && it->is_number_unsigned()) s.order = it->get<std::size_t>();
  if (auto it = j.find("timestamp"); it != j.end() && it->is_number()) s.timestamp = it->get<double>();
  return s;
}

Json hint_to_json(const Hint& hint) {
  Json j = step_to_json(hint.step);
  j.erase("step");
  j["explanation"] = hint.explanation;
  return j;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<Problem> load_problem_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::vector<Problem> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    try {
      out.push_back(problem_from_json(read_json_file(entry.path())));
    } catch (const std::exception& e) {
      throw SchemaError(entry.path().filename().string() + ": " + e.what());
    }
  }
  std::sort(out.begin(), out.end(), [](const Problem& a, const Problem& b) { return a.id < b.id; });
  return out;
}

const Problem* find_problem(const std::vector<Problem>& problems, std::string_view id) {
  for (const auto& p : problems) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

}  // namespace logichint

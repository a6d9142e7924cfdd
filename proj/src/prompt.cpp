#include "logichint/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace logichint {

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TemplateError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim_block(std::string_view s) {
  std::size_t b = 0;
  while (b < s.size() && (s[b] == '\n' || s[b] == '\r' || s[b] == ' ' || s[b] == '\t')) ++b;
  std::size_t e = s.size();
  while (e > b && (s[e - 1] == '\n' || s[e - 1] == '\r' || s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::ZS: return "ZS";
    case Strategy::FS_CoT: return "FS_CoT";
    case Strategy::FS_PlanAndSolve: return "FS_PlanAndSolve";
    case Strategy::FS_L_DCoT: return "FS_L_DCoT";
    case Strategy::FS_BL_DCoT: return "FS_BL_DCoT";
    case Strategy::FS_ToT_CoT: return "FS_ToT_CoT";
  }
  return "?";
}

std::optional<Strategy> strategy_from_name(std::string_view name) {
  for (Strategy s : kAllStrategies) {
    if (strategy_name(s) == name) return s;
  }
  return std::nullopt;
}

bool is_few_shot(Strategy s) { return s != Strategy::ZS; }

std::string_view task_name(Task t) {
  switch (t) {
    case Task::Prove: return "prove";
    case Task::Hint: return "hint";
    case Task::Grade: return "grade";
  }
  return "?";
}

std::optional<Task> task_from_name(std::string_view name) {
  for (Task t : {Task::Prove, Task::Hint, Task::Grade}) {
    if (task_name(t) == name) return t;
  }
  return std::nullopt;
}

std::array<std::pair<const char*, const std::string*>, 5> PromptBundle::sections() const {
  return {{{kSectionNames[0], &context},
           {kSectionNames[1], &instructions},
           {kSectionNames[2], &output_expectations},
           {kSectionNames[3], &examples},
           {kSectionNames[4], &user_prompt}}};
}

std::string PromptBundle::text() const {
  std::string out;
  for (const auto& [name, body] : sections()) {
    if (body->empty()) continue;
    if (!out.empty()) out += "\n\n";
    out += *body;
  }
  out += '\n';
  return out;
}

Json PromptBundle::to_json() const {
  Json sec = Json::object();
  for (const auto& [name, body] : sections()) sec[name] = *body;
  Json j{{"task", std::string(task_name(task))}, {"strategy", std::string(strategy_name(strategy))}, {"sections", sec}};
  if (degenerate) j["degenerate"] = true;
  return j;
}

PromptTemplate parse_template(std::string_view text, const std::string& origin) {
  PromptTemplate t;
  std::size_t expected = 0;
  std::optional<std::size_t> current;
  std::string body;
  auto flush = [&] {
    if (current) t.sections[*current] = body;
    body.clear();
  };
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.size() > 4 && line.substr(0, 2) == "[[" && line.substr(line.size() - 2) == "]]") {
      std::string_view name = line.substr(2, line.size() - 4);
      if (expected >= kSectionNames.size() || name != kSectionNames[expected]) {
        throw TemplateError(origin + ":" + std::to_string(line_no) + ": expected section [[" +
                            (expected < kSectionNames.size() ? kSectionNames[expected] : "<end>") + "]], found [[" +
                            std::string(name) + "]]");
      }
      flush();
      current = expected++;
      continue;
    }
    if (!current) {
      if (!line.empty() && line[0] != '#') {
        throw TemplateError(origin + ":" + std::to_string(line_no) + ": text before the first section");
      }
      continue;
    }
    body.append(line);
    body.push_back('\n');
  }
  flush();
  if (expected != kSectionNames.size()) {
    throw TemplateError(origin + ": missing section [[" + std::string(kSectionNames[expected]) + "]]");
  }
  return t;
}

std::string substitute(std::string_view text, const std::map<std::string, std::string>& vars) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    auto open = text.find("{{", pos);
    if (open == std::string_view::npos) break;
    auto close = text.find("}}", open + 2);
    if (close == std::string_view::npos) throw TemplateError("unterminated placeholder");
    std::string name(text.substr(open + 2, close - open - 2));
    auto it = vars.find(name);
    if (it == vars.end()) throw TemplateError("unknown placeholder {{" + name + "}}");
    out.append(text.substr(pos, open - pos));
    out += it->second;
    pos = close + 2;
  }
  out.append(text.substr(pos));
  return out;
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
  TemplateSet set;
  for (Task task : {Task::Prove, Task::Hint}) {
    for (Strategy s : kAllStrategies) {
      auto path = dir / task_name(task) / (std::string(strategy_name(s)) + ".tmpl");
      set.templates_[{task, s}] = parse_template(read_text(path), path.string());
    }
  }
  auto grade = dir / "grade" / "rubric.tmpl";
  set.templates_[{Task::Grade, Strategy::ZS}] = parse_template(read_text(grade), grade.string());

  auto rubric_path = dir / "grade" / "rubric.json";
  Json rubric;
  try {
    rubric = Json::parse(read_text(rubric_path));
  } catch (const Json::exception& e) {
    throw TemplateError(rubric_path.string() + ": " + e.what());
  }
  if (!rubric.contains("criteria") || !rubric["criteria"].is_array()) {
    throw TemplateError(rubric_path.string() + ": \"criteria\" array required");
  }
  for (const auto& c : rubric["criteria"]) {
    set.criteria_.push_back({c.value("name", ""), c.value("definition", "")});
  }
  if (set.criteria_.size() != kRubricDimensions.size()) {
    throw TemplateError(rubric_path.string() + ": expected four criteria");
  }
  for (std::size_t i = 0; i < set.criteria_.size(); ++i) {
    std::string lower;
    for (char ch : set.criteria_[i].name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    if (lower != kRubricDimensions[i]) {
      throw TemplateError(rubric_path.string() + ": criterion " + std::to_string(i + 1) + " must be " +
                          kRubricDimensions[i]);
    }
  }
  if (rubric.contains("scale")) {
    set.scale_min_ = rubric["scale"].at(0).get<int>();
    set.scale_max_ = rubric["scale"].at(1).get<int>();
  }

  auto common = dir / "common";
  if (std::filesystem::is_directory(common)) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(common)) {
      if (e.path().extension() == ".txt") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) set.fragments_[f.stem().string()] = trim_block(read_text(f));
  }
  return set;
}

const PromptTemplate& TemplateSet::get(Task task, Strategy strategy) const {
  if (task == Task::Grade) strategy = Strategy::ZS;
  auto it = templates_.find({task, strategy});
  if (it == templates_.end()) {
    throw TemplateError("no template for " + std::string(task_name(task)) + "/" + std::string(strategy_name(strategy)));
  }
  return it->second;
}

SplitConfig SplitConfig::from_json(const Json& j) {
  SplitConfig s;
  auto read = [&](const char* key, std::set<std::string>& into) {
    if (!j.contains(key)) return;
    for (const auto& id : j.at(key)) into.insert(id.get<std::string>());
  };
  read("training", s.training);
  read("validation", s.validation);
  read("test", s.test);
  for (const auto& id : s.training) {
    if (s.validation.count(id) || s.test.count(id)) throw SchemaError("split: " + id + " is in more than one split");
  }
  for (const auto& id : s.validation) {
    if (s.test.count(id)) throw SchemaError("split: " + id + " is in more than one split");
  }
  return s;
}

SplitConfig SplitConfig::load(const std::filesystem::path& path) { return from_json(read_json_file(path)); }

std::string_view SplitConfig::split_of(std::string_view problem_id) const {
  std::string id(problem_id);
  if (training.count(id)) return "training";
  if (validation.count(id)) return "validation";
  if (test.count(id)) return "test";
  return "";
}

ExampleBank ExampleBank::from_json(const Json& j) {
  ExampleBank bank;
  if (!j.contains("examples") || !j["examples"].is_array()) throw SchemaError("example bank needs an \"examples\" array");
  for (const auto& e : j["examples"]) {
    WorkedExample ex;
    ex.id = e.at("id").get<std::string>();
    ex.problem_id = e.at("problem_id").get<std::string>();
    auto task = task_from_name(e.at("task").get<std::string>());
    auto strategy = strategy_from_name(e.at("strategy").get<std::string>());
    if (!task || !strategy) throw SchemaError("example " + ex.id + ": unknown task or strategy");
    ex.task = *task;
    ex.strategy = *strategy;
    const Json& text = e.at("text");
    if (text.is_array()) {
      for (const auto& line : text) ex.text += line.get<std::string>() + "\n";
    } else {
      ex.text = text.get<std::string>();
    }
    ex.text = trim_block(ex.text);
    bank.examples_.push_back(std::move(ex));
  }
  return bank;
}

ExampleBank ExampleBank::load(const std::filesystem::path& path) { return from_json(read_json_file(path)); }

std::vector<const WorkedExample*> ExampleBank::select(Task task, Strategy strategy) const {
  std::vector<const WorkedExample*> out;
  for (const auto& e : examples_) {
    if (e.task == task && e.strategy == strategy) out.push_back(&e);
  }
  return out;
}

void ExampleBank::check_split(const SplitConfig& split) const {
  for (const auto& e : examples_) {
    if (split.split_of(e.problem_id) != "training") {
      throw std::invalid_argument("example " + e.id + " uses " + e.problem_id + ", which is not in the training split");
    }
  }
}

std::size_t PromptOptions::examples_for(Strategy s) const {
  if (!is_few_shot(s)) return 0;
  auto it = examples_per_strategy.find(s);
  return it == examples_per_strategy.end() ? default_examples : it->second;
}

std::string render_problem(const Problem& problem) {
  std::string out = "Premises:\n";
  for (std::size_t i = 0; i < problem.premises.size(); ++i) {
    out += "P" + std::to_string(i + 1) + ": " + to_string(problem.premises[i]) + "\n";
  }
  out += "Conclusion: " + to_string(problem.conclusion);
  return out;
}

PromptForge::PromptForge(TemplateSet templates, ExampleBank bank, PromptOptions options)
    : templates_(std::move(templates)), bank_(std::move(bank)), options_(std::move(options)) {}

PromptBundle PromptForge::build(Task task, Strategy strategy, std::map<std::string, std::string> vars) const {
  for (const auto& [k, v] : templates_.fragments()) vars.emplace(k, v);
  std::string examples;
  if (task != Task::Grade) {
    std::size_t need = options_.examples_for(strategy);
    auto pool = bank_.select(task, strategy);
    if (pool.size() < need) {
      throw InsufficientExamples(std::string(strategy_name(strategy)) + " " + std::string(task_name(task)) +
                                 " prompts need " + std::to_string(need) + " examples, the bank has " +
                                 std::to_string(pool.size()));
    }
    for (std::size_t i = 0; i < need; ++i) {
      if (i) examples += "\n\n";
      examples += "Example " + std::to_string(i + 1) + "\n" + pool[i]->text;
    }
  }
  vars["examples"] = examples;

  const PromptTemplate& t = templates_.get(task, strategy);
  PromptBundle b;
  b.task = task;
  b.strategy = task == Task::Grade ? Strategy::ZS : strategy;
  std::array<std::string*, 5> out{&b.context, &b.instructions, &b.output_expectations, &b.examples, &b.user_prompt};
  for (std::size_t i = 0; i < out.size(); ++i) *out[i] = trim_block(substitute(t.sections[i], vars));

  if (task != Task::Grade) {
    if (!is_few_shot(strategy) && !b.examples.empty()) {
      throw TemplateError("zero-shot template for " + std::string(task_name(task)) + " renders examples");
    }
    if (is_few_shot(strategy) && b.examples.empty()) {
      throw TemplateError(std::string(strategy_name(strategy)) + " template for " + std::string(task_name(task)) +
                          " renders no examples");
    }
  }
  return b;
}

PromptBundle PromptForge::build_prove_prompt(const Problem& problem, Strategy strategy) const {
  std::string premises;
  for (std::size_t i = 0; i < problem.premises.size(); ++i) {
    premises += "P" + std::to_string(i + 1) + ": " + to_string(problem.premises[i]) + "\n";
  }
  return build(Task::Prove, strategy,
               {{"problem", render_problem(problem)},
                {"premises", trim_block(premises)},
                {"conclusion", to_string(problem.conclusion)}});
}

PromptBundle PromptForge::build_hint_prompt(const PssText& state, Strategy strategy) const {
  return build(Task::Hint, strategy,
               {{"state", trim_block(state.rendered)}, {"goal", to_string(state.state.problem.conclusion)}});
}

PromptBundle PromptForge::build_grader_prompt(std::string_view explanation, const PssText& state) const {
  std::string criteria;
  for (const auto& c : templates_.criteria()) criteria += "- " + c.name + ": " + c.definition + "\n";
  std::string text = trim_block(explanation);
  PromptBundle b = build(Task::Grade, Strategy::ZS,
                         {{"criteria", trim_block(criteria)},
                          {"scale_min", std::to_string(templates_.scale_min())},
                          {"scale_max", std::to_string(templates_.scale_max())},
                          {"state", trim_block(state.rendered)},
                          {"explanation", text.empty() ? "(no explanation given)" : text}});
  b.degenerate = text.empty();
  return b;
}

namespace {

std::optional<std::size_t> balanced_end(std::string_view s, std::size_t start) {
  std::vector<char> stack;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = start; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    switch (c) {
      case '"': in_string = true; break;
      case '{': stack.push_back('}'); break;
      case '[': stack.push_back(']'); break;
      case '}':
      case ']':
        if (stack.empty() || stack.back() != c) return std::nullopt;
        stack.pop_back();
        if (stack.empty()) return i + 1;
        break;
      default: break;
    }
  }
  return std::nullopt;
}

std::optional<Json> try_parse(std::string_view s) {
  try {
    return Json::parse(s.begin(), s.end());
  } catch (const Json::parse_error&) {
    return std::nullopt;
  }
}

std::optional<Json> scan_balanced(std::string_view s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '{' && s[i] != '[') continue;
    auto end = balanced_end(s, i);
    if (!end) continue;
    if (auto j = try_parse(s.substr(i, *end - i))) return j;
  }
  return std::nullopt;
}

std::string lower(std::string_view s) {
  std::string out;
  for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

}  // namespace

std::optional<Json> extract_json(std::string_view raw) {
  std::size_t pos = 0;
  while (true) {
    auto open = raw.find("```", pos);
    if (open == std::string_view::npos) break;
    auto body = raw.find('\n', open);
    if (body == std::string_view::npos) break;
    auto close = raw.find("```", body);
    if (close == std::string_view::npos) break;
    std::string_view block = raw.substr(body + 1, close - body - 1);
    if (auto j = try_parse(block)) return j;
    if (auto j = scan_balanced(block)) return j;
    pos = close + 3;
  }
  return scan_balanced(raw);
}

namespace {

std::vector<ProofStep> steps_from(const Json& arr) {
  if (!arr.is_array()) throw SchemaError("\"steps\" must be an array");
  std::vector<ProofStep> out;
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(step_from_json(arr[i], i + 1));
  return out;
}

}  // namespace

ProofResponse parse_proof_response(std::string_view raw) {
  ProofResponse r;
  r.raw = std::string(raw);
  auto j = extract_json(raw);
  if (!j) {
    r.error = "no JSON found in response";
    return r;
  }
  try {
    if (j->is_array()) {
      r.steps = steps_from(*j);
    } else if (j->is_object() && j->contains("steps")) {
      r.steps = steps_from((*j)["steps"]);
      if (j->value("mode", "direct") == "indirect") r.mode = ProofMode::Indirect;
    } else if (j->is_object() && j->contains("proof")) {
      r.steps = steps_from((*j)["proof"]);
    } else {
      r.error = "JSON has no \"steps\" array";
      return r;
    }
  } catch (const std::exception& e) {
    r.steps.clear();
    r.error = e.what();
    return r;
  }
  if (r.steps.empty()) {
    r.error = "proof has no steps";
    return r;
  }
  r.parse_ok = true;
  return r;
}

HintResponse parse_hint_response(std::string_view raw) {
  HintResponse r;
  r.raw = std::string(raw);
  auto j = extract_json(raw);
  if (!j) {
    r.error = "no JSON found in response";
    return r;
  }
  const Json* node = &*j;
  if (node->is_object() && node->contains("hint") && (*node)["hint"].is_object()) node = &(*node)["hint"];
  if (node->is_array() && node->size() == 1) node = &(*node)[0];
  if (!node->is_object()) {
    r.error = "hint must be a JSON object";
    return r;
  }
  try {
    Hint h;
    h.step = step_from_json(*node, 0);
    if (auto e = node->find("explanation"); e != node->end()) {
      if (!e->is_string()) throw SchemaError("\"explanation\" must be a string");
      h.explanation = e->get<std::string>();
    } else if (j->is_object() && j->contains("explanation") && (*j)["explanation"].is_string()) {
      h.explanation = (*j)["explanation"].get<std::string>();
    }
    r.hint = std::move(h);
  } catch (const std::exception& e) {
    r.error = e.what();
    return r;
  }
  r.parse_ok = true;
  return r;
}

RubricScores parse_rubric_response(std::string_view raw) {
  RubricScores r;
  r.raw = std::string(raw);
  auto j = extract_json(raw);
  if (!j || !j->is_object()) {
    r.error = "no JSON object found in response";
    return r;
  }
  const Json* node = &*j;
  if (node->contains("scores") && (*node)["scores"].is_object()) node = &(*node)["scores"];
  std::map<std::string, const Json*> by_name;
  for (auto it = node->begin(); it != node->end(); ++it) by_name[lower(it.key())] = &it.value();
  for (std::size_t i = 0; i < kRubricDimensions.size(); ++i) {
    auto it = by_name.find(kRubricDimensions[i]);
    if (it == by_name.end()) {
      r.error = std::string("missing score for ") + kRubricDimensions[i];
      return r;
    }
    const Json& v = *it->second;
    if (!v.is_number_integer() || v.get<int>() < 1 || v.get<int>() > 4) {
      r.error = std::string(kRubricDimensions[i]) + " must be an integer from 1 to 4";
      return r;
    }
    r.scores[i] = v.get<int>();
  }
  r.parse_ok = true;
  return r;
}

ParsedResponse parse_response(std::string_view raw, Task task) {
  switch (task) {
    case Task::Prove: return parse_proof_response(raw);
    case Task::Hint: return parse_hint_response(raw);
    case Task::Grade: return parse_rubric_response(raw);
  }
  return parse_proof_response(raw);
}

Json proof_response_json(const std::vector<ProofStep>& steps, ProofMode mode) {
  Json arr = Json::array();
  for (const auto& s : steps) {
    Json j = step_to_json(s);
    j.erase("step");
    arr.push_back(std::move(j));
  }
  Json out{{"steps", arr}};
  if (mode == ProofMode::Indirect) out["mode"] = "indirect";
  return out;
}

Json hint_response_json(const Hint& hint) { return hint_to_json(hint); }

Json rubric_response_json(const std::array<int, 4>& scores) {
  Json j = Json::object();
  for (std::size_t i = 0; i < scores.size(); ++i) j[kRubricDimensions[i]] = scores[i];
  return j;
}

}  // namespace logichint

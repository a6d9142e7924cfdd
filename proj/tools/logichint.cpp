#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "logichint/eval.hpp"
#include "logichint/gateway.hpp"
#include "logichint/prompt.hpp"
#include "logichint/pss.hpp"
#include "logichint/search.hpp"
#include "logichint/service.hpp"

using namespace logichint;
namespace fs = std::filesystem;

namespace {

enum Exit : int { kOk = 0, kParse = 2, kVerify = 3, kBackend = 4, kIo = 5 };

struct CliError : std::runtime_error {
  CliError(int code, const std::string& what) : std::runtime_error(what), code(code) {}
  int code;
};

struct Globals {
  std::string data_dir;
  std::string config;
  std::string backend = "fixture";
  std::string cassette;
  std::uint64_t seed = 20240;
  bool json = false;

  fs::path root() const {
    if (!data_dir.empty()) return data_dir;
    if (const char* env = std::getenv("LOGICHINT_DATA_DIR"); env && *env) return env;
    return LOGICHINT_DEFAULT_DATA_DIR;
  }
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError(kIo, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json load_json(const fs::path& path) {
  std::string text = slurp(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw CliError(kParse, path.string() + ": " + e.what());
  }
}

std::vector<Problem> problems(const Globals& g) { return load_problem_dir(g.root() / "data/problems"); }

/// A problem file path or the id of a bundled problem.
Problem resolve_problem(const Globals& g, const std::string& arg) {
  if (fs::exists(arg)) return problem_from_json(load_json(arg));
  auto all = problems(g);
  if (const Problem* p = find_problem(all, arg)) return *p;
  throw CliError(kIo, "no problem file or bundled problem named \"" + arg + "\"");
}

/// A single state, or entry `index` of a pss.json array.
Pss load_state(const fs::path& path, std::size_t index = 0) {
  Json j = load_json(path);
  if (j.is_array()) {
    if (index >= j.size()) {
      throw CliError(kParse, path.string() + ": no state at index " + std::to_string(index) + " (" +
                                 std::to_string(j.size()) + " states)");
    }
    j = j[index];
  }
  return pss_from_json(j);
}

PromptForge make_forge(const Globals& g) {
  return PromptForge(TemplateSet::load(g.root() / "templates"), ExampleBank::load(g.root() / "data/examples/bank.json"));
}

/// Backends from --config (a JSON object with "backends") plus a replay
/// backend for --cassette under the --backend id.
std::unique_ptr<Gateway> make_gateway(const Globals& g) {
  auto gw = std::make_unique<Gateway>();
  if (!g.config.empty()) {
    Json j = load_json(g.config);
    auto base = fs::path(g.config).parent_path();
    if (!j.is_object() || !j.contains("backends") || !j["backends"].is_array()) {
      throw CliError(kParse, g.config + ": expected {\"backends\": [...]}");
    }
    for (const auto& b : j["backends"]) {
      auto cfg = BackendConfig::from_json(b);
      if (!cfg.cassette.empty() && fs::path(cfg.cassette).is_relative()) cfg.cassette = (base / cfg.cassette).string();
      if (!g.cassette.empty() && cfg.id == g.backend) continue;
      gw->add(make_backend(cfg));
    }
  }
  if (!g.cassette.empty()) {
    BackendConfig cfg;
    cfg.id = g.backend;
    cfg.cassette = g.cassette;
    if (!fs::exists(cfg.cassette)) throw CliError(kIo, "cannot open " + cfg.cassette);
    gw->add(make_backend(cfg));
  }
  if (!gw->has(g.backend)) {
    throw CliError(kBackend, "backend \"" + g.backend + "\" is not configured (use --cassette or --config)");
  }
  return gw;
}

void emit(const Globals& g, const Json& j, const std::string& text) {
  if (g.json) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << text;
  }
}

std::string step_line(const ProofStep& s) {
  std::string out = "S" + std::to_string(s.index) + ": " + to_string(s.formula) + " [" + std::string(rule_name(s.rule));
  for (std::size_t i = 0; i < s.parents.size(); ++i) out += (i ? ", " : " from ") + to_string(s.parents[i]);
  return out + "]";
}

// parse ---------------------------------------------------------------------

int cmd_parse(const Globals& g, const std::vector<std::string>& inputs) {
  Json arr = Json::array();
  std::string text;
  int code = kOk;
  for (const auto& in : inputs) {
    try {
      Formula f = parse_formula(in);
      std::set<std::string> atoms;
      collect_atoms(f, atoms);
      arr.push_back(Json{{"input", in}, {"formula", to_string(f)}, {"length", f.length()}, {"atoms", atoms}});
      text += to_string(f) + "\n";
    } catch (const ParseError& e) {
      arr.push_back(Json{{"input", in}, {"error", e.what()}, {"offset", e.offset()}});
      text += "error: " + std::string(e.what()) + "\n";
      code = kParse;
    }
  }
  emit(g, arr, text);
  return code;
}

// check-proof ---------------------------------------------------------------

int cmd_check_proof(const Globals& g, const std::string& path) {
  Proof proof = proof_from_json(load_json(path));
  auto report = check_proof(proof);
  Json steps = Json::array();
  std::string text;
  for (std::size_t i = 0; i < proof.steps.size(); ++i) {
    const auto& v = report.verdicts[i];
    Json s{{"step", i + 1}, {"verdict", std::string(step_verdict_name(v.code))}};
    if (!v.valid()) s["reason"] = v.reason;
    steps.push_back(s);
    text += step_line(proof.steps[i]) + "  " + std::string(step_verdict_name(v.code)) +
            (v.valid() ? "" : " (" + v.reason + ")") + "\n";
  }
  double acc = report.stepwise_accuracy.value_or(0.0);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", acc);
  text += "valid " + std::to_string(report.valid_steps) + "/" + std::to_string(proof.steps.size()) + ", accuracy " +
          buf + ", " + (report.complete ? "complete" : "incomplete") + "\n";
  emit(g, Json{{"problem_id", proof.problem.id}, {"steps", steps}, {"valid", report.valid_steps},
               {"accuracy", report.stepwise_accuracy ? Json(acc) : Json(nullptr)}, {"complete", report.complete}},
       text);
  bool all_valid = report.valid_steps == proof.steps.size();
  return all_valid && report.complete ? kOk : kVerify;
}

// solve ---------------------------------------------------------------------

Formula random_formula(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, 5), atom(0, 2);
  if (depth <= 0 || pick(rng) < 2) return Formula::atom(std::string(1, static_cast<char>('A' + atom(rng))));
  switch (pick(rng) % 4) {
    case 0: return Formula::negation(random_formula(rng, depth - 1));
    case 1: return Formula::conjunction(random_formula(rng, depth - 1), random_formula(rng, depth - 1));
    case 2: return Formula::disjunction(random_formula(rng, depth - 1), random_formula(rng, depth - 1));
    default: return Formula::implication(random_formula(rng, depth - 1), random_formula(rng, depth - 1));
  }
}

/// Premises plus a conclusion reached by a short random chain of inference
/// steps, so every generated problem is solvable.
std::optional<Problem> random_problem(std::mt19937_64& rng, std::size_t index) {
  Problem p;
  p.id = "fuzz-" + std::to_string(index);
  std::uniform_int_distribution<int> count(2, 3), chain(1, 3);
  int n = count(rng);
  for (int i = 0; i < n; ++i) p.premises.push_back(random_formula(rng, 2));
  std::vector<Formula> known = p.premises;
  std::optional<Formula> last;
  int steps = chain(rng);
  for (int k = 0; k < steps; ++k) {
    AdditionPool pool;
    for (const auto& f : known) collect_atoms(f, pool.signature);
    auto apps = enumerate_applications(known, pool, EnumLimits{12, 5000}).applications;
    std::vector<Formula> fresh;
    for (const auto& a : apps) {
      if (rule_kind(a.app.rule) != RuleKind::Inference || a.app.rule == RuleId::Add) continue;
      if (std::find(known.begin(), known.end(), a.app.result) == known.end()) fresh.push_back(a.app.result);
    }
    if (fresh.empty()) break;
    last = fresh[std::uniform_int_distribution<std::size_t>(0, fresh.size() - 1)(rng)];
    known.push_back(*last);
  }
  if (!last || last->is_false()) return std::nullopt;
  p.conclusion = *last;
  return p;
}

int cmd_solve(const Globals& g, const std::string& target, std::size_t fuzz, const SearchConfig& cfg) {
  if (fuzz > 0) {
    std::mt19937_64 rng(g.seed);
    std::size_t generated = 0, found = 0, verified = 0, exhausted = 0, truncated = 0;
    Json failures = Json::array();
    for (std::size_t i = 0; generated < fuzz && i < fuzz * 20; ++i) {
      auto p = random_problem(rng, i);
      if (!p) continue;
      ++generated;
      auto r = solve(*p, cfg);
      if (r.status == SearchStatus::Found) {
        ++found;
        if (check_proof(*r.proof).complete) {
          ++verified;
        } else {
          failures.push_back(p->id);
        }
      } else if (r.status == SearchStatus::Exhausted) {
        ++exhausted;
        failures.push_back(p->id);
      } else {
        ++truncated;
      }
    }
    Json j{{"seed", g.seed}, {"problems", generated}, {"found", found}, {"verified", verified},
           {"exhausted", exhausted}, {"truncated", truncated}, {"failures", failures}};
    std::ostringstream text;
    text << "seed " << g.seed << ": " << generated << " problems, " << found << " solved, " << verified
         << " verified, " << exhausted << " exhausted, " << truncated << " truncated\n";
    emit(g, j, text.str());
    return failures.empty() ? kOk : kVerify;
  }
  if (target.empty()) throw CliError(kParse, "solve needs a problem file or id (or --fuzz N)");
  Problem p = resolve_problem(g, target);
  auto r = solve(p, cfg);
  Json j{{"problem_id", p.id}, {"status", std::string(search_status_name(r.status))}, {"explored", r.explored},
         {"depth", r.depth_reached}};
  std::string text = p.id + ": " + std::string(search_status_name(r.status));
  if (r.proof) {
    Json steps = Json::array();
    for (const auto& s : r.proof->steps) steps.push_back(step_to_json(s));
    j["steps"] = steps;
    j["mode"] = r.proof->mode == ProofMode::Indirect ? "indirect" : "direct";
    text += " in " + std::to_string(r.proof->steps.size()) + " steps\n";
    for (const auto& s : r.proof->steps) text += step_line(s) + "\n";
  } else {
    text += "\n";
  }
  emit(g, j, text);
  return r.proof ? kOk : kVerify;
}

// hint ----------------------------------------------------------------------

Json verdict_json(const HintVerdict& v) {
  Json j{{"correct", v.correct()}};
  if (!v.correct()) {
    j["reason"] = std::string(hint_reason_name(v.reason));
    j["detail"] = v.detail;
  }
  return j;
}

int cmd_hint(const Globals& g, const std::string& path, std::size_t index, const std::string& source,
             const std::string& strategy) {
  Pss state = load_state(path, index);
  std::optional<Hint> hint;
  if (source == "search") {
    hint = next_step_hint(state);
  } else {
    auto s = strategy_from_name(strategy);
    if (!s) throw CliError(kParse, "unknown strategy \"" + strategy + "\"");
    auto forge = make_forge(g);
    auto gw = make_gateway(g);
    auto c = gw->complete(forge.build_hint_prompt(render_text(state), *s), g.backend);
    if (!c.ok()) throw CliError(kBackend, std::string(completion_error_name(c.error->kind)) + ": " + c.error->message);
    auto parsed = parse_hint_response(*c.text);
    if (!parsed.parse_ok) throw CliError(kBackend, "unparseable hint response: " + parsed.error);
    hint = parsed.hint;
  }
  if (!hint) {
    emit(g, Json{{"source", source}, {"hint", nullptr}, {"status", "no hint available"}}, "no hint available\n");
    return kOk;
  }
  hint->step.index = state.derived.size() + 1;
  auto v = validate_hint(state, *hint);
  std::string text = step_line(hint->step) + "\n" + hint->explanation + "\nverdict: " +
                     (v.correct() ? std::string("correct") : "incorrect (" + std::string(hint_reason_name(v.reason)) + ")") +
                     "\n";
  emit(g, Json{{"source", source}, {"hint", hint_to_json(*hint)}, {"verdict", verdict_json(v)}}, text);
  return kOk;
}

// extract-pss ---------------------------------------------------------------

int cmd_extract(const Globals& g, const std::string& path, const std::string& out) {
  std::ifstream in(path);
  if (!in) throw CliError(kIo, "cannot open " + path);
  auto log = parse_event_log(in);
  std::vector<Pss> states;
  if (log.problem) {
    states = extract_states(log);
  } else {
    auto all = problems(g);
    const Problem* p = find_problem(all, log.problem_id);
    if (!p) throw CliError(kIo, "log refers to unknown problem \"" + log.problem_id + "\"");
    states = extract_states(log, *p);
  }
  Json arr = Json::array();
  std::string text;
  for (const auto& s : states) {
    arr.push_back(pss_record_json(s));
    text += "# state " + std::to_string(s.order) + "\n" + render(s) + "\n";
  }
  if (!out.empty()) {
    try {
      write_json_file(out, arr);
    } catch (const std::exception& e) {
      throw CliError(kIo, e.what());
    }
  }
  emit(g, arr, std::to_string(states.size()) + " states\n" + text);
  return kOk;
}

// prompt --------------------------------------------------------------------

int cmd_prompt(const Globals& g, const std::string& task, const std::string& strategy, const std::string& problem,
               const std::string& state, std::size_t index, const std::string& explanation) {
  auto t = task_from_name(task);
  if (!t) throw CliError(kParse, "unknown task \"" + task + "\"");
  auto s = strategy_from_name(strategy);
  if (!s) throw CliError(kParse, "unknown strategy \"" + strategy + "\"");
  auto forge = make_forge(g);
  PromptBundle b;
  if (*t == Task::Prove) {
    if (problem.empty()) throw CliError(kParse, "prove prompts need --problem");
    b = forge.build_prove_prompt(resolve_problem(g, problem), *s);
  } else {
    if (state.empty()) throw CliError(kParse, "hint and grade prompts need --state");
    auto text = render_text(load_state(state, index));
    b = *t == Task::Hint ? forge.build_hint_prompt(text, *s) : forge.build_grader_prompt(explanation, text);
  }
  emit(g, b.to_json(), b.text());
  return kOk;
}

// eval ----------------------------------------------------------------------

int cmd_eval(const Globals& g, const std::vector<std::string>& strategies, const std::string& pss,
             const std::string& split, bool grade, bool no_prove, const std::string& human, const std::string& out,
             std::size_t threads, double fraction) {
  auto forge = make_forge(g);
  auto gw = make_gateway(g);
  PipelineConfig cfg;
  cfg.problems = problems(g);
  cfg.split = SplitConfig::load(split.empty() ? g.root() / "data/splits.json" : fs::path(split));
  cfg.strategies.clear();
  for (const auto& name : strategies) {
    auto s = strategy_from_name(name);
    if (!s) throw CliError(kParse, "unknown strategy \"" + name + "\"");
    cfg.strategies.push_back(*s);
  }
  if (!pss.empty()) cfg.states = read_pss_file(pss);
  if (!human.empty()) cfg.human_ratings = read_ratings_csv(human);
  cfg.backends = {g.backend};
  cfg.prove = !no_prove;
  cfg.grade = grade;
  cfg.seed = g.seed;
  cfg.threads = threads;
  cfg.human_fraction = fraction;
  auto report = run_pipeline(cfg, forge, *gw);
  try {
    write_report(report, out);
  } catch (const std::exception& e) {
    throw CliError(kIo, e.what());
  }
  const Json& s = report.summary;
  std::ostringstream text;
  text << "records " << s["records"].get<std::size_t>() << ", failures " << report.failures.size() << "\n";
  if (s["proofs"]["steps"].get<std::size_t>() > 0) {
    text << "proof steps " << s["proofs"]["steps"] << ", valid " << s["proofs"]["valid"] << ", accuracy "
         << format_percent(s["proofs"]["accuracy"].get<double>()) << "%\n";
    for (const auto& row : s["proofs"]["by_rule"]) {
      text << "  " << row["rule"].get<std::string>() << " " << row["correct"] << "/" << row["n"] << " "
           << format_percent(row["accuracy"].get<double>()) << "%\n";
    }
  }
  if (s["hints"]["n"].get<std::size_t>() > 0) {
    const Json& h = s["hints"];
    text << "hints " << h["n"] << ", correct " << h["correct"] << ", accuracy "
         << format_percent(h["accuracy"].get<double>()) << "%, duplicate " << h["incorrect_reasons"]["duplicate"]
         << ", missing_parents " << h["incorrect_reasons"]["missing_parents"] << ", illogical "
         << h["incorrect_reasons"]["illogical"] << ", unique per problem " << h["unique_mean"] << "\n";
  }
  if (report.records.empty() && report.failures.empty()) text << "empty report (0 rows)\n";
  emit(g, s, text.str());
  return report.records.empty() && !report.failures.empty() ? kBackend : kOk;
}

// grade ---------------------------------------------------------------------

int cmd_grade(const Globals& g, const std::string& state, std::size_t index, std::string explanation, const std::string& explanation_file) {
  if (!explanation_file.empty()) explanation = slurp(explanation_file);
  auto forge = make_forge(g);
  auto bundle = forge.build_grader_prompt(explanation, render_text(load_state(state, index)));
  if (bundle.degenerate) {
    emit(g, Json{{"degenerate", true}, {"scores", nullptr}}, "empty explanation: nothing to grade\n");
    return kOk;
  }
  auto gw = make_gateway(g);
  auto c = gw->complete(bundle, g.backend);
  if (!c.ok()) throw CliError(kBackend, std::string(completion_error_name(c.error->kind)) + ": " + c.error->message);
  auto scores = parse_rubric_response(*c.text);
  if (!scores.parse_ok) throw CliError(kBackend, "unparseable grading response: " + scores.error);
  Json j = rubric_response_json(scores.scores);
  std::string text;
  for (std::size_t d = 0; d < 4; ++d) text += std::string(kRubricDimensions[d]) + " " + std::to_string(scores.scores[d]) + "\n";
  emit(g, Json{{"scores", j}}, text);
  return kOk;
}

// stats ---------------------------------------------------------------------

std::string num(const std::optional<double>& v) {
  if (!v) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

int cmd_stats(const Globals& g, const std::vector<std::string>& files, bool exact) {
  if (files.size() != 2) throw CliError(kParse, "stats --ratings needs exactly two CSV files");
  std::vector<RubricScore> a, b;
  try {
    a = read_ratings_csv(files[0]);
    b = read_ratings_csv(files[1]);
  } catch (const RatingsError& e) {
    throw CliError(kParse, e.what());
  } catch (const std::runtime_error& e) {
    throw CliError(kIo, e.what());
  }
  auto stats = agreement(a, b, SpearmanOptions{exact});
  std::ostringstream text;
  text << "dimension      n  rho      p        qwk\n";
  for (const auto& s : stats) {
    char line[160];
    std::snprintf(line, sizeof line, "%-13s %2zu  %-7s  %-7s  %s%s\n", s.dimension.c_str(), s.n,
                  num(s.spearman.rho).c_str(), num(s.spearman.p_value).c_str(), num(s.qwk).c_str(),
                  s.significant ? "  *" : "");
    text << line;
  }
  text << "* p < " << kBonferroniThreshold << " (Bonferroni over 4 dimensions)\n";
  emit(g, agreement_json(stats), text.str());
  return kOk;
}

// serve ---------------------------------------------------------------------

int cmd_serve(const Globals& g, const std::string& config, int port, const std::string& host) {
  ServiceConfig cfg = config.empty() ? ServiceConfig::defaults(g.root()) : ServiceConfig::load(config, g.root());
  if (port >= 0) cfg.port = port;
  if (!host.empty()) cfg.host = host;
  TutorServer server(cfg);
  if (cfg.port == 0) {
    int bound = server.bind_any();
    if (bound < 0) throw CliError(kIo, "cannot bind " + cfg.host);
    std::cout << "listening on " << cfg.host << ":" << bound << std::endl;
    if (!server.listen_after_bind()) throw CliError(kIo, "server stopped unexpectedly");
    return kOk;
  }
  std::cout << "listening on " << cfg.host << ":" << cfg.port << std::endl;
  if (!server.listen()) throw CliError(kIo, "cannot listen on " + cfg.host + ":" + std::to_string(cfg.port));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Propositional logic proof checking, search, hints and LLM evaluation"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--data-dir", g.data_dir, "Root holding data/, templates/ (default: $LOGICHINT_DATA_DIR or the source tree)");
  app.add_option("--config", g.config, "JSON file with {\"backends\": [...]}");
  app.add_option("--backend", g.backend, "Backend id")->capture_default_str();
  app.add_option("--cassette", g.cassette, "Replay cassette (NDJSON) served as --backend");
  app.add_option("--seed", g.seed, "Seed for every randomised step")->capture_default_str();
  app.add_flag("--json", g.json, "Machine-readable JSON on stdout");

  std::vector<std::string> formulas;
  auto* parse = app.add_subcommand("parse", "Parse formulas and print their canonical form");
  parse->add_option("formula", formulas, "Formula text")->required();

  std::string proof_path;
  auto* check = app.add_subcommand("check-proof", "Check every step of a proof file");
  check->add_option("proof", proof_path, "Proof JSON")->required()->check(CLI::ExistingFile);

  std::string target;
  std::size_t fuzz = 0;
  SearchConfig search;
  auto* solve_cmd = app.add_subcommand("solve", "Find a proof by breadth-first search");
  solve_cmd->add_option("problem", target, "Problem JSON or bundled problem id");
  solve_cmd->add_option("--fuzz", fuzz, "Solve N random generated problems instead");
  solve_cmd->add_option("--max-depth", search.max_depth)->capture_default_str();
  solve_cmd->add_option("--max-frontier", search.max_frontier)->capture_default_str();
  solve_cmd->add_flag("--indirect", search.indirect, "Allow indirect proof");

  std::string state_path, source = "search", strategy = "FS_CoT";
  std::size_t state_index = 0;
  auto* hint = app.add_subcommand("hint", "Next-step hint for a state");
  hint->add_option("state", state_path, "State JSON (pss record)")->required()->check(CLI::ExistingFile);
  hint->add_option("--index", state_index, "Entry to use when the file holds several states");
  hint->add_option("--source", source)->check(CLI::IsMember({"search", "llm"}))->capture_default_str();
  hint->add_option("--strategy", strategy)->capture_default_str();

  std::string log_path, out_path;
  auto* extract = app.add_subcommand("extract-pss", "Problem-solving states from an interaction log");
  extract->add_option("log", log_path, "NDJSON event log")->required()->check(CLI::ExistingFile);
  extract->add_option("-o,--out", out_path, "Write pss.json here");

  std::string task = "prove", problem, explanation, explanation_file;
  auto* prompt = app.add_subcommand("prompt", "Build a prompt bundle");
  prompt->add_option("--task", task)->check(CLI::IsMember({"prove", "hint", "grade"}))->capture_default_str();
  prompt->add_option("--strategy", strategy)->capture_default_str();
  prompt->add_option("--problem", problem, "Problem JSON or id (prove)");
  prompt->add_option("--state", state_path, "State JSON (hint, grade)");
  prompt->add_option("--index", state_index, "Entry to use when the file holds several states");
  prompt->add_option("--explanation", explanation, "Explanation to grade");

  std::vector<std::string> strategies;
  std::string pss, split, human, eval_out = "eval-out";
  bool grade_flag = false, no_prove = false;
  std::size_t threads = 4;
  double fraction = 0.2;
  auto* eval = app.add_subcommand("eval", "Run the evaluation pipeline");
  eval->add_option("--strategy", strategies, "Strategies (repeatable)")->default_val(std::vector<std::string>{"FS_CoT"});
  eval->add_option("--pss", pss, "States for hint evaluation");
  eval->add_option("--split", split, "Split config (default data/splits.json)");
  eval->add_flag("--grade", grade_flag, "Grade hint explanations");
  eval->add_flag("--no-prove", no_prove, "Skip the proof task");
  eval->add_option("--human", human, "Human ratings CSV for agreement");
  eval->add_option("--human-fraction", fraction)->capture_default_str();
  eval->add_option("--threads", threads)->capture_default_str();
  eval->add_option("--out", eval_out, "Report directory")->capture_default_str();

  auto* grade = app.add_subcommand("grade", "Score an explanation on the rubric");
  grade->add_option("--state", state_path, "State JSON")->required()->check(CLI::ExistingFile);
  grade->add_option("--index", state_index, "Entry to use when the file holds several states");
  grade->add_option("--explanation", explanation);
  grade->add_option("--explanation-file", explanation_file)->check(CLI::ExistingFile);

  std::vector<std::string> ratings;
  bool exact = false;
  auto* stats = app.add_subcommand("stats", "Agreement between two ratings files");
  stats->add_option("--ratings", ratings, "Two CSV files")->required()->expected(2);
  stats->add_flag("--exact", exact, "Permutation p-values for n <= 10");

  std::string serve_config, host;
  int port = -1;
  auto* serve = app.add_subcommand("serve", "Run the tutor HTTP service");
  serve->add_option("--service-config", serve_config, "Service config JSON");
  serve->add_option("--port", port);
  serve->add_option("--host", host);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kParse;
  }

  try {
    if (*parse) return cmd_parse(g, formulas);
    if (*check) return cmd_check_proof(g, proof_path);
    if (*solve_cmd) return cmd_solve(g, target, fuzz, search);
    if (*hint) return cmd_hint(g, state_path, state_index, source, strategy);
    if (*extract) return cmd_extract(g, log_path, out_path);
    if (*prompt) return cmd_prompt(g, task, strategy, problem, state_path, state_index, explanation);
    if (*eval) return cmd_eval(g, strategies, pss, split, grade_flag, no_prove, human, eval_out, threads, fraction);
    if (*grade) return cmd_grade(g, state_path, state_index, explanation, explanation_file);
    if (*stats) return cmd_stats(g, ratings, exact);
    if (*serve) return cmd_serve(g, serve_config, port, host);
  } catch (const CliError& e) {
    return (g.json ? std::cout << Json{{"error", e.what()}, {"exit_code", e.code}}.dump() << '\n'
                   : std::cerr << "error: " << e.what() << '\n'),
           e.code;
  } catch (const ParseError& e) {
    if (g.json) std::cout << Json{{"error", e.what()}, {"exit_code", kParse}}.dump() << '\n';
    else std::cerr << "error: " << e.what() << '\n';
    return kParse;
  } catch (const SchemaError& e) {
    if (g.json) std::cout << Json{{"error", e.what()}, {"exit_code", kParse}}.dump() << '\n';
    else std::cerr << "error: " << e.what() << '\n';
    return kParse;
  } catch (const LogError& e) {
    if (g.json) std::cout << Json{{"error", e.what()}, {"exit_code", kParse}}.dump() << '\n';
    else std::cerr << "error: " << e.what() << '\n';
    return kParse;
  } catch (const std::exception& e) {
    if (g.json) std::cout << Json{{"error", e.what()}, {"exit_code", kIo}}.dump() << '\n';
    else std::cerr << "error: " << e.what() << '\n';
    return kIo;
  }
  return kOk;
}

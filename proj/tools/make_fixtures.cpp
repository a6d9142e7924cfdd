// Regenerates the replay fixtures under fixtures/:
//   run1.ndjson         cassette with FS_CoT proof, hint and grading responses
//   hint_states.json    states the hint responses answer
//   crafted_hints.json  30 incorrect hints with their expected reasons
//   human_ratings.csv   ratings for the pipeline's human sample
//   run1.manifest.json  which problem or state each cassette entry answers
// Usage: logichint-make-fixtures [root]

#include <fstream>
#include <iostream>

#include "logichint/eval.hpp"
#include "logichint/gateway.hpp"
#include "logichint/prompt.hpp"
#include "logichint/pss.hpp"
#include "logichint/search.hpp"

using namespace logichint;

namespace {

const Strategy kStrategy = Strategy::FS_CoT;

std::vector<ProofStep> strip(std::vector<ProofStep> steps) {
  for (auto& s : steps) {
    s.site.reset();
    s.direction.reset();
  }
  return steps;
}

std::vector<ProofStep> solution(const Problem& p) {
  auto r = solve(p);
  if (!r.proof) throw std::runtime_error("no proof for " + p.id);
  return strip(r.proof->steps);
}

ParentRef step_ref(std::size_t k) {
  ParentRef r;
  r.kind = ParentRef::Kind::Step;
  r.index = k;
  return r;
}

class Recorder {
public:
  explicit Recorder(BackendConfig cfg) : cfg_(std::move(cfg)) {}
  void add(const PromptBundle& bundle, const std::string& text, Json about) {
    std::string prompt = bundle.text();
    about["hash"] = request_hash(cfg_.model, cfg_.temperature, prompt);
    about["task"] = task_name(bundle.task);
    manifest_.push_back(std::move(about));
    cassette_.insert({request_hash(cfg_.model, cfg_.temperature, prompt), cfg_.id, cfg_.model, cfg_.temperature,
                      sha256_hex(prompt), prompt.size(), text});
  }
  Cassette& cassette() { return cassette_; }
  const Json& manifest() const { return manifest_; }

private:
  BackendConfig cfg_;
  Cassette cassette_;
  Json manifest_ = Json::array();
};

std::string fenced(const std::string& preface, const Json& j) {
  return preface + "\n\n```json\n" + j.dump(2) + "\n```\n";
}

std::array<int, 4> grader_scores(std::size_t i, bool correct) {
  return {correct ? 4 - static_cast<int>(i % 3 == 0) : 2, 3 + static_cast<int>(i % 2),
          correct ? 3 + static_cast<int>(i % 4 == 1) : 1 + static_cast<int>(i % 2), 1 + static_cast<int>(i % 4)};
}

}  // namespace

int main(int argc, char** argv) {
  std::filesystem::path root = argc > 1 ? argv[1] : LOGICHINT_DEFAULT_DATA_DIR;
  auto out_dir = root / "fixtures";
  std::filesystem::create_directories(out_dir);

  auto problems = load_problem_dir(root / "data/problems");
  auto split = SplitConfig::load(root / "data/splits.json");
  PromptForge forge(TemplateSet::load(root / "templates"), ExampleBank::load(root / "data/examples/bank.json"));
  BackendConfig cfg;
  Recorder rec(cfg);

  // Proofs for the test split, three planted invalid final steps.
  std::size_t total_steps = 0;
  for (const auto& id : split.test) {
    const Problem& p = *find_problem(problems, id);
    auto steps = solution(p);
    total_steps += steps.size();
    if (id == "train1-04") steps[1].rule = RuleId::MT;
    if (id == "train2-04") steps[2].parents = {step_ref(1), step_ref(4)};
    if (id == "train3-03") steps[3].formula = parse_formula("~A");
    std::string preface = "Working forward from the premises, each step applies one rule to statements already "
                          "available until the conclusion " + to_string(p.conclusion) + " is reached.";
    rec.add(forge.build_prove_prompt(p, kStrategy), fenced(preface, proof_response_json(steps)),
            Json{{"problem_id", id}});
  }

  // Hint states: every non-final prefix of the solutions below.
  std::vector<Pss> states;
  for (const char* id : {"train1-03", "train1-04", "train2-02", "train2-03", "train3-01", "train3-02", "train4-01"}) {
    const Problem& p = *find_problem(problems, id);
    auto steps = solution(p);
    for (std::size_t k = 0; k < steps.size(); ++k) {
      Pss s{p, {}, k + 1, {}};
      s.derived.assign(steps.begin(), steps.begin() + static_cast<long>(k));
      states.push_back(std::move(s));
    }
  }
  write_pss_file(out_dir / "hint_states.json", states);

  std::size_t planted[3] = {0, 0, 0};
  for (std::size_t i = 0; i < states.size(); ++i) {
    const Pss& s = states[i];
    auto good = next_step_hint(s);
    if (!good) throw std::runtime_error("no hint for state " + std::to_string(i));
    Hint h = *good;
    h.step.site.reset();
    h.step.direction.reset();
    h.explanation = explain_step(s, good->step);
    if (i % 6 == 2 && !s.derived.empty()) {
      h.step = s.derived.back();
      h.explanation = "Derive " + to_string(h.step.formula) + " next.";
      ++planted[0];
    } else if (i % 6 == 4) {
      h.step.parents.back() = step_ref(s.derived.size() + 1);
      ++planted[1];
    } else if (i % 9 == 7) {
      h.step.formula = Formula::negation(s.problem.conclusion);
      h.explanation = "This follows directly from the premises.";
      ++planted[2];
    }
    auto text = render_text(s);
    rec.add(forge.build_hint_prompt(text, kStrategy), fenced("Next step:", hint_response_json(h)),
            Json{{"state", i}});
    bool correct = validate_hint(s, h).correct();
    auto grade = forge.build_grader_prompt(h.explanation, text);
    rec.add(grade, fenced("Scores:", rubric_response_json(grader_scores(i, correct))),
            Json{{"state", i}});
  }
  rec.cassette().save(out_dir / "run1.ndjson");
  write_json_file(out_dir / "run1.manifest.json", rec.manifest());

  // Crafted incorrect hints, ten per reason.
  Json crafted = Json::array();
  std::size_t made[3] = {0, 0, 0};
  for (std::size_t i = 0; i < states.size() && (made[0] < 10 || made[1] < 10 || made[2] < 10); ++i) {
    const Pss& s = states[i];
    auto good = *next_step_hint(s);
    good.step.site.reset();
    good.step.direction.reset();
    auto push = [&](const Hint& h, const char* reason) {
      crafted.push_back(Json{{"id", "c" + std::to_string(crafted.size() + 1)},
                             {"state", pss_to_json(s)},
                             {"hint", hint_to_json(h)},
                             {"expected", reason}});
    };
    if (made[0] < 10 && !s.derived.empty()) {
      Hint h{s.derived[made[0] % s.derived.size()], "Repeat an earlier step."};
      push(h, "duplicate");
      ++made[0];
    }
    if (made[1] < 10) {
      Hint h = good;
      if (made[1] % 2 == 0) {
        h.step.parents.front() = step_ref(s.derived.size() + 1 + made[1]);
      } else {
        ParentRef r;
        r.index = s.problem.premises.size() + 1;
        h.step.parents.back() = r;
      }
      h.explanation = "Use the next line.";
      push(h, "missing_parents");
      ++made[1];
    }
    if (made[2] < 10) {
      Hint h = good;
      switch (made[2] % 3) {
        case 0: h.step.formula = Formula::negation(s.problem.conclusion); break;
        case 1: h.step.formula = Formula::negation(good.step.formula); break;
        default: h.step.formula = Formula::conjunction(good.step.formula, Formula::atom("Z")); break;
      }
      h.explanation = "It follows.";
      push(h, "illogical");
      ++made[2];
    }
  }
  write_json_file(out_dir / "crafted_hints.json", crafted);

  // Human ratings for the pipeline's 20% sample, perturbed from the grader's scores.
  BackendConfig replay = cfg;
  replay.cassette = (out_dir / "run1.ndjson").string();
  Gateway gw;
  gw.add(make_backend(replay));
  PipelineConfig pc;
  pc.problems = problems;
  pc.split = split;
  pc.states = states;
  pc.backends = {cfg.id};
  pc.grade = true;
  auto report = run_pipeline(pc, forge, gw);
  std::vector<RubricScore> human;
  for (const auto& r : report.records) {
    if (std::find(report.human_sample.begin(), report.human_sample.end(), r.record_id) == report.human_sample.end()) {
      continue;
    }
    auto scores = *r.llm_scores;
    std::size_t k = human.size();
    if (k % 3 == 1) scores[1] = std::max(1, scores[1] - 1);
    if (k % 4 == 2) scores[3] = std::min(4, scores[3] + 1);
    human.push_back({r.record_id, "human1", scores});
  }
  std::ofstream csv(out_dir / "human_ratings.csv");
  write_ratings_csv(csv, human);

  std::cout << "proof steps " << total_steps << ", hint states " << states.size() << ", planted duplicate "
            << planted[0] << " missing " << planted[1] << " illogical " << planted[2] << ", crafted "
            << crafted.size() << ", cassette " << rec.cassette().size() << ", human sample " << human.size()
            << std::endl;
  return 0;
}

#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "logichint/eval.hpp"
#include "logichint/pss.hpp"
#include "stats_oracle.hpp"

using namespace logichint;
using logichint::testing::oracle_qwk;
using logichint::testing::oracle_spearman;

namespace {

const std::filesystem::path kRoot = LOGICHINT_DEFAULT_DATA_DIR;

EvalRecord rec(RuleId rule, bool correct, const std::string& backend = "b") {
  EvalRecord r;
  r.task = "step";
  r.rule = rule;
  r.correct = correct;
  r.backend = backend;
  return r;
}

struct Fixture {
  std::vector<Problem> problems = load_problem_dir(kRoot / "data/problems");
  SplitConfig split = SplitConfig::load(kRoot / "data/splits.json");
  PromptForge forge{TemplateSet::load(kRoot / "templates"), ExampleBank::load(kRoot / "data/examples/bank.json")};

  PipelineConfig config() const {
    PipelineConfig c;
    c.problems = problems;
    c.split = split;
    c.states = read_pss_file(kRoot / "fixtures/hint_states.json");
    c.backends = {"fixture"};
    c.grade = true;
    c.human_ratings = read_ratings_csv(kRoot / "fixtures/human_ratings.csv");
    return c;
  }

  std::unique_ptr<Gateway> gateway() const {
    BackendConfig b;
    b.cassette = (kRoot / "fixtures/run1.ndjson").string();
    auto g = std::make_unique<Gateway>();
    g->add(make_backend(b));
    return g;
  }
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("accuracy_by") {
  std::vector<EvalRecord> r{rec(RuleId::MP, true), rec(RuleId::MP, true), rec(RuleId::MP, true),
                            rec(RuleId::MP, false), rec(RuleId::DS, true, "a")};
  auto rows = accuracy_by(r, GroupKey::Rule);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].key == "MP");
  CHECK(rows[0].n == 4);
  CHECK(rows[0].accuracy == 75.0);
  CHECK(format_percent(rows[0].accuracy) == "75.00");
  CHECK(rows[1].key == "DS");
  CHECK(rows[1].accuracy == 100.0);
  auto by_backend = accuracy_by(r, GroupKey::Backend);
  CHECK(by_backend[0].key == "a");
  std::size_t sum = 0;
  for (const auto& row : by_backend) sum += row.n;
  CHECK(sum == r.size());
  r.push_back(EvalRecord{});
  r.back().rule.reset();
  CHECK(accuracy_by(r, GroupKey::Rule).back().key == "unknown");
  CHECK_THROWS_AS(accuracy_by({}, GroupKey::Rule), std::invalid_argument);
  CHECK(percent(2, 3) == 66.67);
  CHECK(format_percent(percent(37, 40)) == "92.50");
}

TEST_CASE("unique hints per problem") {
  auto hint = [](const char* f) {
    EvalRecord r;
    r.task = "hint";
    r.problem_id = "p";
    ProofStep s;
    s.formula = parse_formula(f);
    s.parents = {ParentRef::premise(1), ParentRef::premise(2)};
    r.payload = s;
    return r;
  };
  auto u = unique_hints_per_problem({hint("X"), hint("X"), hint("Y")});
  REQUIRE(u.per_problem.size() == 1);
  CHECK(u.per_problem[0].second == 2);
  CHECK(u.mean == 2.0);
  auto none = unique_hints_per_problem({});
  CHECK(none.per_problem.empty());
  CHECK(none.mean == 0.0);
}

TEST_CASE("spearman") {
  std::vector<double> a{1, 2, 3, 4, 5};
  std::vector<double> rev{5, 4, 3, 2, 1};
  CHECK(*spearman(a, a).rho == 1.0);
  CHECK(*spearman(a, rev).rho == -1.0);
  // scipy.stats.spearmanr([1,2,2,4],[2,1,3,4])
  auto c = spearman({1, 2, 2, 4}, {2, 1, 3, 4});
  CHECK(*c.rho == doctest::Approx(0.632455532033676).epsilon(1e-12));
  CHECK(*c.p_value == doctest::Approx(0.367544467966324).epsilon(1e-9));
  CHECK(c.approximate);
  CHECK_FALSE(spearman({3, 3, 3}, {1, 2, 3}).rho.has_value());
  CHECK_THROWS_AS(spearman({1}, {1}), std::invalid_argument);
  CHECK_THROWS_AS(spearman({1, 2}, {1, 2, 3}), std::invalid_argument);
  auto exact = spearman({1, 2, 3, 4}, {1, 2, 3, 4}, {true});
  CHECK(exact.exact);
  CHECK(*exact.p_value == doctest::Approx(2.0 / 24.0));
  CHECK(average_ranks({10, 20, 20, 5}) == std::vector<double>{2, 3.5, 3.5, 1});
}

TEST_CASE("qwk") {
  CHECK(*qwk({1, 2, 3, 4}, {1, 2, 3, 4}) == 1.0);
  CHECK(*qwk({1, 1, 2, 2}, {2, 2, 1, 1}) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK_FALSE(qwk({3, 3, 3}, {3, 3, 3}).has_value());
  CHECK_THROWS_AS(qwk({0, 1}, {1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(qwk({1, 5}, {1, 1}), std::invalid_argument);
}

TEST_CASE("statistics match definitional oracles on 1000 random pairs") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> len(2, 50), cat(1, 4);
  std::size_t compared_rho = 0, compared_k = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    int n = len(rng);
    std::vector<int> xi(n), yi(n);
    for (int i = 0; i < n; ++i) {
      xi[i] = cat(rng);
      yi[i] = trial % 5 == 0 ? xi[i] : cat(rng);
    }
    std::vector<double> x(xi.begin(), xi.end()), y(yi.begin(), yi.end());
    auto c = spearman(x, y);
    if (c.rho) {
      CHECK(std::fabs(*c.rho - oracle_spearman(x, y)) < 1e-9);
      ++compared_rho;
    }
    auto k = qwk(xi, yi);
    if (k) {
      CHECK(std::fabs(*k - oracle_qwk(xi, yi)) < 1e-9);
      CHECK(*k <= 1.0 + 1e-12);
      if (xi == yi) CHECK(*k == doctest::Approx(1.0).epsilon(1e-12));
      ++compared_k;
    }
  }
  CHECK(compared_rho > 900);
  CHECK(compared_k > 900);
}

TEST_CASE("welch t") {
  auto same = welch_t({1, 2, 3}, {1, 2, 3});
  CHECK(*same.t == 0.0);
  // scipy.stats.ttest_ind([1,2,3],[11,12,13], equal_var=False)
  auto shift = welch_t({1, 2, 3}, {11, 12, 13});
  CHECK(*shift.t == doctest::Approx(-12.24744871391589).epsilon(1e-12));
  CHECK(*shift.df == doctest::Approx(4.0));
  CHECK(*shift.p_value == doctest::Approx(0.00025521674944192687).epsilon(1e-9));
  CHECK_THROWS_AS(welch_t({1}, {1, 2}), std::invalid_argument);
  CHECK_FALSE(welch_t({2, 2}, {3, 3}).t.has_value());
  std::vector<double> a{7, 9, 6, 8}, b{4, 5, 3, 5, 6};
  auto base = welch_t(a, b);
  for (auto& v : a) v *= 3.5;
  for (auto& v : b) v *= 3.5;
  CHECK((*welch_t(a, b).t > 0) == (*base.t > 0));
}

TEST_CASE("ratings csv") {
  std::istringstream ok("item_id,rater,consistency,clarity,justification,subgoaling\nr1,h,1,2,3,4\n");
  auto s = parse_ratings_csv(ok);
  REQUIRE(s.size() == 1);
  CHECK(s[0].scores == std::array<int, 4>{1, 2, 3, 4});
  std::ostringstream out;
  write_ratings_csv(out, s);
  CHECK(out.str() == "item_id,rater,consistency,clarity,justification,subgoaling\nr1,h,1,2,3,4\n");
  std::istringstream bad("item_id,rater,consistency,clarity,justification,subgoaling\nr1,h,1,2,3,4\nr2,h,1,5,3,4\n");
  try {
    parse_ratings_csv(bad);
    FAIL("expected RatingsError");
  } catch (const RatingsError& e) {
    CHECK(e.line() == 3);
  }
  std::istringstream noheader("r1,h,1,2,3,4\n");
  CHECK_THROWS_AS(parse_ratings_csv(noheader), RatingsError);
}

TEST_CASE("agreement of identical ratings is perfect") {
  std::vector<RubricScore> a{{"1", "x", {1, 2, 3, 4}}, {"2", "x", {2, 3, 4, 1}}, {"3", "x", {4, 4, 1, 2}}};
  auto stats = agreement(a, a);
  REQUIRE(stats.size() == 4);
  for (const auto& s : stats) {
    CHECK(s.n == 3);
    CHECK(*s.spearman.rho == 1.0);
    CHECK(*s.qwk == 1.0);
  }
  CHECK(kBonferroniThreshold == 0.0125);
}

TEST_CASE("crafted hints yield the planted reason") {
  Json crafted = read_json_file(kRoot / "fixtures/crafted_hints.json");
  REQUIRE(crafted.size() == 30);
  std::map<std::string, int> per_reason;
  for (const auto& c : crafted) {
    Pss s = pss_from_json(c["state"]);
    Hint h{step_from_json(c["hint"], s.derived.size() + 1), c["hint"]["explanation"]};
    auto v = validate_hint(s, h);
    CHECK_MESSAGE(hint_reason_name(v.reason) == c["expected"].get<std::string>(), c["id"]);
    ++per_reason[std::string(hint_reason_name(v.reason))];
  }
  CHECK(per_reason["duplicate"] == 10);
  CHECK(per_reason["missing_parents"] == 10);
  CHECK(per_reason["illogical"] == 10);
}

TEST_CASE("pipeline on the replay fixture") {
  Fixture fx;
  auto gw = fx.gateway();
  auto report = run_pipeline(fx.config(), fx.forge, *gw);
  CHECK(report.failures.empty());
  const Json& s = report.summary;

  // Tallies from an independent script over the fixture files.
  CHECK(s["proofs"]["steps"] == 40);
  CHECK(s["proofs"]["valid"] == 37);
  CHECK(s["proofs"]["accuracy"] == 92.5);
  std::map<std::string, std::pair<int, int>> by_rule{{"MP", {6, 6}},   {"MT", {4, 3}},  {"DS", {4, 2}},
                                                     {"HS", {2, 2}},   {"Simp", {7, 7}}, {"Conj", {4, 4}},
                                                     {"Add", {2, 2}},  {"CD", {1, 1}},  {"Com", {3, 3}},
                                                     {"DeM", {3, 3}}, {"DN", {3, 3}},  {"CP", {1, 1}}};
  REQUIRE(s["proofs"]["by_rule"].size() == by_rule.size());
  for (const auto& row : s["proofs"]["by_rule"]) {
    auto want = by_rule.at(row["rule"].get<std::string>());
    CHECK(row["n"] == want.first);
    CHECK(row["correct"] == want.second);
  }
  CHECK(s["proofs"]["by_rule"][0]["rule"] == "MP");
  CHECK(s["proofs"]["by_level"][2]["level"] == "train2");
  CHECK(s["proofs"]["by_level"][2]["n"] == 14);
  CHECK(s["proofs"]["by_level"][2]["correct"] == 13);

  const Json& pl = s["proofs"]["parent_length"];
  CHECK(pl["incorrect_mean"] == doctest::Approx(6.0));
  CHECK(pl["correct_mean"].get<double>() == doctest::Approx(4.351351351351352).epsilon(1e-12));
  CHECK(pl["t"].get<double>() == doctest::Approx(1.5380595232607894).epsilon(1e-10));
  CHECK(pl["df"].get<double>() == doctest::Approx(2.637027961962147).epsilon(1e-10));
  CHECK(pl["p_value"].get<double>() == doctest::Approx(0.23371049540090585).epsilon(1e-8));

  CHECK(s["hints"]["n"] == 33);
  CHECK(s["hints"]["correct"] == 20);
  CHECK(s["hints"]["accuracy"] == 60.61);
  CHECK(s["hints"]["incorrect_reasons"]["duplicate"] == 6);
  CHECK(s["hints"]["incorrect_reasons"]["missing_parents"] == 5);
  CHECK(s["hints"]["incorrect_reasons"]["illogical"] == 2);
  std::map<std::string, std::array<int, 5>> hint_rule{
      // n, correct, duplicate, missing_parents, illogical
      {"MP", {6, 4, 1, 1, 0}},   {"MT", {7, 5, 1, 1, 0}},  {"DS", {5, 3, 1, 1, 0}}, {"HS", {3, 1, 1, 0, 1}},
      {"Simp", {2, 1, 0, 1, 0}}, {"Conj", {3, 2, 0, 1, 0}}, {"Add", {2, 1, 0, 0, 1}}, {"CD", {1, 1, 0, 0, 0}},
      {"Com", {1, 0, 1, 0, 0}},  {"DeM", {1, 1, 0, 0, 0}},  {"DN", {1, 1, 0, 0, 0}}, {"CP", {1, 0, 1, 0, 0}}};
  REQUIRE(s["hints"]["by_rule"].size() == hint_rule.size());
  for (const auto& row : s["hints"]["by_rule"]) {
    auto want = hint_rule.at(row["rule"].get<std::string>());
    CHECK(row["n"] == want[0]);
    CHECK(row["correct"] == want[1]);
    CHECK(row["duplicate"] == want[2]);
    CHECK(row["missing_parents"] == want[3]);
    CHECK(row["illogical"] == want[4]);
  }
  CHECK(s["hints"]["unique_mean"] == 4.0);
  CHECK(s["hints"]["unique_per_problem"][2]["unique_hints"] == 7);

  CHECK(s["rubric"]["graded"] == 33);
  CHECK(s["rubric"]["llm_means"]["consistency"] == 2.88);
  CHECK(s["rubric"]["llm_means"]["clarity"] == 3.48);
  CHECK(s["rubric"]["llm_means"]["justification"] == 2.48);
  CHECK(s["rubric"]["llm_means"]["subgoaling"] == 2.45);
  CHECK(s["seed"] == 20240);
  CHECK(report.human_sample == std::vector<std::string>{"r00015.000", "r00026.000", "r00030.000", "r00033.000",
                                                        "r00038.000", "r00040.000", "r00043.000"});

  // scipy.stats.spearmanr and a hand QWK over the 7 sampled items.
  const Json& dims = report.agreement["dimensions"];
  REQUIRE(dims.size() == 4);
  CHECK(dims[0]["spearman_rho"] == 1.0);
  CHECK(dims[0]["qwk"] == 1.0);
  CHECK(dims[1]["spearman_rho"].get<double>() == doctest::Approx(0.5477225575051661).epsilon(1e-12));
  CHECK(dims[1]["p_value"].get<double>() == doctest::Approx(0.203110663720055).epsilon(1e-9));
  CHECK(dims[1]["qwk"].get<double>() == doctest::Approx(0.46153846153846156).epsilon(1e-12));
  CHECK(dims[1]["significant"] == false);
  CHECK(dims[3]["spearman_rho"].get<double>() == doctest::Approx(0.9705882352941175).epsilon(1e-12));
  CHECK(dims[3]["p_value"].get<double>() == doctest::Approx(0.00028046528264971004).epsilon(1e-8));
  CHECK(dims[3]["qwk"].get<double>() == doctest::Approx(0.951048951048951).epsilon(1e-12));
  CHECK(dims[3]["significant"] == true);
  CHECK(dims[3]["approximate"] == true);

  bool duplicate_flagged = false;
  for (const auto& r : report.records) {
    if (r.task == "hint" && r.verdict == "duplicate") duplicate_flagged = !r.correct;
  }
  CHECK(duplicate_flagged);
}

TEST_CASE("pipeline reports are byte-identical across runs") {
  Fixture fx;
  auto dir = std::filesystem::temp_directory_path() / "logichint_eval_det";
  std::filesystem::remove_all(dir);
  for (const char* run : {"a", "b"}) {
    auto gw = fx.gateway();
    auto cfg = fx.config();
    cfg.threads = run[0] == 'a' ? 1 : 4;
    write_report(run_pipeline(cfg, fx.forge, *gw), dir / run);
  }
  for (const char* f : {"report.csv", "summary.json", "agreement.json"}) {
    CHECK_MESSAGE(slurp(dir / "a" / f) == slurp(dir / "b" / f), f);
    CHECK(!slurp(dir / "a" / f).empty());
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("pipeline edge cases") {
  Fixture fx;
  SUBCASE("empty test split") {
    auto cfg = fx.config();
    cfg.split.test.clear();
    cfg.states.clear();
    auto gw = fx.gateway();
    auto report = run_pipeline(cfg, fx.forge, *gw);
    CHECK(report.records.empty());
    CHECK(report.summary["records"] == 0);
    CHECK(report.summary["empty"] == true);
    CHECK(report.summary["proofs"]["accuracy"].is_null());
    std::ostringstream csv;
    write_report_csv(csv, report.records);
    std::string text = csv.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 1);
  }
  SUBCASE("cassette misses are listed, never fatal") {
    auto cfg = fx.config();
    cfg.strategies = {Strategy::ZS, Strategy::FS_CoT};
    auto gw = fx.gateway();
    auto report = run_pipeline(cfg, fx.forge, *gw);
    CHECK(report.failures.size() == 10 + 33);
    CHECK(report.failures[0].error.rfind("miss:", 0) == 0);
    CHECK(report.summary["proofs"]["valid"] == 37);
    CHECK(report.summary["failures"].size() == 43);
  }
  SUBCASE("few-shot examples must come from training problems") {
    auto cfg = fx.config();
    cfg.split.training.erase("train1-02");
    cfg.split.test.insert("train1-02");
    auto gw = fx.gateway();
    CHECK_THROWS_AS(run_pipeline(cfg, fx.forge, *gw), std::invalid_argument);
  }
  SUBCASE("unknown backend") {
    auto cfg = fx.config();
    cfg.backends = {"nope"};
    auto gw = fx.gateway();
    CHECK_THROWS_AS(run_pipeline(cfg, fx.forge, *gw), std::invalid_argument);
  }
}

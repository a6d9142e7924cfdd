#include "logichint/eval.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace logichint {

std::string_view group_key_name(GroupKey key) {
  switch (key) {
    case GroupKey::Rule: return "rule";
    case GroupKey::Level: return "level";
    case GroupKey::Strategy: return "strategy";
    case GroupKey::Backend: return "backend";
  }
  return "?";
}

std::optional<GroupKey> group_key_from_name(std::string_view name) {
  for (auto k : {GroupKey::Rule, GroupKey::Level, GroupKey::Strategy, GroupKey::Backend}) {
    if (group_key_name(k) == name) return k;
  }
  return std::nullopt;
}

double percent(std::size_t correct, std::size_t n) {
  if (n == 0) return 0.0;
  return std::round(10000.0 * static_cast<double>(correct) / static_cast<double>(n)) / 100.0;
}

std::string format_percent(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", value);
  return buf;
}

std::vector<AccuracyRow> accuracy_by(const std::vector<EvalRecord>& records, GroupKey key) {
  if (records.empty()) throw std::invalid_argument("accuracy_by: no records");
  // Sort key first, display name second.
  std::map<std::pair<int, std::string>, AccuracyRow> groups;
  for (const auto& r : records) {
    std::pair<int, std::string> k;
    switch (key) {
      case GroupKey::Rule:
        k = r.rule ? std::pair{static_cast<int>(*r.rule), std::string(rule_name(*r.rule))}
                   : std::pair{1000, std::string("unknown")};
        break;
      case GroupKey::Level: k = {static_cast<int>(r.level), std::string(level_name(r.level))}; break;
      case GroupKey::Strategy: k = {static_cast<int>(r.strategy), std::string(strategy_name(r.strategy))}; break;
      case GroupKey::Backend: k = {0, r.backend}; break;
    }
    auto& row = groups[k];
    row.key = k.second;
    ++row.n;
    if (r.correct) ++row.correct;
  }
  std::vector<AccuracyRow> out;
  for (auto& [k, row] : groups) {
    row.accuracy = percent(row.correct, row.n);
    out.push_back(row);
  }
  return out;
}

UniqueHints unique_hints_per_problem(const std::vector<EvalRecord>& records) {
  std::map<std::string, std::set<std::string>> seen;
  for (const auto& r : records) {
    if (r.task != "hint") continue;
    auto& set = seen[r.problem_id];
    if (!r.payload) continue;
    std::string key = to_string(r.payload->formula) + "|" + std::string(rule_name(r.payload->rule)) + "|";
    for (const auto& p : r.payload->parents) key += to_string(p) + ",";
    set.insert(key);
  }
  UniqueHints out;
  std::size_t total = 0;
  for (const auto& [id, set] : seen) {
    out.per_problem.emplace_back(id, set.size());
    total += set.size();
  }
  if (!out.per_problem.empty()) out.mean = static_cast<double>(total) / static_cast<double>(out.per_problem.size());
  return out;
}

std::vector<double> average_ranks(const std::vector<double>& values) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && values[idx[j + 1]] == values[idx[i]]) ++j;
    double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

namespace {

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  double n = static_cast<double>(x.size());
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

double two_sided_t_p(double t, double df) {
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

}  // namespace

Correlation spearman(const std::vector<double>& x, const std::vector<double>& y, SpearmanOptions options) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: vectors differ in length");
  if (x.size() < 2) throw std::invalid_argument("spearman: need at least 2 pairs");
  Correlation c;
  c.n = x.size();
  auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  c.rho = pearson(rx, ry);
  if (!c.rho) return c;
  double rho = *c.rho;
  if (options.exact_permutation && c.n <= 10) {
    c.exact = true;
    std::vector<double> perm = ry;
    std::sort(perm.begin(), perm.end());
    std::size_t total = 0, extreme = 0;
    do {
      ++total;
      auto r = pearson(rx, perm);
      if (r && std::fabs(*r) >= std::fabs(rho) - 1e-12) ++extreme;
    } while (std::next_permutation(perm.begin(), perm.end()));
    c.p_value = static_cast<double>(extreme) / static_cast<double>(total);
    return c;
  }
  c.approximate = c.n < 10;
  if (c.n < 3) return c;
  double df = static_cast<double>(c.n) - 2.0;
  if (std::fabs(rho) >= 1.0) {
    c.p_value = 0.0;
  } else {
    double t = rho * std::sqrt(df / (1.0 - rho * rho));
    c.p_value = two_sided_t_p(t, df);
  }
  return c;
}

std::optional<double> qwk(const std::vector<int>& x, const std::vector<int>& y, int categories) {
  if (x.size() != y.size()) throw std::invalid_argument("qwk: vectors differ in length");
  if (x.size() < 2) throw std::invalid_argument("qwk: need at least 2 pairs");
  if (categories < 2) throw std::invalid_argument("qwk: need at least 2 categories");
  auto k = static_cast<std::size_t>(categories);
  std::vector<double> observed(k * k, 0.0), row(k, 0.0), col(k, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < 1 || x[i] > categories || y[i] < 1 || y[i] > categories) {
      throw std::invalid_argument("qwk: rating outside 1.." + std::to_string(categories));
    }
    auto a = static_cast<std::size_t>(x[i] - 1);
    auto b = static_cast<std::size_t>(y[i] - 1);
    observed[a * k + b] += 1.0;
    row[a] += 1.0;
    col[b] += 1.0;
  }
  double n = static_cast<double>(x.size());
  double scale = static_cast<double>((k - 1) * (k - 1));
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double d = static_cast<double>(i) - static_cast<double>(j);
      double w = d * d / scale;
      num += w * observed[i * k + j];
      den += w * row[i] * col[j] / n;
    }
  }
  if (den == 0.0) return std::nullopt;
  return 1.0 - num / den;
}

WelchResult welch_t(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("welch_t: each sample needs at least 2 values");
  WelchResult r;
  r.n_a = a.size();
  r.n_b = b.size();
  double na = static_cast<double>(a.size());
  double nb = static_cast<double>(b.size());
  r.mean_a = std::accumulate(a.begin(), a.end(), 0.0) / na;
  r.mean_b = std::accumulate(b.begin(), b.end(), 0.0) / nb;
  double va = 0, vb = 0;
  for (double v : a) va += (v - r.mean_a) * (v - r.mean_a);
  for (double v : b) vb += (v - r.mean_b) * (v - r.mean_b);
  va /= na - 1.0;
  vb /= nb - 1.0;
  double sa = va / na;
  double sb = vb / nb;
  if (sa + sb == 0.0) return r;
  r.t = (r.mean_a - r.mean_b) / std::sqrt(sa + sb);
  r.df = (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  r.p_value = two_sided_t_p(*r.t, *r.df);
  return r;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

const char* kRatingsHeader = "item_id,rater,consistency,clarity,justification,subgoaling";

}  // namespace

std::vector<RubricScore> parse_ratings_csv(std::istream& in, const std::string& origin) {
  std::vector<RubricScore> out;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto where = origin + ":" + std::to_string(lineno) + ": ";
    if (!header) {
      if (line != kRatingsHeader) throw RatingsError(where + "expected header '" + kRatingsHeader + "'", lineno);
      header = true;
      continue;
    }
    auto fields = split_csv_line(line);
    if (fields.size() != 6) throw RatingsError(where + "expected 6 fields", lineno);
    RubricScore s;
    s.item_id = fields[0];
    s.rater = fields[1];
    if (s.item_id.empty()) throw RatingsError(where + "empty item_id", lineno);
    for (std::size_t d = 0; d < 4; ++d) {
      const auto& f = fields[d + 2];
      if (f.size() != 1 || f[0] < '1' || f[0] > '4') {
        throw RatingsError(where + kRubricDimensions[d] + " must be an integer 1..4, got '" + f + "'", lineno);
      }
      s.scores[d] = f[0] - '0';
    }
    out.push_back(std::move(s));
  }
  if (!header) throw RatingsError(origin + ": missing header", 0);
  return out;
}

std::vector<RubricScore> read_ratings_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse_ratings_csv(in, path.string());
}

void write_ratings_csv(std::ostream& out, const std::vector<RubricScore>& scores) {
  out << kRatingsHeader << "\n";
  for (const auto& s : scores) {
    out << csv_field(s.item_id) << "," << csv_field(s.rater);
    for (int v : s.scores) out << "," << v;
    out << "\n";
  }
}

std::vector<AgreementStats> agreement(const std::vector<RubricScore>& a, const std::vector<RubricScore>& b,
                                      SpearmanOptions options) {
  std::map<std::string, const RubricScore*> by_id;
  for (const auto& s : b) by_id[s.item_id] = &s;
  std::vector<std::pair<const RubricScore*, const RubricScore*>> pairs;
  for (const auto& s : a) {
    if (auto it = by_id.find(s.item_id); it != by_id.end()) pairs.emplace_back(&s, it->second);
  }
  std::vector<AgreementStats> out;
  for (std::size_t d = 0; d < 4; ++d) {
    AgreementStats st;
    st.dimension = kRubricDimensions[d];
    st.n = pairs.size();
    st.spearman.n = pairs.size();
    if (pairs.size() >= 2) {
      std::vector<double> x, y;
      std::vector<int> xi, yi;
      for (auto [p, q] : pairs) {
        x.push_back(p->scores[d]);
        y.push_back(q->scores[d]);
        xi.push_back(p->scores[d]);
        yi.push_back(q->scores[d]);
      }
      st.spearman = spearman(x, y, options);
      st.qwk = qwk(xi, yi, 4);
      st.significant = st.spearman.p_value && *st.spearman.p_value < kBonferroniThreshold;
    }
    out.push_back(st);
  }
  return out;
}

namespace {

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

Json agreement_json(const std::vector<AgreementStats>& stats) {
  Json dims = Json::array();
  for (const auto& s : stats) {
    dims.push_back(Json{{"dimension", s.dimension},
                        {"n", s.n},
                        {"spearman_rho", opt(s.spearman.rho)},
                        {"p_value", opt(s.spearman.p_value)},
                        {"p_method", s.spearman.exact ? "permutation" : "t"},
                        {"approximate", s.spearman.approximate},
                        {"qwk", opt(s.qwk)},
                        {"significant", s.significant}});
  }
  return Json{{"bonferroni_threshold", kBonferroniThreshold}, {"dimensions", dims}};
}

namespace {

const Formula* resolve(const ParentRef& ref, const Problem& problem, const std::vector<ProofStep>& steps,
                       const std::optional<Formula>& assumption) {
  if (ref.kind == ParentRef::Kind::Premise) {
    if (ref.index >= 1 && ref.index <= problem.premises.size()) return &problem.premises[ref.index - 1];
    return nullptr;
  }
  if (ref.index == 0) return assumption ? &*assumption : nullptr;
  if (ref.index <= steps.size()) return &steps[ref.index - 1].formula;
  return nullptr;
}

std::size_t parent_length(const ProofStep& step, const Problem& problem, const std::vector<ProofStep>& steps,
                          const std::optional<Formula>& assumption) {
  std::size_t sum = 0;
  for (const auto& ref : step.parents) {
    if (const Formula* f = resolve(ref, problem, steps, assumption)) sum += f->length();
  }
  return sum;
}

std::string record_id(std::size_t task, std::size_t sub) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "r%05zu.%03zu", task, sub);
  return buf;
}

struct TaskSpec {
  enum class Kind { Proof, Hint } kind = Kind::Proof;
  const Problem* problem = nullptr;
  const Pss* state = nullptr;
  Strategy strategy = Strategy::ZS;
  std::string backend;
};

struct TaskResult {
  std::vector<EvalRecord> records;
  std::vector<PipelineFailure> failures;
};

TaskResult run_proof_task(std::size_t index, const TaskSpec& t, const PromptForge& forge, Gateway& gateway) {
  TaskResult out;
  std::string id = record_id(index, 0).substr(0, 6);
  auto fail = [&](std::string msg) {
    out.failures.push_back({id, t.problem->id, std::string(strategy_name(t.strategy)), t.backend, std::move(msg)});
  };
  PromptBundle bundle;
  try {
    bundle = forge.build_prove_prompt(*t.problem, t.strategy);
  } catch (const std::exception& e) {
    fail(std::string("prompt: ") + e.what());
    return out;
  }
  auto completion = gateway.complete(bundle, t.backend);
  if (!completion.ok()) {
    fail(std::string(completion_error_name(completion.error->kind)) + ": " + completion.error->message);
    return out;
  }
  auto parsed = parse_proof_response(*completion.text);
  if (!parsed.parse_ok) {
    fail("unparseable response: " + parsed.error);
    return out;
  }
  Proof proof{*t.problem, parsed.steps, parsed.mode};
  auto report = check_proof(proof);
  std::optional<Formula> assumption;
  if (parsed.mode == ProofMode::Indirect) assumption = Formula::negation(t.problem->conclusion);
  for (std::size_t i = 0; i < parsed.steps.size(); ++i) {
    const auto& step = parsed.steps[i];
    EvalRecord r;
    r.record_id = record_id(index, i + 1);
    r.task = "step";
    r.problem_id = t.problem->id;
    r.level = t.problem->level;
    r.strategy = t.strategy;
    r.backend = t.backend;
    r.step_number = i + 1;
    r.payload = step;
    r.rule = step.rule;
    r.verdict = std::string(step_verdict_name(report.verdicts[i].code));
    r.correct = report.verdicts[i].valid();
    r.parent_length_sum = parent_length(step, *t.problem, parsed.steps, assumption);
    out.records.push_back(std::move(r));
  }
  if (parsed.steps.empty()) fail("response contains no steps");
  return out;
}

TaskResult run_hint_task(std::size_t index, const TaskSpec& t, const PromptForge& forge, Gateway& gateway,
                         bool grade) {
  TaskResult out;
  const Pss& state = *t.state;
  EvalRecord r;
  r.record_id = record_id(index, 0);
  r.task = "hint";
  r.problem_id = state.problem.id;
  r.level = state.problem.level;
  r.state = state.problem.id + "#" + std::to_string(state.order);
  r.strategy = t.strategy;
  r.backend = t.backend;
  auto fail = [&](std::string msg) {
    out.failures.push_back({r.record_id, r.problem_id, std::string(strategy_name(t.strategy)), t.backend, std::move(msg)});
  };
  auto text = render_text(state);
  PromptBundle bundle;
  try {
    bundle = forge.build_hint_prompt(text, t.strategy);
  } catch (const std::exception& e) {
    fail(std::string("prompt: ") + e.what());
    return out;
  }
  auto completion = gateway.complete(bundle, t.backend);
  if (!completion.ok()) {
    fail(std::string(completion_error_name(completion.error->kind)) + ": " + completion.error->message);
    return out;
  }
  auto parsed = parse_hint_response(*completion.text);
  if (!parsed.parse_ok || !parsed.hint) {
    fail("unparseable response: " + parsed.error);
    return out;
  }
  auto verdict = validate_hint(state, *parsed.hint);
  r.payload = parsed.hint->step;
  r.rule = parsed.hint->step.rule;
  r.verdict = verdict.correct() ? "correct" : std::string(hint_reason_name(verdict.reason));
  r.correct = verdict.correct();
  r.explanation = parsed.hint->explanation;
  r.parent_length_sum = parent_length(parsed.hint->step, state.problem, state.derived, std::nullopt);
  if (grade) {
    auto gb = forge.build_grader_prompt(r.explanation, text);
    if (!gb.degenerate) {
      auto gc = gateway.complete(gb, t.backend);
      if (!gc.ok()) {
        fail("grading " + std::string(completion_error_name(gc.error->kind)) + ": " + gc.error->message);
      } else {
        auto scores = parse_rubric_response(*gc.text);
        if (scores.parse_ok) {
          r.llm_scores = scores.scores;
        } else {
          fail("unparseable grading response: " + scores.error);
        }
      }
    }
  }
  out.records.push_back(std::move(r));
  return out;
}

std::vector<std::string> sample_ids(const std::vector<EvalRecord>& records, double fraction, std::uint64_t seed) {
  std::vector<std::string> graded;
  for (const auto& r : records) {
    if (r.llm_scores) graded.push_back(r.record_id);
  }
  std::mt19937_64 rng(seed);
  std::shuffle(graded.begin(), graded.end(), rng);
  auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(graded.size())));
  graded.resize(std::min(k, graded.size()));
  std::sort(graded.begin(), graded.end());
  return graded;
}

Json rows_json(const std::vector<AccuracyRow>& rows, const char* key) {
  Json out = Json::array();
  for (const auto& r : rows) {
    out.push_back(Json{{key, r.key}, {"n", r.n}, {"correct", r.correct}, {"accuracy", r.accuracy}});
  }
  return out;
}

std::vector<EvalRecord> select(const std::vector<EvalRecord>& records, const std::string& task) {
  std::vector<EvalRecord> out;
  for (const auto& r : records) {
    if (r.task == task) out.push_back(r);
  }
  return out;
}

}  // namespace

Json summarize(const std::vector<EvalRecord>& records, const std::vector<PipelineFailure>& failures,
               const PipelineConfig& cfg, const std::vector<std::string>& human_sample) {
  Json s;
  s["seed"] = cfg.seed;
  Json strategies = Json::array();
  for (auto st : cfg.strategies) strategies.push_back(strategy_name(st));
  s["strategies"] = strategies;
  s["backends"] = cfg.backends;
  s["split"] = Json{{"training", cfg.split.training.size()},
                    {"validation", cfg.split.validation.size()},
                    {"test", cfg.split.test.size()}};
  s["records"] = records.size();
  s["empty"] = records.empty();

  auto steps = select(records, "step");
  Json proofs;
  std::size_t valid = 0;
  for (const auto& r : steps) valid += r.correct ? 1 : 0;
  proofs["steps"] = steps.size();
  proofs["valid"] = valid;
  proofs["accuracy"] = steps.empty() ? Json(nullptr) : Json(percent(valid, steps.size()));
  if (!steps.empty()) {
    std::map<std::pair<int, std::string>, std::pair<std::size_t, std::size_t>> cells;
    for (const auto& r : steps) {
      auto& c = cells[{static_cast<int>(r.strategy), r.backend}];
      ++c.first;
      if (r.correct) ++c.second;
    }
    Json table = Json::array();
    for (const auto& [k, c] : cells) {
      table.push_back(Json{{"strategy", strategy_name(static_cast<Strategy>(k.first))},
                           {"backend", k.second},
                           {"n", c.first},
                           {"correct", c.second},
                           {"accuracy", percent(c.second, c.first)}});
    }
    proofs["by_strategy_backend"] = table;
    proofs["by_rule"] = rows_json(accuracy_by(steps, GroupKey::Rule), "rule");
    proofs["by_level"] = rows_json(accuracy_by(steps, GroupKey::Level), "level");
    std::vector<double> bad, good;
    for (const auto& r : steps) (r.correct ? good : bad).push_back(static_cast<double>(r.parent_length_sum));
    Json pl{{"incorrect_n", bad.size()}, {"correct_n", good.size()}};
    if (bad.size() >= 2 && good.size() >= 2) {
      auto w = welch_t(bad, good);
      pl["incorrect_mean"] = w.mean_a;
      pl["correct_mean"] = w.mean_b;
      pl["t"] = opt(w.t);
      pl["df"] = opt(w.df);
      pl["p_value"] = opt(w.p_value);
    } else {
      pl["t"] = nullptr;
      pl["note"] = "fewer than 2 steps in a group";
    }
    proofs["parent_length"] = pl;
  }
  s["proofs"] = proofs;

  auto hints = select(records, "hint");
  Json h;
  std::size_t hint_ok = 0;
  for (const auto& r : hints) hint_ok += r.correct ? 1 : 0;
  h["n"] = hints.size();
  h["correct"] = hint_ok;
  h["accuracy"] = hints.empty() ? Json(nullptr) : Json(percent(hint_ok, hints.size()));
  if (!hints.empty()) {
    Json reasons;
    for (auto reason : {HintVerdict::Reason::Duplicate, HintVerdict::Reason::MissingParents,
                        HintVerdict::Reason::Illogical}) {
      std::size_t n = 0;
      for (const auto& r : hints) n += r.verdict == hint_reason_name(reason) ? 1 : 0;
      reasons[std::string(hint_reason_name(reason))] = n;
    }
    h["incorrect_reasons"] = reasons;
    Json by_rule = Json::array();
    for (const auto& row : accuracy_by(hints, GroupKey::Rule)) {
      Json j{{"rule", row.key}, {"n", row.n}, {"correct", row.correct}, {"incorrect", row.n - row.correct}};
      for (auto reason : {HintVerdict::Reason::Duplicate, HintVerdict::Reason::MissingParents,
                          HintVerdict::Reason::Illogical}) {
        std::size_t n = 0;
        for (const auto& r : hints) {
          std::string key = r.rule ? std::string(rule_name(*r.rule)) : "unknown";
          if (key == row.key && r.verdict == hint_reason_name(reason)) ++n;
        }
        j[std::string(hint_reason_name(reason))] = n;
      }
      j["accuracy"] = row.accuracy;
      by_rule.push_back(j);
    }
    h["by_rule"] = by_rule;
    h["by_level"] = rows_json(accuracy_by(hints, GroupKey::Level), "level");
    auto unique = unique_hints_per_problem(hints);
    Json per = Json::array();
    for (const auto& [id, n] : unique.per_problem) per.push_back(Json{{"problem_id", id}, {"unique_hints", n}});
    h["unique_per_problem"] = per;
    h["unique_mean"] = unique.mean;
  }
  s["hints"] = h;

  std::vector<const EvalRecord*> graded;
  for (const auto& r : records) {
    if (r.llm_scores) graded.push_back(&r);
  }
  Json rubric{{"graded", graded.size()}};
  if (!graded.empty()) {
    Json means;
    for (std::size_t d = 0; d < 4; ++d) {
      double sum = 0;
      for (const auto* r : graded) sum += (*r->llm_scores)[d];
      means[kRubricDimensions[d]] = std::round(100.0 * sum / static_cast<double>(graded.size())) / 100.0;
    }
    rubric["llm_means"] = means;
  }
  rubric["human_fraction"] = cfg.human_fraction;
  rubric["human_sample"] = human_sample;
  s["rubric"] = rubric;

  Json f = Json::array();
  for (const auto& x : failures) {
    f.push_back(Json{{"task", x.task_id},
                     {"problem_id", x.problem_id},
                     {"strategy", x.strategy},
                     {"backend", x.backend},
                     {"error", x.error}});
  }
  s["failures"] = f;
  return s;
}

EvalReport run_pipeline(const PipelineConfig& cfg, const PromptForge& forge, Gateway& gateway) {
  if (cfg.human_fraction < 0.0 || cfg.human_fraction > 1.0) {
    throw std::invalid_argument("human_fraction must lie in [0, 1]");
  }
  for (const auto& b : cfg.backends) {
    if (!gateway.has(b)) throw std::invalid_argument("unknown backend '" + b + "'");
  }
  forge.bank().check_split(cfg.split);

  std::vector<const Problem*> test;
  for (const auto& p : cfg.problems) {
    if (cfg.split.split_of(p.id) == "test") test.push_back(&p);
  }
  std::sort(test.begin(), test.end(), [](auto* a, auto* b) { return a->id < b->id; });

  std::vector<TaskSpec> tasks;
  for (auto strategy : cfg.strategies) {
    for (const auto& backend : cfg.backends) {
      if (cfg.prove) {
        for (const auto* p : test) tasks.push_back({TaskSpec::Kind::Proof, p, nullptr, strategy, backend});
      }
      for (const auto& s : cfg.states) tasks.push_back({TaskSpec::Kind::Hint, nullptr, &s, strategy, backend});
    }
  }

  std::vector<TaskResult> results(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const auto& t = tasks[i];
      results[i] = t.kind == TaskSpec::Kind::Proof ? run_proof_task(i + 1, t, forge, gateway)
                                                   : run_hint_task(i + 1, t, forge, gateway, cfg.grade);
    }
  };
  std::size_t n_threads = std::max<std::size_t>(1, std::min(cfg.threads, tasks.size()));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  EvalReport report;
  for (auto& r : results) {
    for (auto& rec : r.records) report.records.push_back(std::move(rec));
    for (auto& f : r.failures) report.failures.push_back(std::move(f));
  }
  std::stable_sort(report.records.begin(), report.records.end(),
                   [](const auto& a, const auto& b) { return a.record_id < b.record_id; });
  report.human_sample = sample_ids(report.records, cfg.human_fraction, cfg.seed);
  report.summary = summarize(report.records, report.failures, cfg, report.human_sample);

  Json agree;
  agree["seed"] = cfg.seed;
  if (cfg.human_ratings.empty()) {
    agree["status"] = "no human ratings";
    agree["bonferroni_threshold"] = kBonferroniThreshold;
    agree["dimensions"] = Json::array();
  } else {
    std::vector<RubricScore> llm;
    for (const auto& r : report.records) {
      if (r.llm_scores) llm.push_back({r.record_id, "llm:" + r.backend, *r.llm_scores});
    }
    Json a = agreement_json(agreement(cfg.human_ratings, llm));
    agree["status"] = "ok";
    agree["bonferroni_threshold"] = a["bonferroni_threshold"];
    agree["dimensions"] = a["dimensions"];
  }
  report.agreement = agree;
  return report;
}

void write_report_csv(std::ostream& out, const std::vector<EvalRecord>& records) {
  out << "record_id,task,problem_id,level,state,strategy,backend,step,formula,rule,parents,verdict,correct,"
         "parent_length_sum,consistency,clarity,justification,subgoaling\n";
  for (const auto& r : records) {
    std::string formula, parents;
    if (r.payload) {
      formula = to_string(r.payload->formula);
      for (std::size_t i = 0; i < r.payload->parents.size(); ++i) {
        if (i) parents += ' ';
        parents += to_string(r.payload->parents[i]);
      }
    }
    out << r.record_id << ',' << r.task << ',' << csv_field(r.problem_id) << ',' << level_name(r.level) << ','
        << csv_field(r.state) << ',' << strategy_name(r.strategy) << ',' << csv_field(r.backend) << ','
        << (r.task == "step" ? std::to_string(r.step_number) : "") << ',' << csv_field(formula) << ','
        << (r.rule ? rule_name(*r.rule) : "") << ',' << parents << ',' << r.verdict << ',' << (r.correct ? 1 : 0)
        << ',' << r.parent_length_sum;
    for (std::size_t d = 0; d < 4; ++d) {
      out << ',';
      if (r.llm_scores) out << (*r.llm_scores)[d];
    }
    out << '\n';
  }
}

void write_report(const EvalReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / "report.csv", std::ios::binary);
  if (!csv) throw std::runtime_error("cannot write " + (dir / "report.csv").string());
  write_report_csv(csv, report.records);
  write_json_file(dir / "summary.json", report.summary);
  write_json_file(dir / "agreement.json", report.agreement);
}

}  // namespace logichint

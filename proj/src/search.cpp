#include "logichint/search.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

namespace logichint {

void SearchConfig::validate() const {
  if (max_depth == 0 || max_frontier == 0 || max_formula_len == 0) {
    throw std::invalid_argument("search bounds must be positive");
  }
}

std::string_view search_status_name(SearchStatus status) {
  switch (status) {
    case SearchStatus::Found: return "found";
    case SearchStatus::Exhausted: return "exhausted";
    case SearchStatus::Truncated: return "truncated";
  }
  return "?";
}

namespace {

using NodeId = std::size_t;

struct Node {
  Formula formula;
  std::size_t depth = 0;
  bool given = false;
  ParentRef origin;
  RuleId rule = RuleId::MP;
  std::vector<NodeId> parents;
  std::optional<SitePath> site;
  std::optional<Direction> direction;
};

struct Candidate {
  RuleId rule;
  std::vector<NodeId> parents;
  Formula result;
  std::optional<SitePath> site;
  std::optional<Direction> direction;
};

bool candidate_less(const Candidate& a, const Candidate& b) {
  if (a.rule != b.rule) return a.rule < b.rule;
  if (a.parents != b.parents) return a.parents < b.parents;
  if (a.site != b.site) return a.site < b.site;
  if (a.direction != b.direction) return a.direction < b.direction;
  // Same rule and parents with different results only happens for Addition.
  return structural_less(a.result, b.result);
}

template <typename V>
using FormulaMap = std::unordered_map<Formula, V, FormulaHash>;
using FormulaSet = std::unordered_set<Formula, FormulaHash>;

constexpr std::array<RuleId, 5> kReplacementRules = {RuleId::Com, RuleId::DeM, RuleId::Impl, RuleId::DN, RuleId::CP};

struct Outcome {
  SearchStatus status = SearchStatus::Exhausted;
  std::optional<NodeId> goal;
  std::size_t depth_reached = 0;
};

class Saturation {
public:
  Saturation(const SearchConfig& cfg, const AdditionPool& pool) : cfg_(cfg) {
    for (auto& d : pool.disjuncts()) pool_set_.insert(d);
    pool_list_ = pool.disjuncts();
  }

  void add_given(const Formula& f, ParentRef origin) {
    if (ids_.count(f)) return;
    Node n;
    n.formula = f;
    n.given = true;
    n.origin = origin;
    insert(std::move(n));
  }

  void build_relevance(const std::vector<Formula>& seeds) {
    std::vector<Formula> order;
    auto admit = [&](const Formula& f) {
      if (f.length() <= cfg_.max_formula_len && relevant_.insert(f).second) order.push_back(f);
    };
    for (const auto& s : seeds) {
      for (const auto& sub : subformulas(s)) {
        admit(sub);
        admit(Formula::negation(sub));
      }
    }
    const std::size_t base = order.size();
    for (std::size_t i = 0; i < base; ++i) {
      const Formula f = order[i];
      for (const auto& site : all_sites(f)) {
        const Formula* sub = subformula_at(f, site);
        for (RuleId r : kReplacementRules) {
          for (Direction d : {Direction::Forward, Direction::Backward}) {
            if (auto rw = rewrite_root(r, d, *sub)) admit(replace_at(f, site, *rw));
          }
        }
      }
    }
    const std::size_t rewritten = order.size();
    for (std::size_t i = base; i < rewritten; ++i) {
      for (const auto& sub : subformulas(order[i])) admit(sub);
    }
    for (const auto& f : order) {
      if (f.is_and()) relevant_and_.push_back(f);
      if (f.is_or()) relevant_or_.push_back(f);
    }
  }

  Outcome run(const Formula& goal) {
    Outcome out;
    if (auto g = find(goal)) {
      out.status = SearchStatus::Found;
      out.goal = *g;
      return out;
    }
    NodeId fresh_begin = 0;
    for (std::size_t depth = 1; depth <= cfg_.max_depth; ++depth) {
      const NodeId fresh_end = nodes_.size();
      std::vector<Candidate> cands;
      generate(fresh_begin, cands);
      std::sort(cands.begin(), cands.end(), candidate_less);
      out.depth_reached = depth;
      for (auto& c : cands) {
        if (ids_.count(c.result)) continue;
        if (nodes_.size() >= cfg_.max_frontier) {
          out.status = SearchStatus::Truncated;
          return out;
        }
        Node n;
        n.formula = c.result;
        n.depth = depth;
        n.rule = c.rule;
        n.parents = std::move(c.parents);
        n.site = std::move(c.site);
        n.direction = c.direction;
        NodeId id = insert(std::move(n));
        if (nodes_[id].formula == goal) {
          out.status = SearchStatus::Found;
          out.goal = id;
          return out;
        }
      }
      if (nodes_.size() == fresh_end) {
        out.status = SearchStatus::Exhausted;
        return out;
      }
      fresh_begin = fresh_end;
    }
    out.status = SearchStatus::Truncated;
    return out;
  }

  const std::vector<Node>& nodes() const { return nodes_; }

private:
  NodeId insert(Node n) {
    NodeId id = nodes_.size();
    const Formula& f = n.formula;
    ids_.emplace(f, id);
    if (f.is_implies()) {
      imp_by_ante_[f.left()].push_back(id);
      imp_by_cons_[f.right()].push_back(id);
    } else if (f.is_or()) {
      or_by_left_[f.left()].push_back(id);
      disjunctions_.push_back(id);
    }
    nodes_.push_back(std::move(n));
    return id;
  }

  std::optional<NodeId> find(const Formula& f) const {
    auto it = ids_.find(f);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  static const std::vector<NodeId>& lookup(const FormulaMap<std::vector<NodeId>>& m, const Formula& key) {
    static const std::vector<NodeId> none;
    auto it = m.find(key);
    return it == m.end() ? none : it->second;
  }

  void emit(std::vector<Candidate>& out, RuleId rule, std::vector<NodeId> parents, Formula result,
            std::optional<SitePath> site = std::nullopt, std::optional<Direction> dir = std::nullopt) const {
    if (result.length() > cfg_.max_formula_len) return;
    out.push_back({rule, std::move(parents), std::move(result), std::move(site), dir});
  }

  // Every application with at least one parent in [fresh, end).
  void generate(NodeId fresh, std::vector<Candidate>& out) const {
    const NodeId end = nodes_.size();
    auto is_fresh = [&](NodeId id) { return id >= fresh; };
    for (NodeId i = fresh; i < end; ++i) {
      const Formula& f = nodes_[i].formula;
      if (f.is_implies()) {
        if (auto j = find(f.left())) emit(out, RuleId::MP, {i, *j}, f.right());
        if (auto j = find(Formula::negation(f.right()))) emit(out, RuleId::MT, {i, *j}, Formula::negation(f.left()));
        for (NodeId j : lookup(imp_by_ante_, f.right())) {
          emit(out, RuleId::HS, {i, j}, Formula::implication(f.left(), nodes_[j].formula.right()));
        }
        for (NodeId k : lookup(imp_by_cons_, f.left())) {
          if (!is_fresh(k)) emit(out, RuleId::HS, {k, i}, Formula::implication(nodes_[k].formula.left(), f.right()));
        }
      }
      if (f.is_or()) {
        if (auto j = find(Formula::negation(f.left()))) emit(out, RuleId::DS, {i, *j}, f.right());
      }
      if (f.is_and()) emit(out, RuleId::Simp, {i}, f.left());
      // Fresh statement in the minor-premise slot, older major premise.
      for (NodeId k : lookup(imp_by_ante_, f)) {
        if (!is_fresh(k)) emit(out, RuleId::MP, {k, i}, nodes_[k].formula.right());
      }
      if (f.is_not()) {
        for (NodeId k : lookup(imp_by_cons_, f.operand())) {
          if (!is_fresh(k)) emit(out, RuleId::MT, {k, i}, Formula::negation(nodes_[k].formula.left()));
        }
        for (NodeId k : lookup(or_by_left_, f.operand())) {
          if (!is_fresh(k)) emit(out, RuleId::DS, {k, i}, nodes_[k].formula.right());
        }
        if (auto k = find(f.operand()); k && !is_fresh(*k)) emit(out, RuleId::Contra, {*k, i}, Formula::falsum());
      }
      if (auto j = find(Formula::negation(f))) emit(out, RuleId::Contra, {i, *j}, Formula::falsum());
      generate_rewrites(i, out);
    }
    generate_conjunctions(fresh, out);
    generate_additions(fresh, out);
    generate_dilemmas(fresh, out);
  }

  void generate_rewrites(NodeId i, std::vector<Candidate>& out) const {
    const Formula& f = nodes_[i].formula;
    for (const auto& site : all_sites(f)) {
      const Formula* sub = subformula_at(f, site);
      for (RuleId r : kReplacementRules) {
        for (Direction d : {Direction::Forward, Direction::Backward}) {
          auto rw = rewrite_root(r, d, *sub);
          if (!rw) continue;
          Formula result = replace_at(f, site, *rw);
          if (cfg_.relevance_filter && result.length() >= f.length() && !relevant_.count(result)) continue;
          emit(out, r, {i}, std::move(result), site, d);
        }
      }
    }
  }

  void generate_conjunctions(NodeId fresh, std::vector<Candidate>& out) const {
    const NodeId end = nodes_.size();
    if (cfg_.relevance_filter) {
      for (const auto& c : relevant_and_) {
        auto a = find(c.left());
        auto b = find(c.right());
        if (a && b && (*a >= fresh || *b >= fresh)) emit(out, RuleId::Conj, {*a, *b}, c);
      }
      return;
    }
    for (NodeId i = 0; i < end; ++i) {
      for (NodeId j = (i >= fresh ? 0 : fresh); j < end; ++j) {
        emit(out, RuleId::Conj, {i, j}, Formula::conjunction(nodes_[i].formula, nodes_[j].formula));
      }
    }
  }

  void generate_additions(NodeId fresh, std::vector<Candidate>& out) const {
    const NodeId end = nodes_.size();
    if (cfg_.relevance_filter) {
      for (const auto& d : relevant_or_) {
        if (auto a = find(d.left()); a && *a >= fresh && pool_set_.count(d.right())) emit(out, RuleId::Add, {*a}, d);
        if (auto b = find(d.right()); b && *b >= fresh && pool_set_.count(d.left())) emit(out, RuleId::Add, {*b}, d);
      }
      return;
    }
    for (NodeId i = fresh; i < end; ++i) {
      for (const auto& d : pool_list_) {
        emit(out, RuleId::Add, {i}, Formula::disjunction(nodes_[i].formula, d));
        emit(out, RuleId::Add, {i}, Formula::disjunction(d, nodes_[i].formula));
      }
    }
  }

  void generate_dilemmas(NodeId fresh, std::vector<Candidate>& out) const {
    for (NodeId k : disjunctions_) {
      const Formula& d = nodes_[k].formula;
      for (NodeId i : lookup(imp_by_ante_, d.left())) {
        for (NodeId j : lookup(imp_by_ante_, d.right())) {
          if (i < fresh && j < fresh && k < fresh) continue;
          emit(out, RuleId::CD, {i, j, k}, Formula::disjunction(nodes_[i].formula.right(), nodes_[j].formula.right()));
        }
      }
    }
  }

  const SearchConfig& cfg_;
  FormulaSet pool_set_;
  std::vector<Formula> pool_list_;
  std::vector<Node> nodes_;
  FormulaMap<NodeId> ids_;
  FormulaMap<std::vector<NodeId>> imp_by_ante_;
  FormulaMap<std::vector<NodeId>> imp_by_cons_;
  FormulaMap<std::vector<NodeId>> or_by_left_;
  std::vector<NodeId> disjunctions_;
  FormulaSet relevant_;
  std::vector<Formula> relevant_and_;
  std::vector<Formula> relevant_or_;
};

// Ancestor steps of `goal`, numbered after `first_index - 1`.
std::vector<ProofStep> extract_steps(const std::vector<Node>& nodes, NodeId goal, std::size_t first_index) {
  std::vector<NodeId> needed;
  std::vector<bool> seen(nodes.size(), false);
  std::vector<NodeId> stack{goal};
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    if (seen[id] || nodes[id].given) continue;
    seen[id] = true;
    needed.push_back(id);
    for (NodeId p : nodes[id].parents) stack.push_back(p);
  }
  std::sort(needed.begin(), needed.end());
  std::unordered_map<NodeId, ParentRef> refs;
  std::vector<ProofStep> steps;
  for (NodeId id : needed) {
    const Node& n = nodes[id];
    ProofStep s;
    s.index = first_index + steps.size();
    s.formula = n.formula;
    s.rule = n.rule;
    s.site = n.site;
    s.direction = n.direction;
    for (NodeId p : n.parents) s.parents.push_back(nodes[p].given ? nodes[p].origin : refs.at(p));
    refs.emplace(id, ParentRef::step(s.index));
    steps.push_back(std::move(s));
  }
  return steps;
}

AdditionPool pool_for(const Problem& problem) {
  AdditionPool pool;
  pool.signature = problem.signature();
  pool.conclusion = problem.conclusion;
  return pool;
}

}  // namespace

SearchResult solve(const Problem& problem, const SearchConfig& cfg) {
  cfg.validate();
  Saturation sat(cfg, pool_for(problem));
  std::vector<Formula> seeds;
  for (std::size_t i = 0; i < problem.premises.size(); ++i) {
    sat.add_given(problem.premises[i], ParentRef::premise(i + 1));
    seeds.push_back(problem.premises[i]);
  }
  Proof proof;
  proof.problem = problem;
  Formula goal = problem.conclusion;
  if (cfg.indirect) {
    proof.mode = ProofMode::Indirect;
    Formula assumption = Formula::negation(problem.conclusion);
    sat.add_given(assumption, ParentRef::step(0));
    seeds.push_back(assumption);
    goal = Formula::falsum();
  }
  seeds.push_back(problem.conclusion);
  if (cfg.relevance_filter) sat.build_relevance(seeds);

  Outcome o = sat.run(goal);
  SearchResult r;
  r.status = o.status;
  r.explored = sat.nodes().size();
  r.depth_reached = o.depth_reached;
  if (o.status == SearchStatus::Found) {
    proof.steps = extract_steps(sat.nodes(), *o.goal, 1);
    r.proof = std::move(proof);
  }
  return r;
}

std::string explain_step(const Pss& state, const ProofStep& step) {
  Workspace ws(state.problem);
  for (const auto& s : state.derived) ws.push(s);
  std::string text = "Apply " + std::string(rule_title(step.rule)) + " (" + std::string(rule_name(step.rule)) + ")";
  if (!step.parents.empty()) {
    text += " to ";
    for (std::size_t i = 0; i < step.parents.size(); ++i) {
      if (i) text += (i + 1 == step.parents.size()) ? " and " : ", ";
      text += to_string(step.parents[i]);
      if (const Formula* f = ws.lookup(step.parents[i])) text += " (" + to_string(*f) + ")";
    }
  }
  text += " to derive " + to_string(step.formula) + ".";
  if (step.formula == state.problem.conclusion) text += " This completes the proof.";
  return text;
}

std::optional<Hint> next_step_hint(const Pss& state, const SearchConfig& cfg) {
  cfg.validate();
  const Problem& problem = state.problem;
  Workspace ws(problem);
  for (const auto& s : state.derived) ws.push(s);
  for (const auto& f : ws.available_formulas()) {
    if (f == problem.conclusion) return std::nullopt;
  }

  Saturation sat(cfg, pool_for(problem));
  std::vector<Formula> seeds;
  for (const auto& ref : ws.available_refs()) {
    const Formula* f = ws.lookup(ref);
    sat.add_given(*f, ref);
    seeds.push_back(*f);
  }
  seeds.push_back(problem.conclusion);
  if (cfg.relevance_filter) sat.build_relevance(seeds);
  Outcome o = sat.run(problem.conclusion);
  if (o.status != SearchStatus::Found) return std::nullopt;

  const std::size_t next_index = state.derived.size() + 1;
  auto steps = extract_steps(sat.nodes(), *o.goal, next_index);
  // The first step whose parents are all in the state; later candidates are
  // only needed when the first repeats a rejected student statement.
  for (const auto& s : steps) {
    bool ready = std::all_of(s.parents.begin(), s.parents.end(),
                             [&](const ParentRef& r) { return ws.lookup(r) != nullptr; });
    if (!ready) continue;
    ProofStep step = s;
    step.index = next_index;
    Hint h{step, explain_step(state, step)};
    if (validate_hint(state, h).correct()) return h;
  }
  return std::nullopt;
}

TooManyVariables::TooManyVariables(std::size_t count)
    : std::runtime_error("entailment check over " + std::to_string(count) + " atoms exceeds the limit of " +
                         std::to_string(kMaxEntailmentAtoms)) {}

namespace {

// Postfix program over atom indices; evaluation against a bitmask.
class CompiledFormula {
public:
  CompiledFormula(const Formula& f, const std::unordered_map<std::string, unsigned>& index) { emit(f, index); }

  bool eval(std::uint32_t mask) const {
    char small[64] = {};
    std::vector<char> large;
    char* stack = small;
    if (max_stack_ > sizeof(small)) {
      large.resize(max_stack_);
      stack = large.data();
    }
    std::size_t top = 0;
    for (const auto& op : ops_) {
      switch (op.kind) {
        case Connective::Atom: stack[top++] = static_cast<char>((mask >> op.var) & 1U); break;
        case Connective::False: stack[top++] = false; break;
        case Connective::Not: stack[top - 1] = !stack[top - 1]; break;
        case Connective::And: --top; stack[top - 1] = stack[top - 1] && stack[top]; break;
        case Connective::Or: --top; stack[top - 1] = stack[top - 1] || stack[top]; break;
        case Connective::Implies: --top; stack[top - 1] = !stack[top - 1] || stack[top]; break;
      }
    }
    return stack[0];
  }

private:
  struct Op {
    Connective kind;
    unsigned var;
  };

  void emit(const Formula& f, const std::unordered_map<std::string, unsigned>& index) {
    for (std::size_t i = 0; i < f.arity(); ++i) emit(f.child(i), index);
    ops_.push_back({f.kind(), f.is_atom() ? index.at(f.name()) : 0U});
    depth_ = f.arity() == 0 ? depth_ + 1 : depth_ + 1 - f.arity();
    max_stack_ = std::max(max_stack_, depth_);
  }

  std::vector<Op> ops_;
  std::size_t depth_ = 0;
  std::size_t max_stack_ = 0;
};

struct TruthTable {
  std::vector<CompiledFormula> premises;
  std::size_t atoms = 0;
};

TruthTable compile(const std::vector<Formula>& formulas, const Formula* goal, std::optional<CompiledFormula>& g) {
  std::set<std::string> names;
  for (const auto& f : formulas) collect_atoms(f, names);
  if (goal) collect_atoms(*goal, names);
  if (names.size() > kMaxEntailmentAtoms) throw TooManyVariables(names.size());
  std::unordered_map<std::string, unsigned> index;
  for (const auto& n : names) index.emplace(n, static_cast<unsigned>(index.size()));
  TruthTable t;
  t.atoms = names.size();
  for (const auto& f : formulas) t.premises.emplace_back(f, index);
  if (goal) g.emplace(*goal, index);
  return t;
}

}  // namespace

bool entails(const std::vector<Formula>& premises, const Formula& goal) {
  std::optional<CompiledFormula> g;
  TruthTable t = compile(premises, &goal, g);
  const std::uint32_t rows = 1U << t.atoms;
  for (std::uint32_t mask = 0; mask < rows; ++mask) {
    bool all = std::all_of(t.premises.begin(), t.premises.end(), [&](const auto& c) { return c.eval(mask); });
    if (all && !g->eval(mask)) return false;
  }
  return true;
}

bool jointly_unsatisfiable(const std::vector<Formula>& formulas) {
  std::optional<CompiledFormula> unused;
  TruthTable t = compile(formulas, nullptr, unused);
  const std::uint32_t rows = 1U << t.atoms;
  for (std::uint32_t mask = 0; mask < rows; ++mask) {
    if (std::all_of(t.premises.begin(), t.premises.end(), [&](const auto& c) { return c.eval(mask); })) return false;
  }
  return true;
}

}  // namespace logichint

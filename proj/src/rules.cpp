#include "logichint/rules.hpp"

#include <algorithm>
#include <functional>
#include <unordered_set>

namespace logichint {

RuleKind rule_kind(RuleId rule) {
  switch (rule) {
    case RuleId::Com:
    case RuleId::DeM:
    case RuleId::Impl:
    case RuleId::DN:
    case RuleId::CP:
      return RuleKind::Replacement;
    default:
      return RuleKind::Inference;
  }
}

std::size_t rule_arity(RuleId rule) {
  switch (rule) {
    case RuleId::MP:
    case RuleId::MT:
    case RuleId::DS:
    case RuleId::HS:
    case RuleId::Conj:
    case RuleId::Contra:
      return 2;
    case RuleId::CD:
      return 3;
    default:
      return 1;
  }
}

std::string_view rule_name(RuleId rule) {
  switch (rule) {
    case RuleId::MP: return "MP";
    case RuleId::MT: return "MT";
    case RuleId::DS: return "DS";
    case RuleId::HS: return "HS";
    case RuleId::Simp: return "Simp";
    case RuleId::Conj: return "Conj";
    case RuleId::Add: return "Add";
    case RuleId::CD: return "CD";
    case RuleId::Com: return "Com";
    case RuleId::DeM: return "DeM";
    case RuleId::Impl: return "Impl";
    case RuleId::DN: return "DN";
    case RuleId::CP: return "CP";
    case RuleId::Contra: return "Contra";
  }
  return "?";
}

std::string_view rule_title(RuleId rule) {
  switch (rule) {
    case RuleId::MP: return "Modus Ponens";
    case RuleId::MT: return "Modus Tollens";
    case RuleId::DS: return "Disjunctive Syllogism";
    case RuleId::HS: return "Hypothetical Syllogism";
    case RuleId::Simp: return "Simplification";
    case RuleId::Conj: return "Conjunction";
    case RuleId::Add: return "Addition";
    case RuleId::CD: return "Constructive Dilemma";
    case RuleId::Com: return "Commutation";
    case RuleId::DeM: return "DeMorgan's";
    case RuleId::Impl: return "Implication";
    case RuleId::DN: return "Double Negation";
    case RuleId::CP: return "Contrapositive";
    case RuleId::Contra: return "Contradiction";
  }
  return "?";
}

std::optional<RuleId> rule_from_name(std::string_view name) {
  for (RuleId r : kAllRules) {
    if (rule_name(r) == name) return r;
  }
  return std::nullopt;
}

std::string_view direction_name(Direction d) { return d == Direction::Forward ? "forward" : "backward"; }

std::optional<Direction> direction_from_name(std::string_view name) {
  if (name == "forward") return Direction::Forward;
  if (name == "backward") return Direction::Backward;
  return std::nullopt;
}

std::optional<Formula> rewrite_root(RuleId rule, Direction dir, const Formula& f) {
  const bool fwd = dir == Direction::Forward;
  switch (rule) {
    case RuleId::Com:
      if (f.is_and() || f.is_or()) return Formula::binary(f.kind(), f.right(), f.left());
      return std::nullopt;
    case RuleId::DeM:
      if (fwd) {
        // ~(p & q) => ~p | ~q ; ~(p | q) => ~p & ~q
        if (f.is_not() && (f.operand().is_and() || f.operand().is_or())) {
          const Formula& inner = f.operand();
          Connective dual = inner.is_and() ? Connective::Or : Connective::And;
          return Formula::binary(dual, Formula::negation(inner.left()), Formula::negation(inner.right()));
        }
      } else if ((f.is_or() || f.is_and()) && f.left().is_not() && f.right().is_not()) {
        Connective dual = f.is_or() ? Connective::And : Connective::Or;
        return Formula::negation(Formula::binary(dual, f.left().operand(), f.right().operand()));
      }
      return std::nullopt;
    case RuleId::Impl:
      if (fwd) {
        if (f.is_implies()) return Formula::disjunction(Formula::negation(f.left()), f.right());
      } else if (f.is_or() && f.left().is_not()) {
        return Formula::implication(f.left().operand(), f.right());
      }
      return std::nullopt;
    case RuleId::DN:
      if (fwd) {
        if (f.is_not() && f.operand().is_not()) return f.operand().operand();
        return std::nullopt;
      }
      return Formula::negation(Formula::negation(f));
    case RuleId::CP:
      if (fwd) {
        if (f.is_implies()) return Formula::implication(Formula::negation(f.right()), Formula::negation(f.left()));
      } else if (f.is_implies() && f.left().is_not() && f.right().is_not()) {
        return Formula::implication(f.right().operand(), f.left().operand());
      }
      return std::nullopt;
    default:
      return std::nullopt;
  }
}

namespace {

using Mismatch = std::optional<std::string>;

std::string q(const Formula& f) { return "'" + to_string(f) + "'"; }

// Each matcher checks one parent ordering; nullopt means the schema matched.
Mismatch match_inference(RuleId rule, const std::vector<const Formula*>& p, const Formula& result) {
  switch (rule) {
    case RuleId::MP: {
      const Formula& imp = *p[0];
      if (!imp.is_implies()) return "first parent " + q(imp) + " is not an implication p -> q";
      if (*p[1] != imp.left()) return "second parent " + q(*p[1]) + " does not match antecedent " + q(imp.left());
      if (result != imp.right()) return "result " + q(result) + " is not the consequent " + q(imp.right());
      return std::nullopt;
    }
    case RuleId::MT: {
      const Formula& imp = *p[0];
      if (!imp.is_implies()) return "first parent " + q(imp) + " is not an implication p -> q";
      if (!(p[1]->is_not() && p[1]->operand() == imp.right()))
        return "second parent " + q(*p[1]) + " is not the negated consequent ~" + q(imp.right());
      if (!(result.is_not() && result.operand() == imp.left()))
        return "result " + q(result) + " is not the negated antecedent ~" + q(imp.left());
      return std::nullopt;
    }
    case RuleId::DS: {
      const Formula& dis = *p[0];
      if (!dis.is_or()) return "first parent " + q(dis) + " is not a disjunction p | q";
      if (!(p[1]->is_not() && p[1]->operand() == dis.left()))
        return "second parent " + q(*p[1]) + " is not the negated left disjunct ~" + q(dis.left());
      if (result != dis.right()) return "result " + q(result) + " is not the right disjunct " + q(dis.right());
      return std::nullopt;
    }
    case RuleId::HS: {
      const Formula& a = *p[0];
      const Formula& b = *p[1];
      if (!a.is_implies()) return "first parent " + q(a) + " is not an implication p -> q";
      if (!b.is_implies()) return "second parent " + q(b) + " is not an implication q -> r";
      if (b.left() != a.right())
        return "antecedent " + q(b.left()) + " of the second parent does not match consequent " + q(a.right());
      if (!(result.is_implies() && result.left() == a.left() && result.right() == b.right()))
        return "result " + q(result) + " is not " + q(Formula::implication(a.left(), b.right()));
      return std::nullopt;
    }
    case RuleId::Simp: {
      const Formula& c = *p[0];
      if (!c.is_and()) return "parent " + q(c) + " is not a conjunction p & q";
      if (result != c.left()) return "result " + q(result) + " is not the left conjunct " + q(c.left());
      return std::nullopt;
    }
    case RuleId::Conj:
      if (!result.is_and()) return "result " + q(result) + " is not a conjunction";
      if (result.left() != *p[0]) return "left conjunct " + q(result.left()) + " is not the parent " + q(*p[0]);
      if (result.right() != *p[1]) return "right conjunct " + q(result.right()) + " is not the parent " + q(*p[1]);
      return std::nullopt;
    case RuleId::Add:
      if (!result.is_or()) return "result " + q(result) + " is not a disjunction";
      if (result.left() != *p[0] && result.right() != *p[0])
        return "neither disjunct of " + q(result) + " is the parent " + q(*p[0]);
      return std::nullopt;
    case RuleId::CD: {
      const Formula& a = *p[0];
      const Formula& b = *p[1];
      const Formula& d = *p[2];
      if (!a.is_implies()) return "first parent " + q(a) + " is not an implication p -> q";
      if (!b.is_implies()) return "second parent " + q(b) + " is not an implication r -> s";
      if (!(d.is_or() && d.left() == a.left() && d.right() == b.left()))
        return "third parent " + q(d) + " is not " + q(Formula::disjunction(a.left(), b.left()));
      if (!(result.is_or() && result.left() == a.right() && result.right() == b.right()))
        return "result " + q(result) + " is not " + q(Formula::disjunction(a.right(), b.right()));
      return std::nullopt;
    }
    case RuleId::Contra:
      if (!(p[1]->is_not() && p[1]->operand() == *p[0]))
        return "second parent " + q(*p[1]) + " is not the negation of " + q(*p[0]);
      if (!result.is_false()) return "result " + q(result) + " is not the contradiction constant 0";
      return std::nullopt;
    default:
      return "not an inference rule";
  }
}

ValidationResult fail(ValidationResult::Code code, std::string why) {
  ValidationResult r;
  r.code = code;
  r.diagnosis = std::move(why);
  return r;
}

ValidationResult validate_inference(const RuleApplication& app) {
  if (app.site && !app.site->empty()) {
    return fail(ValidationResult::Code::InvalidSite,
                std::string(rule_name(app.rule)) + " applies to whole statements only; no site allowed");
  }
  std::vector<const Formula*> order;
  for (const auto& f : app.parents) order.push_back(&f);
  // Parent order is not significant: try every permutation, report the
  // diagnosis of the order as given.
  std::vector<std::size_t> idx(order.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::optional<std::string> first;
  do {
    std::vector<const Formula*> perm;
    for (std::size_t i : idx) perm.push_back(order[i]);
    auto m = match_inference(app.rule, perm, app.result);
    if (!m) return {};
    if (!first) first = std::move(m);
  } while (std::next_permutation(idx.begin(), idx.end()));
  return fail(ValidationResult::Code::SchemaMismatch, std::string(rule_name(app.rule)) + ": " + *first);
}

ValidationResult validate_replacement(const RuleApplication& app) {
  const Formula& parent = app.parents.front();
  std::vector<SitePath> sites;
  if (app.site) {
    if (!subformula_at(parent, *app.site)) {
      return fail(ValidationResult::Code::InvalidSite, "site path does not address a subformula of " + q(parent));
    }
    sites.push_back(*app.site);
  } else {
    sites = all_sites(parent);
  }
  std::vector<Direction> dirs;
  if (app.direction) {
    dirs.push_back(*app.direction);
  } else {
    dirs = {Direction::Forward, Direction::Backward};
  }
  for (const auto& site : sites) {
    const Formula* sub = subformula_at(parent, site);
    for (Direction d : dirs) {
      auto rewritten = rewrite_root(app.rule, d, *sub);
      if (!rewritten) continue;
      if (replace_at(parent, site, *rewritten) == app.result) {
        ValidationResult ok;
        ok.matched_site = site;
        ok.matched_direction = d;
        return ok;
      }
    }
  }
  std::string where = app.site ? "at the given site" : "at any site";
  return fail(ValidationResult::Code::SchemaMismatch, std::string(rule_name(app.rule)) + ": no rewrite of " +
                                                          q(parent) + " " + where + " yields " + q(app.result));
}

}  // namespace

ValidationResult validate_application(const RuleApplication& app) {
  std::size_t want = rule_arity(app.rule);
  if (app.parents.size() != want) {
    return fail(ValidationResult::Code::ArityMismatch, std::string(rule_name(app.rule)) + " takes " +
                                                           std::to_string(want) + " parent(s), got " +
                                                           std::to_string(app.parents.size()));
  }
  if (app.result.empty()) return fail(ValidationResult::Code::SchemaMismatch, "missing result formula");
  for (const auto& p : app.parents) {
    if (p.empty()) return fail(ValidationResult::Code::SchemaMismatch, "missing parent formula");
  }
  if (rule_kind(app.rule) == RuleKind::Inference) {
    if (app.direction && *app.direction == Direction::Backward) {
      return fail(ValidationResult::Code::SchemaMismatch,
                  std::string(rule_name(app.rule)) + " is an inference rule and only applies forward");
    }
    return validate_inference(app);
  }
  return validate_replacement(app);
}

std::vector<Formula> AdditionPool::disjuncts() const {
  std::vector<Formula> out;
  std::unordered_set<Formula, FormulaHash> seen;
  for (const auto& name : signature) {
    Formula a = Formula::atom(name);
    if (seen.insert(a).second) out.push_back(a);
  }
  if (conclusion) {
    for (auto& s : subformulas(*conclusion)) {
      if (seen.insert(s).second) out.push_back(s);
    }
  }
  return out;
}

namespace {

class Collector {
public:
  Collector(const EnumLimits& limits, Enumeration& out) : limits_(limits), out_(out) {}

  // Returns false once the application cap is hit.
  bool add(RuleApplication app, std::vector<std::size_t> indices) {
    if (out_.truncated) return false;
    if (app.result.length() > limits_.max_result_length) return true;
    if (out_.applications.size() >= limits_.max_applications) {
      out_.truncated = true;
      return false;
    }
    out_.applications.push_back({std::move(app), std::move(indices)});
    return true;
  }

  bool full() const { return out_.truncated; }

private:
  const EnumLimits& limits_;
  Enumeration& out_;
};

RuleApplication inference(RuleId rule, std::vector<Formula> parents, Formula result) {
  RuleApplication app;
  app.rule = rule;
  app.parents = std::move(parents);
  app.result = std::move(result);
  return app;
}

}  // namespace

Enumeration enumerate_applications(const std::vector<Formula>& known, const AdditionPool& pool,
                                   const EnumLimits& limits) {
  Enumeration out;
  Collector sink(limits, out);
  const std::size_t n = known.size();
  const auto disjuncts = pool.disjuncts();

  for (RuleId rule : kAllRules) {
    if (sink.full()) break;
    switch (rule) {
      case RuleId::MP:
        for (std::size_t i = 0; i < n && !sink.full(); ++i) {
          if (!known[i].is_implies()) continue;
          for (std::size_t j = 0; j < n; ++j) {
            if (known[j] == known[i].left() &&
                !sink.add(inference(rule, {known[i], known[j]}, known[i].right()), {i, j}))
              break;
          }
        }
        break;
      case RuleId::MT:
        for (std::size_t i = 0; i < n && !sink.full(); ++i) {
          if (!known[i].is_implies()) continue;
          for (std::size_t j = 0; j < n; ++j) {
            if (known[j].is_not() && known[j].operand() == known[i].right() &&
                !sink.add(inference(rule, {known[i], known[j]}, Formula::negation(known[i].left())), {i, j}))
              break;
          }
        }
        break;
      case RuleId::DS:
        for (std::size_t i = 0; i < n && !sink.full(); ++i) {
          if (!known[i].is_or()) continue;
          for (std::size_t j = 0; j < n; ++j) {
            if (known[j].is_not() && known[j].operand() == known[i].left() &&
                !sink.add(inference(rule, {known[i], known[j]}, known[i].right()), {i, j}))
              break;
          }
        }
        break;
      case RuleId::HS:
        for (std::size_t i = 0; i < n && !sink.full(); ++i) {
          if (!known[i].is_implies()) continue;
          for (std::size_t j = 0; j < n; ++j) {
            if (known[j].is_implies() && known[j].left() == known[i].right() &&
                !sink.add(inference(rule, {known[i], known[j]},
                                    Formula::implication(known[i].left(), known[j].right())),
                          {i, j}))
              break;
          }
        }
        break;
      case RuleId::Simp:
        for (std::size_t i = 0; i < n; ++i) {
          if (known[i].is_and() && !sink.add(inference(rule, {known[i]}, known[i].left()), {i})) break;
        }
        break;
      case RuleId::Conj:
        for (std::size_t i = 0; i < n && !sink.full(); ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            if (!sink.add(inference(rule, {known[i], known[j]}, Formula::conjunction(known[i], known[j])), {i, j}))
              break;
          }
        }
        break;
      case RuleId::Add:
        for (std::size_t i = 0; i < n && !sink.full(); ++i) {
          for (const auto& d : disjuncts) {
            if (!sink.add(inference(rule, {known[i]}, Formula::disjunction(known[i], d)), {i})) break;
            if (!sink.add(inference(rule, {known[i]}, Formula::disjunction(d, known[i])), {i})) break;
          }
        }
        break;
      case RuleId::CD:
        for (std::size_t i = 0; i < n && !sink.full(); ++i) {
          if (!known[i].is_implies()) continue;
          for (std::size_t j = 0; j < n && !sink.full(); ++j) {
            if (!known[j].is_implies()) continue;
            Formula need = Formula::disjunction(known[i].left(), known[j].left());
            for (std::size_t k = 0; k < n; ++k) {
              if (known[k] == need &&
                  !sink.add(inference(rule, {known[i], known[j], known[k]},
                                      Formula::disjunction(known[i].right(), known[j].right())),
                            {i, j, k}))
                break;
            }
          }
        }
        break;
      case RuleId::Contra:
        for (std::size_t i = 0; i < n && !sink.full(); ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            if (known[j].is_not() && known[j].operand() == known[i] &&
                !sink.add(inference(rule, {known[i], known[j]}, Formula::falsum()), {i, j}))
              break;
          }
        }
        break;
      default:  // replacement rules
        for (std::size_t i = 0; i < n && !sink.full(); ++i) {
          for (const auto& site : all_sites(known[i])) {
            if (sink.full()) break;
            const Formula* sub = subformula_at(known[i], site);
            for (Direction d : {Direction::Forward, Direction::Backward}) {
              auto rewritten = rewrite_root(rule, d, *sub);
              if (!rewritten) continue;
              RuleApplication app;
              app.rule = rule;
              app.parents = {known[i]};
              app.result = replace_at(known[i], site, *rewritten);
              app.site = site;
              app.direction = d;
              if (!sink.add(std::move(app), {i})) break;
            }
          }
        }
        break;
    }
  }
  return out;
}

}  // namespace logichint

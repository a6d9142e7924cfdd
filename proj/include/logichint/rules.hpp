#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "logichint/formula.hpp"

namespace logichint {

/// Rule identifiers in canonical enumeration order.
enum class RuleId : std::uint8_t { MP, MT, DS, HS, Simp, Conj, Add, CD, Com, DeM, Impl, DN, CP, Contra };

enum class RuleKind : std::uint8_t { Inference, Replacement };

enum class Direction : std::uint8_t { Forward, Backward };

inline constexpr std::array<RuleId, 14> kAllRules = {
    RuleId::MP,  RuleId::MT,  RuleId::DS,   RuleId::HS,   RuleId::Simp, RuleId::Conj, RuleId::Add,
    RuleId::CD,  RuleId::Com, RuleId::DeM,  RuleId::Impl, RuleId::DN,   RuleId::CP,   RuleId::Contra};

RuleKind rule_kind(RuleId rule);
/// Number of parents the rule consumes (1, 2, or 3 for CD).
std::size_t rule_arity(RuleId rule);
std::string_view rule_name(RuleId rule);
/// Long display name ("Modus Ponens").
std::string_view rule_title(RuleId rule);
std::optional<RuleId> rule_from_name(std::string_view name);
std::string_view direction_name(Direction d);
std::optional<Direction> direction_from_name(std::string_view name);

struct RuleApplication {
  RuleId rule = RuleId::MP;
  std::vector<Formula> parents;
  Formula result;
  /// Replacement rules only. Unset means "any site".
  std::optional<SitePath> site;
  /// Replacement rules only. Unset means "either direction".
  std::optional<Direction> direction;
};

struct ValidationResult {
  enum class Code { Ok, ArityMismatch, InvalidSite, SchemaMismatch };
  Code code = Code::Ok;
  std::string diagnosis;
  /// For replacement rules, the site and direction that matched.
  std::optional<SitePath> matched_site;
  std::optional<Direction> matched_direction;

  bool ok() const { return code == Code::Ok; }
  explicit operator bool() const { return ok(); }
};

ValidationResult validate_application(const RuleApplication& app);

/// Rewrites `target` (the whole formula) with a replacement rule in one
/// direction. Returns nullopt when the schema does not match.
std::optional<Formula> rewrite_root(RuleId rule, Direction dir, const Formula& target);

struct EnumLimits {
  std::size_t max_result_length = 25;
  std::size_t max_applications = 20000;
};

/// Where Addition may draw its new disjunct from.
struct AdditionPool {
  std::set<std::string> signature;
  std::optional<Formula> conclusion;

  std::vector<Formula> disjuncts() const;
};

struct EnumeratedApplication {
  RuleApplication app;
  /// Indices into the `known` vector, in parent order.
  std::vector<std::size_t> parent_indices;
};

struct Enumeration {
  std::vector<EnumeratedApplication> applications;
  bool truncated = false;
};

/// All rule applications over `known` in canonical order (rule id, parent
/// indices, site, direction). Results longer than the limit are skipped.
Enumeration enumerate_applications(const std::vector<Formula>& known, const AdditionPool& pool,
                                   const EnumLimits& limits = {});

}  // namespace logichint

#include "logichint/pss.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace logichint {

namespace {

std::string_view kind_name(LogEvent::Kind kind) {
  switch (kind) {
    case LogEvent::Kind::Derive: return "derive";
    case LogEvent::Kind::Delete: return "delete";
    case LogEvent::Kind::HintRequest: return "hint_request";
  }
  return "?";
}

double event_time(const Json& j, std::size_t index) {
  auto it = j.find("t");
  if (it == j.end()) return 0.0;
  if (!it->is_number()) throw LogError("event " + std::to_string(index) + ": \"t\" must be a number", index);
  return it->get<double>();
}

std::string site_text(const SitePath& site) {
  if (site.empty()) return "root";
  std::string out;
  for (std::size_t i = 0; i < site.size(); ++i) {
    if (i) out += '.';
    out += std::to_string(site[i]);
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::size_t parse_index(std::string_view digits, std::string_view line) {
  if (digits.empty()) throw std::invalid_argument("missing statement number in: " + std::string(line));
  std::size_t n = 0;
  for (char c : digits) {
    if (c < '0' || c > '9') throw std::invalid_argument("bad statement number in: " + std::string(line));
    n = n * 10 + static_cast<std::size_t>(c - '0');
  }
  return n;
}

}  // namespace

Json start_event_json(const Problem& problem, double t, bool embed_problem) {
  Json j{{"event", "start"}, {"problem_id", problem.id}, {"t", t}};
  if (embed_problem) j["problem"] = problem_to_json(problem);
  return j;
}

Json event_to_json(const LogEvent& event) {
  Json j{{"event", std::string(kind_name(event.kind))}};
  switch (event.kind) {
    case LogEvent::Kind::Derive: {
      Json step = step_to_json(event.step);
      step.erase("step");
      for (auto& [k, v] : step.items()) j[k] = v;
      break;
    }
    case LogEvent::Kind::Delete: j["step"] = event.target; break;
    case LogEvent::Kind::HintRequest: break;
  }
  j["t"] = event.t;
  for (auto& [k, v] : event.extra.items()) {
    if (!j.contains(k)) j[k] = v;
  }
  return j;
}

LogEvent event_from_json(const Json& j, std::size_t event_index) {
  auto fail = [&](const std::string& msg) { return LogError("event " + std::to_string(event_index) + ": " + msg, event_index); };
  if (!j.is_object()) throw fail("must be a JSON object");
  auto kind = j.find("event");
  if (kind == j.end() || !kind->is_string()) throw fail("missing \"event\" field");
  LogEvent e;
  e.t = event_time(j, event_index);
  static const std::set<std::string> known{"event", "t", "formula", "rule", "parents", "site", "direction", "step"};
  for (auto& [k, v] : j.items()) {
    if (!known.count(k)) e.extra[k] = v;
  }
  const std::string name = kind->get<std::string>();
  if (name == "derive") {
    e.kind = LogEvent::Kind::Derive;
    try {
      e.step = step_from_json(j, 0);
    } catch (const std::exception& ex) {
      throw fail(ex.what());
    }
  } else if (name == "delete") {
    e.kind = LogEvent::Kind::Delete;
    auto it = j.find("step");
    if (it == j.end() || !it->is_number_unsigned()) throw fail("delete needs a positive \"step\" number");
    e.target = it->get<std::size_t>();
  } else if (name == "hint_request") {
    e.kind = LogEvent::Kind::HintRequest;
  } else {
    throw fail("unknown event \"" + name + "\"");
  }
  return e;
}

InteractionLog parse_event_log(std::istream& in) {
  InteractionLog log;
  std::string line;
  std::size_t line_no = 0;
  bool started = false;
  double last_t = 0.0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::size_t index = log.events.size();
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error&) {
      throw LogError("line " + std::to_string(line_no) + ": not valid JSON", index, line_no);
    }
    if (!started) {
      if (!j.is_object() || j.value("event", "") != "start") {
        throw LogError("line " + std::to_string(line_no) + ": log must begin with a start event", 0, line_no);
      }
      auto id = j.find("problem_id");
      if (id == j.end() || !id->is_string()) {
        throw LogError("line " + std::to_string(line_no) + ": start event needs \"problem_id\"", 0, line_no);
      }
      log.problem_id = id->get<std::string>();
      if (auto p = j.find("problem"); p != j.end()) {
        try {
          log.problem = problem_from_json(*p);
        } catch (const std::exception& ex) {
          throw LogError("line " + std::to_string(line_no) + ": " + ex.what(), 0, line_no);
        }
      }
      last_t = j.value("t", 0.0);
      started = true;
      continue;
    }
    LogEvent e;
    try {
      e = event_from_json(j, index);
    } catch (const LogError& ex) {
      throw LogError("line " + std::to_string(line_no) + ": " + ex.what(), index, line_no);
    }
    if (e.t < last_t) {
      throw LogError("line " + std::to_string(line_no) + ": event " + std::to_string(index) +
                         " is earlier than the one before it",
                     index, line_no);
    }
    last_t = e.t;
    log.events.push_back(std::move(e));
  }
  if (!started) throw LogError("empty log: no start event", 0, 0);
  return log;
}

InteractionLog read_event_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse_event_log(in);
}

void write_event_log(std::ostream& out, const InteractionLog& log) {
  Json start{{"event", "start"}, {"problem_id", log.problem_id}};
  if (log.problem) start["problem"] = problem_to_json(*log.problem);
  out << start.dump() << '\n';
  for (const auto& e : log.events) out << event_to_json(e).dump() << '\n';
}

void apply_event(std::vector<ProofStep>& derived, const Problem& problem, const LogEvent& event,
                 std::size_t event_index) {
  switch (event.kind) {
    case LogEvent::Kind::HintRequest: return;
    case LogEvent::Kind::Derive: {
      for (const auto& ref : event.step.parents) {
        bool ok = ref.kind == ParentRef::Kind::Premise
                      ? ref.index >= 1 && ref.index <= problem.premises.size()
                      : ref.index >= 1 && ref.index <= derived.size();
        if (!ok) {
          throw LogError("event " + std::to_string(event_index) + ": unresolvable reference " + to_string(ref),
                         event_index);
        }
      }
      ProofStep s = event.step;
      s.index = derived.size() + 1;
      derived.push_back(std::move(s));
      return;
    }
    case LogEvent::Kind::Delete: {
      if (event.target < 1 || event.target > derived.size()) {
        throw LogError("event " + std::to_string(event_index) + ": cannot delete S" + std::to_string(event.target),
                       event_index);
      }
      std::vector<bool> removed(derived.size() + 1, false);
      removed[event.target] = true;
      for (std::size_t k = event.target + 1; k <= derived.size(); ++k) {
        for (const auto& ref : derived[k - 1].parents) {
          if (ref.kind == ParentRef::Kind::Step && ref.index >= 1 && removed[ref.index]) removed[k] = true;
        }
      }
      std::vector<std::size_t> renumber(derived.size() + 1, 0);
      std::vector<ProofStep> kept;
      for (std::size_t k = 1; k <= derived.size(); ++k) {
        if (removed[k]) continue;
        renumber[k] = kept.size() + 1;
        kept.push_back(derived[k - 1]);
      }
      for (auto& s : kept) {
        s.index = renumber[s.index];
        for (auto& ref : s.parents) {
          if (ref.kind == ParentRef::Kind::Step && ref.index >= 1) ref.index = renumber[ref.index];
        }
      }
      derived = std::move(kept);
      return;
    }
  }
}

std::vector<Pss> extract_states(const InteractionLog& log, const Problem& problem) {
  std::vector<Pss> out;
  std::set<std::string> seen;
  std::vector<ProofStep> derived;
  auto emit = [&](std::size_t order, std::optional<double> t) {
    Pss s{problem, derived, order, t};
    if (seen.insert(render(s)).second) out.push_back(std::move(s));
  };
  if (log.events.empty()) {
    emit(0, std::nullopt);
    return out;
  }
  for (std::size_t i = 0; i < log.events.size(); ++i) {
    apply_event(derived, problem, log.events[i], i);
    emit(i + 1, log.events[i].t);
  }
  return out;
}

std::vector<Pss> extract_states(const InteractionLog& log) {
  if (!log.problem) throw LogError("log for '" + log.problem_id + "' does not embed its problem", 0);
  return extract_states(log, *log.problem);
}

std::vector<ProofStep> replay(const InteractionLog& log, const Problem& problem) {
  std::vector<ProofStep> derived;
  for (std::size_t i = 0; i < log.events.size(); ++i) apply_event(derived, problem, log.events[i], i);
  return derived;
}

std::string render(const Pss& state) {
  std::string out = "Givens:\n";
  for (std::size_t i = 0; i < state.problem.premises.size(); ++i) {
    out += "P" + std::to_string(i + 1) + ": " + to_string(state.problem.premises[i]) + "\n";
  }
  if (!state.derived.empty()) {
    out += "Derived:\n";
    for (std::size_t i = 0; i < state.derived.size(); ++i) {
      const ProofStep& s = state.derived[i];
      out += "S" + std::to_string(i + 1) + ": " + to_string(s.formula) + " [" + std::string(rule_name(s.rule));
      for (std::size_t k = 0; k < s.parents.size(); ++k) {
        out += (k == 0 ? " from " : ", ") + to_string(s.parents[k]);
      }
      if (s.site) out += "; site " + site_text(*s.site);
      if (s.direction) out += "; " + std::string(direction_name(*s.direction));
      out += "]\n";
    }
  }
  out += "Goal: " + to_string(state.problem.conclusion) + "\n";
  return out;
}

PssText render_text(const Pss& state) { return {render(state), state}; }

Pss parse_pss_text(std::string_view text) {
  Pss state;
  enum class Section { None, Givens, Derived, Done } section = Section::None;
  bool have_goal = false;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.empty()) continue;
    if (line == "Givens:") {
      section = Section::Givens;
      continue;
    }
    if (line == "Derived:") {
      section = Section::Derived;
      continue;
    }
    if (line.substr(0, 5) == "Goal:") {
      state.problem.conclusion = parse_formula(line.substr(5));
      have_goal = true;
      section = Section::Done;
      continue;
    }
    auto colon = line.find(':');
    if (colon == std::string_view::npos || section == Section::None || section == Section::Done) {
      throw std::invalid_argument("unexpected line: " + std::string(line));
    }
    std::string_view label = line.substr(0, colon);
    std::string_view body = trim(line.substr(colon + 1));
    if (section == Section::Givens) {
      if (label.empty() || label[0] != 'P' ||
          parse_index(label.substr(1), line) != state.problem.premises.size() + 1) {
        throw std::invalid_argument("expected premise P" + std::to_string(state.problem.premises.size() + 1));
      }
      state.problem.premises.push_back(parse_formula(body));
      continue;
    }
    if (label.empty() || label[0] != 'S' || parse_index(label.substr(1), line) != state.derived.size() + 1) {
      throw std::invalid_argument("expected step S" + std::to_string(state.derived.size() + 1));
    }
    auto open = body.rfind('[');
    if (open == std::string_view::npos || body.back() != ']') {
      throw std::invalid_argument("step without justification: " + std::string(line));
    }
    ProofStep step;
    step.index = state.derived.size() + 1;
    step.formula = parse_formula(body.substr(0, open));
    std::string_view just = body.substr(open + 1, body.size() - open - 2);
    std::vector<std::string_view> parts;
    for (std::size_t start = 0;;) {
      auto semi = just.find(';', start);
      parts.push_back(trim(just.substr(start, semi - start)));
      if (semi == std::string_view::npos) break;
      start = semi + 1;
    }
    std::string_view head = parts[0];
    auto from = head.find(" from ");
    auto rule = rule_from_name(trim(head.substr(0, from)));
    if (!rule) throw std::invalid_argument("unknown rule in: " + std::string(line));
    step.rule = *rule;
    if (from != std::string_view::npos) {
      std::string_view refs = head.substr(from + 6);
      for (std::size_t start = 0;;) {
        auto comma = refs.find(',', start);
        auto ref = parse_parent_ref(trim(refs.substr(start, comma - start)));
        if (!ref) throw std::invalid_argument("bad reference in: " + std::string(line));
        step.parents.push_back(*ref);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
    }
    for (std::size_t k = 1; k < parts.size(); ++k) {
      if (parts[k].substr(0, 5) == "site ") {
        std::string_view path = parts[k].substr(5);
        SitePath site;
        if (path != "root") {
          for (std::size_t start = 0;;) {
            auto dot = path.find('.', start);
            site.push_back(parse_index(path.substr(start, dot - start), line));
            if (dot == std::string_view::npos) break;
            start = dot + 1;
          }
        }
        step.site = std::move(site);
      } else if (auto d = direction_from_name(parts[k])) {
        step.direction = *d;
      } else {
        throw std::invalid_argument("unknown annotation '" + std::string(parts[k]) + "'");
      }
    }
    state.derived.push_back(std::move(step));
  }
  if (!have_goal) throw std::invalid_argument("state text has no Goal line");
  return state;
}

Json pss_record_json(const Pss& state) {
  Json j = pss_to_json(state);
  Json verdicts = Json::array();
  for (const auto& v : check_state(state)) {
    Json entry{{"verdict", std::string(step_verdict_name(v.code))}};
    if (!v.valid()) entry["reason"] = v.reason;
    verdicts.push_back(std::move(entry));
  }
  j["verdicts"] = std::move(verdicts);
  Json redundant = Json::array();
  for (std::size_t i : redundant_steps(state)) redundant.push_back("S" + std::to_string(i + 1));
  j["redundant"] = std::move(redundant);
  j["rendered"] = render(state);
  return j;
}

Pss pss_from_record_json(const Json& j) { return pss_from_json(j); }

std::vector<Pss> read_pss_file(const std::filesystem::path& path) {
  Json j = read_json_file(path);
  if (!j.is_array()) throw SchemaError(path.string() + ": expected an array of states");
  std::vector<Pss> out;
  for (const auto& record : j) out.push_back(pss_from_record_json(record));
  return out;
}

void write_pss_file(const std::filesystem::path& path, const std::vector<Pss>& states) {
  Json arr = Json::array();
  for (const auto& s : states) arr.push_back(pss_record_json(s));
  write_json_file(path, arr);
}

}  // namespace logichint

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "logichint/proof.hpp"

namespace logichint {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchemaTag = "logichint/v1";

/// Structurally invalid document (missing field, wrong type, bad reference).
class SchemaError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

Json problem_to_json(const Problem& problem);
Problem problem_from_json(const Json& j);

Json step_to_json(const ProofStep& step);
/// `position` is the 1-based index assigned when the document omits "step".
ProofStep step_from_json(const Json& j, std::size_t position);

Json proof_to_json(const Proof& proof);
Proof proof_from_json(const Json& j);

Json pss_to_json(const Pss& state);
Pss pss_from_json(const Json& j);

Json hint_to_json(const Hint& hint);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

/// Every `*.json` problem in a directory, sorted by id.
std::vector<Problem> load_problem_dir(const std::filesystem::path& dir);
const Problem* find_problem(const std::vector<Problem>& problems, std::string_view id);

}  // namespace logichint

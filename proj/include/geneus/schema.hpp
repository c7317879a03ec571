#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "geneus/json.hpp"
#include "geneus/promptkit.hpp"

// Output data contract: the generated artifact types, a tolerant reader for
// model replies, a rule-based validator, and the canonical JSON form.
//
// Canonical keys are lowercase (story, deliverables, ...). The historical
// "User Story"/"Deliverables" spellings are accepted as aliases on input and
// rewritten to the canonical keys on serialization.

namespace geneus::schema {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoJsonFound : ParseError {
  NoJsonFound() : ParseError("reply contains no JSON value") {}
};
struct MalformedJson : ParseError {
  std::size_t position;
  MalformedJson(std::size_t pos, const std::string& detail)
      : ParseError("malformed JSON near byte " + std::to_string(pos) + ": " +
                   detail),
        position(pos) {}
};

/// Pulls the outermost balanced JSON object or array out of a model reply:
/// code fences are ignored, surrounding prose is dropped, and one
/// normalization pass removes trailing commas. Throws NoJsonFound or
/// MalformedJson.
Json parse_llm_json(const std::string& raw);

// ---------------- artifact types ----------------

struct Deliverable {
  std::string key;
  std::string definition_of_done;
  std::vector<std::string> criteria;
};

/// Keys stay in insertion order; duplicates are rejected.
struct DeliverableSet {
  std::vector<Deliverable> items;

  const Deliverable* find(const std::string& key) const;
  bool insert(Deliverable d);
  std::vector<std::string> keys() const;
  bool empty() const { return items.empty(); }
};

/// The five deliverables every generated story is expected to carry.
const std::vector<std::string>& default_deliverable_keys();

struct UserStory {
  std::string story;
  std::string who;
  std::string what;
  std::string why;
  std::vector<std::string> requirement_refs;
  DeliverableSet deliverables;
};

enum class TestKind { functional, negative, boundary };
const char* test_kind_name(TestKind k);

struct TestCase {
  std::string id;
  std::string story_ref;
  std::string title;
  std::vector<std::string> preconditions;
  std::vector<std::string> steps;
  std::string expected;
  TestKind kind{TestKind::functional};
};

enum class RequirementKind { functional, nonfunctional };
const char* requirement_kind_name(RequirementKind k);

struct Requirement {
  std::string id;
  std::string text;
  RequirementKind kind{RequirementKind::functional};
};

struct RequirementSet {
  std::vector<Requirement> requirements;
  /// SHA-256 of the source text the set was extracted from.
  std::string source_digest;

  std::vector<std::string> ids() const;
};

struct RunMetadata {
  std::string model_id;
  double temperature{0.0};
  std::string started_at;
  std::string finished_at;
  std::map<std::string, std::string> template_versions;
  std::string source_digest;
  std::string run_id;  // set at persistence time, empty before
};

struct GenerationResult {
  RequirementSet requirements;
  std::vector<UserStory> stories;
  std::vector<TestCase> test_cases;
  std::vector<promptkit::RaTTrace> traces;  // persisted separately, not in the envelope
  RunMetadata run_metadata;
};

// ---------------- validation ----------------

struct Violation {
  std::string path;     // e.g. $.stories[0].deliverables.unit_tests.criteria
  std::string rule_id;  // e.g. required-field, empty-criteria, invalid-kind
  std::string message;
};

/// Validates a parsed envelope {requirements, stories, test_cases, metadata}.
/// Empty vector means the document satisfies the contract.
std::vector<Violation> validate_result(const Json& parsed);

/// Validates one story object (alias-aware). `known_requirement_ids` enables
/// the ref-unknown check; empty list disables it.
std::vector<Violation> validate_story(
    const Json& story, const std::string& path_prefix,
    const std::vector<std::string>& known_requirement_ids = {});

// ---------------- conversions ----------------

Json to_json(const Requirement& r);
Json to_json(const UserStory& s);
Json to_json(const TestCase& t);
Json to_json(const RunMetadata& m);
/// The canonical envelope. Traces are excluded; they belong to transcripts.
Json result_to_json(const GenerationResult& r);

Requirement requirement_from_json(const Json& j, std::size_t fallback_index);
UserStory story_from_json(const Json& j);
TestCase test_case_from_json(const Json& j, std::size_t fallback_index);
RunMetadata metadata_from_json(const Json& j);
GenerationResult result_from_json(const Json& j);

/// Canonical serialization: UTF-8, 4-space indent, trailing newline, key
/// order fixed by the conversion functions above.
std::string serialize(const GenerationResult& r);

/// When the story sentence has the "As a X, I want Y, so that Z" shape,
/// fills empty who/what/why fields from it. Otherwise leaves them alone for
/// the quality module to flag.
void derive_who_what_why(UserStory& story);

}  // namespace geneus::schema

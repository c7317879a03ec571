#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <string>

#include "geneus/json.hpp"
#include "geneus/schema.hpp"
#include "support/test_util.hpp"

using namespace geneus;

namespace {

// The published sample story for the patient-records system, kept verbatim
// as the frozen golden input (wrapped lines joined with single spaces).
const char* kGoldenStory = R"JSON(
{
    "User Story": "The system should allow clinicians to create, edit, and view patient records.",
    "Deliverables": {
        "architecture_design": {
            "definition_of_done": "Architecture design document created and reviewed by the development team. Design aligns with system requirements and best practices.",
            "criteria": [
                "Document created and stored in a designated location",
                "Design reviewed and approved by development team",
                "Design aligns with system requirements and scalability needs",
                "Design follows best practices and coding standards"
            ]
        },
        "database_schema_design": {
            "definition_of_done": "Database schema designed and implemented for storing patient records.",
            "criteria": [
                "Schema design document created and stored in a designated location",
                "Schema implemented in the database",
                "Schema optimized for efficient data storage and retrieval",
                "Schema reviewed and approved by database administrators"
            ]
        },
        "unit_tests": {
            "definition_of_done": "Unit tests written and executed for patient record management functionality.",
            "criteria": [
                "Unit test cases written to cover all aspects of patient record management",
                "Tests executed and passed successfully",
                "Code coverage of unit tests meets defined threshold",
                "Unit tests integrated into the automated testing framework"
            ]
        },
        "user_training_documentation": {
            "definition_of_done": "Comprehensive documentation created on how to create, edit, and view patient records.",
            "criteria": [
                "Documentation covers all functionalities related to patient record management",
                "Documentation is clear, concise, and easy to understand",
                "Documentation reviewed and approved by stakeholders",
                "Documentation accessible to all users through a centralized location"
            ]
        },
        "production_support_plan": {
            "definition_of_done": "Plan developed for supporting patient record management in a production environment.",
            "criteria": [
                "Plan outlines procedures for monitoring and maintaining patient records",
                "Plan includes strategies for handling system failures and data backups",
                "Plan reviewed and approved by operations team",
                "Plan integrated into the overall support and maintenance framework"
            ]
        }
    }
}
)JSON";

Json golden_envelope() {
  Json envelope;
  envelope["requirements"] = Json::array();
  envelope["stories"] = Json::array({Json::parse(kGoldenStory)});
  envelope["test_cases"] = Json::array();
  envelope["metadata"] = Json::object();
  return envelope;
}

}  // namespace

TEST_CASE("fenced replies parse to their payload") {
  Json j = schema::parse_llm_json("```json\n[{\"a\": 1}]\n```");
  REQUIRE(j.is_array());
  CHECK(j[0]["a"] == 1);
}

TEST_CASE("surrounding prose is dropped") {
  Json j = schema::parse_llm_json("Here is the output: {\"a\":1}");
  REQUIRE(j.is_object());
  CHECK(j["a"] == 1);
}

TEST_CASE("unbalanced JSON is malformed") {
  CHECK_THROWS_AS(schema::parse_llm_json("{\"a\": "), schema::MalformedJson);
}

TEST_CASE("pure prose has no JSON") {
  CHECK_THROWS_AS(schema::parse_llm_json("I could not produce a result."),
                  schema::NoJsonFound);
}

TEST_CASE("one trailing-comma pass is tolerated") {
  Json j = schema::parse_llm_json("{\"items\": [1, 2, ], \"k\": \"v\",}");
  CHECK(j["items"].size() == 2);
  CHECK(j["k"] == "v");
}

TEST_CASE("braces inside strings do not confuse the span scanner") {
  Json j = schema::parse_llm_json("text {\"a\": \"closing } inside\"} trailing");
  CHECK(j["a"] == "closing } inside");
}

TEST_CASE("the published sample validates with zero violations") {
  auto violations = schema::validate_result(golden_envelope());
  for (const auto& v : violations) {
    CAPTURE(v.path);
    CAPTURE(v.rule_id);
    CAPTURE(v.message);
    CHECK(false);
  }
  CHECK(violations.empty());
}

TEST_CASE("the published sample round-trips preserving deliverable key order") {
  auto result = schema::result_from_json(golden_envelope());
  REQUIRE(result.stories.size() == 1);
  CHECK(result.stories[0].story ==
        "The system should allow clinicians to create, edit, and view patient "
        "records.");
  CHECK(result.stories[0].deliverables.keys() ==
        std::vector<std::string>{"architecture_design", "database_schema_design",
                                 "unit_tests", "user_training_documentation",
                                 "production_support_plan"});
  std::string once = schema::serialize(result);
  auto reparsed = schema::result_from_json(Json::parse(once));
  CHECK(schema::serialize(reparsed) == once);
  CHECK(schema::validate_result(Json::parse(once)).empty());
}

TEST_CASE("canonical keys replace the alias spellings on output") {
  auto result = schema::result_from_json(golden_envelope());
  std::string out = schema::serialize(result);
  CHECK(testsupport::contains(out, "\"story\""));
  CHECK(testsupport::contains(out, "\"deliverables\""));
  CHECK_FALSE(testsupport::contains(out, "\"User Story\""));
  CHECK_FALSE(testsupport::contains(out, "\"Deliverables\""));
}

TEST_CASE("empty criteria surface at the exact JSON path") {
  Json canonical =
      Json::parse(schema::serialize(schema::result_from_json(golden_envelope())));
  canonical["stories"][0]["deliverables"]["unit_tests"]["criteria"] = Json::array();
  auto violations = schema::validate_result(canonical);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].path == "$.stories[0].deliverables.unit_tests.criteria");
  CHECK(violations[0].rule_id == "empty-criteria");
}

TEST_CASE("a missing story sentence is a required-field violation") {
  Json envelope = golden_envelope();
  envelope["stories"][0].erase("User Story");
  auto violations = schema::validate_result(envelope);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].rule_id == "required-field");
  CHECK(violations[0].path == "$.stories[0].story");
}

TEST_CASE("deliverables as a list are rejected") {
  Json envelope = golden_envelope();
  envelope["stories"][0]["Deliverables"] = Json::array({"architecture_design"});
  auto violations = schema::validate_result(envelope);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].rule_id == "wrong-type");
}

TEST_CASE("deliverable keys must be lower snake case") {
  Json envelope = golden_envelope();
  Json d = envelope["stories"][0]["Deliverables"]["unit_tests"];
  envelope["stories"][0]["Deliverables"].erase("unit_tests");
  envelope["stories"][0]["Deliverables"]["Unit Tests"] = d;
  auto violations = schema::validate_result(envelope);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].rule_id == "bad-key");
}

TEST_CASE("unknown requirement references are flagged") {
  Json envelope = golden_envelope();
  envelope["requirements"] = Json::array(
      {{{"id", "R1"}, {"text", "The system shall exist."}, {"kind", "functional"}}});
  envelope["stories"][0]["requirement_refs"] = Json::array({"R1", "R9"});
  auto violations = schema::validate_result(envelope);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].rule_id == "ref-unknown");
  CHECK(violations[0].path == "$.stories[0].requirement_refs[1]");
}

TEST_CASE("duplicate requirement ids are flagged") {
  Json envelope = golden_envelope();
  envelope["stories"] = Json::array();
  envelope["requirements"] = Json::array(
      {{{"id", "R1"}, {"text", "First."}, {"kind", "functional"}},
       {{"id", "R1"}, {"text", "Second."}, {"kind", "functional"}}});
  auto violations = schema::validate_result(envelope);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].rule_id == "duplicate-id");
}

TEST_CASE("invalid test kind is flagged") {
  Json envelope = golden_envelope();
  envelope["stories"] = Json::array();
  envelope["test_cases"] = Json::array({{{"id", "T1"},
                                         {"story_ref", "R1"},
                                         {"title", "t"},
                                         {"steps", Json::array({"do"})},
                                         {"expected", "done"},
                                         {"kind", "exploratory"}}});
  auto violations = schema::validate_result(envelope);
  bool found = false;
  for (const auto& v : violations) found = found || v.rule_id == "invalid-kind";
  CHECK(found);
}

TEST_CASE("an empty stories array is still a valid envelope") {
  schema::GenerationResult result;
  result.requirements.requirements.push_back(
      {"R1", "The system shall respond.", schema::RequirementKind::functional});
  result.test_cases.push_back({"T1", "R1", "Response check", {},
                               {"Send a request."}, "A response arrives.",
                               schema::TestKind::functional});
  std::string out = schema::serialize(result);
  Json parsed = Json::parse(out);
  CHECK(parsed["stories"].is_array());
  CHECK(parsed["stories"].empty());
  CHECK(schema::validate_result(parsed).empty());
}

TEST_CASE("serialization uses four-space indentation and ends with a newline") {
  std::mt19937 rng(99);
  auto result = testsupport::random_result(rng);
  std::string out = schema::serialize(result);
  CHECK(out.rfind("{\n    \"requirements\"", 0) == 0);
  CHECK(out.back() == '\n');
}

TEST_CASE("round-trip law holds on randomized valid results") {
  std::mt19937 rng(20240815);
  for (int i = 0; i < 100; ++i) {
    auto result = testsupport::random_result(rng);
    std::string once = schema::serialize(result);
    Json parsed = Json::parse(once);
    CHECK(schema::validate_result(parsed).empty());
    auto reread = schema::result_from_json(parsed);
    std::string twice = schema::serialize(reread);
    CHECK(twice == once);
  }
}

TEST_CASE("who what why derivation handles the canonical template") {
  schema::UserStory story;
  story.story = "As a clinician, I want to edit records so that data stays current.";
  schema::derive_who_what_why(story);
  CHECK(story.who == "clinician");
  CHECK(story.what == "to edit records");
  CHECK(story.why == "data stays current");
}

TEST_CASE("derivation leaves non-template sentences alone") {
  schema::UserStory story;
  story.story = "The system should allow clinicians to create records.";
  schema::derive_who_what_why(story);
  CHECK(story.who.empty());
  CHECK(story.what.empty());
  CHECK(story.why.empty());
}

TEST_CASE("derivation never overwrites supplied fields") {
  schema::UserStory story;
  story.story = "As a nurse, I want alerts, so that patients stay safe.";
  story.who = "charge nurse";
  schema::derive_who_what_why(story);
  CHECK(story.who == "charge nurse");
  CHECK(story.what == "alerts");
  CHECK(story.why == "patients stay safe");
}

TEST_CASE("default deliverable keys are the five published ones") {
  CHECK(schema::default_deliverable_keys() ==
        std::vector<std::string>{"architecture_design", "database_schema_design",
                                 "unit_tests", "user_training_documentation",
                                 "production_support_plan"});
}

TEST_CASE("deliverable sets reject duplicate keys") {
  schema::DeliverableSet set;
  CHECK(set.insert({"unit_tests", "done", {"c1"}}));
  CHECK_FALSE(set.insert({"unit_tests", "other", {"c2"}}));
  CHECK(set.items.size() == 1);
  CHECK(set.find("unit_tests")->definition_of_done == "done");
}

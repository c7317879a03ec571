#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "geneus/quality.hpp"
#include "geneus/schema.hpp"
#include "geneus/similarity.hpp"
#include "geneus/util.hpp"
#include "support/test_util.hpp"

using namespace geneus;

namespace {

schema::UserStory story_of(std::string sentence) {
  schema::UserStory s;
  s.story = std::move(sentence);
  return s;
}

schema::Deliverable full_deliverable(const std::string& key) {
  return {key, "Artifact " + key + " finished and reviewed.",
          {"Reviewed by the team", "Stored in the project space"}};
}

schema::UserStory complete_story() {
  schema::UserStory s;
  s.story = "As a user, I want to export reports, so that audits pass.";
  s.requirement_refs = {"R1"};
  for (const auto& key : schema::default_deliverable_keys()) {
    s.deliverables.insert(full_deliverable(key));
  }
  return s;
}

// The 20 duplicate-corpus stories: an exact pair at (3, 11) and a one-word
// variant pair at (7, 15), fillers everywhere else.
std::vector<schema::UserStory> duplicate_corpus() {
  static const char* kTwentyWords =
      "The monitor sends alert data when patient records change during clinic "
      "hours so staff review every incident log now quickly.";
  static const char* kTwentyWordsVariant =
      "The monitor sends alert data when patient records change during clinic "
      "hours so staff review every incident log now promptly.";
  static const char* kExact =
      "As a clinician, I want to archive discharge summaries, so that audits "
      "succeed.";
  static const char* kFillerNouns[] = {
      "billing",  "roster",   "triage",   "pharmacy", "imaging",  "lab",
      "referral", "intake",   "archive",  "transport", "catering", "housing",
      "payroll",  "training", "security", "cleaning"};

  std::vector<schema::UserStory> stories;
  std::size_t filler = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    if (i == 3 || i == 11) {
      stories.push_back(story_of(kExact));
    } else if (i == 7) {
      stories.push_back(story_of(kTwentyWords));
    } else if (i == 15) {
      stories.push_back(story_of(kTwentyWordsVariant));
    } else {
      std::string noun = kFillerNouns[filler];
      std::string digits = std::to_string(1000 + filler);
      ++filler;
      stories.push_back(story_of("Team " + digits + " coordinates the " + noun +
                                 " queue across region " + noun + "side."));
    }
  }
  return stories;
}

double pair_jaccard_oracle(const schema::UserStory& a, const schema::UserStory& b) {
  auto tokens = [](const schema::UserStory& s) {
    std::set<std::string> set;
    for (const auto& t : similarity::normalize_tokens(s.story + " " + s.what)) {
      set.insert(similarity::stem(t));
    }
    return set;
  };
  auto sa = tokens(a);
  auto sb = tokens(b);
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& t : sa) inter += sb.count(t);
  return double(inter) / double(sa.size() + sb.size() - inter);
}

}  // namespace

TEST_CASE("the canonical story template passes who what why") {
  auto outcome = quality::check_who_what_why(
      story_of("As a clinician, I want to edit records so that data stays current."));
  CHECK(outcome[0].passed);
  CHECK(outcome[1].passed);
  CHECK(outcome[2].passed);
}

TEST_CASE("the published sample sentence has who and what but no why") {
  auto outcome = quality::check_who_what_why(story_of(
      "The system should allow clinicians to create, edit, and view patient "
      "records."));
  CHECK(outcome[0].passed);
  CHECK(testsupport::contains(outcome[0].detail, "clinicians"));
  CHECK(outcome[1].passed);
  CHECK_FALSE(outcome[2].passed);
}

TEST_CASE("a bare imperative fails all three attribute checks") {
  auto outcome = quality::check_who_what_why(story_of("Improve performance."));
  CHECK_FALSE(outcome[0].passed);
  CHECK_FALSE(outcome[1].passed);
  CHECK_FALSE(outcome[2].passed);
}

TEST_CASE("explicit fields satisfy the attribute checks directly") {
  schema::UserStory s = story_of("Records must stay current.");
  s.who = "records clerk";
  s.what = "keep records current";
  s.why = "compliance";
  auto outcome = quality::check_who_what_why(s);
  CHECK(outcome[0].passed);
  CHECK(outcome[1].passed);
  CHECK(outcome[2].passed);
}

TEST_CASE("extra actor words extend the lexicon") {
  auto sentence = story_of("The radiologist should upload scans.");
  CHECK_FALSE(quality::check_who_what_why(sentence)[0].passed);
  CHECK(quality::check_who_what_why(sentence, {"radiologist"})[0].passed);
}

TEST_CASE("readability of the three-word sentence matches the formula") {
  // words=3, sentences=1, syllables=3:
  // 206.835 - 1.015*(3/1) - 84.6*(3/3) = 119.19
  CHECK(quality::readability_score("The cat sat.") ==
        doctest::Approx(119.19).epsilon(1e-4));
}

TEST_CASE("readability needs at least one word") {
  CHECK_THROWS_AS(quality::readability_score(""), quality::EmptyText);
  CHECK_THROWS_AS(quality::readability_score("?!."), quality::EmptyText);
}

TEST_CASE("readability is invariant under self-concatenation") {
  // Duplicating terminated text doubles words, sentences, and syllables
  // together, so both ratios and the score stay put.
  const std::string texts[] = {
      "The cat sat.",
      "Reports are generated monthly. Clinicians review them carefully!",
      "One single long sentence with several plain words in it.",
  };
  for (const auto& t : texts) {
    double once = quality::readability_score(t);
    double twice = quality::readability_score(t + " " + t);
    CHECK(once == doctest::Approx(twice).epsilon(1e-12));
  }

  // Without a terminator the sentence count stays clamped at one, so
  // duplication doubles words-per-sentence and the score must drop.
  const std::string run_on = "One single run-on sentence with several plain words";
  CHECK(quality::readability_score(run_on + " " + run_on) <
        quality::readability_score(run_on));
}

TEST_CASE("longer sentences lower the score when syllable ratio is fixed") {
  std::string sentence = "run";
  double previous = quality::readability_score(sentence + ".");
  for (int i = 0; i < 10; ++i) {
    sentence += " run";
    double score = quality::readability_score(sentence + ".");
    CHECK(score < previous);
    previous = score;
  }
}

TEST_CASE("the sample story with refs passes every specifiability rule") {
  schema::UserStory s = story_of(
      "The system should allow clinicians to create, edit, and view patient "
      "records.");
  s.requirement_refs = {"R1"};
  for (const auto& key : schema::default_deliverable_keys()) {
    s.deliverables.insert(full_deliverable(key));
  }
  for (const auto& check : quality::specifiability_check(s)) {
    CAPTURE(check.rule_id);
    CHECK(check.passed);
  }
}

TEST_CASE("empty criteria fail with a path detail") {
  schema::UserStory s = story_of("As a user, I want to search, so that time is saved.");
  s.requirement_refs = {"R1"};
  s.deliverables.insert({"unit_tests", "Tests written.", {}});
  auto checks = quality::specifiability_check(s);
  auto criteria = std::find_if(checks.begin(), checks.end(), [](const auto& c) {
    return c.rule_id == "criteria_present";
  });
  REQUIRE(criteria != checks.end());
  CHECK_FALSE(criteria->passed);
  CHECK(testsupport::contains(criteria->detail, "$.deliverables.unit_tests.criteria"));
}

TEST_CASE("a sixty-word run-on fails the unit size rule") {
  std::string sentence = "The system";
  for (int i = 0; i < 58; ++i) sentence += " then";
  sentence += ".";
  schema::UserStory s = story_of(sentence);
  s.requirement_refs = {"R1"};
  s.deliverables.insert(full_deliverable("unit_tests"));
  auto checks = quality::specifiability_check(s);
  auto size = std::find_if(checks.begin(), checks.end(), [](const auto& c) {
    return c.rule_id == "unit_size";
  });
  REQUIRE(size != checks.end());
  CHECK_FALSE(size->passed);
}

TEST_CASE("identical stories are duplicates at any threshold") {
  std::vector<schema::UserStory> stories = {
      story_of("As a user, I want exports, so that data moves."),
      story_of("As a user, I want exports, so that data moves.")};
  for (double threshold : {0.1, 0.5, 0.9, 1.0}) {
    auto pairs = quality::detect_duplicates(stories, threshold);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].first == 0);
    CHECK(pairs[0].second == 1);
    CHECK(pairs[0].similarity == 1.0);
  }
}

TEST_CASE("one-third similarity is not reported at 0.8") {
  // Token sets {a, b} vs {a, c}: intersection 1, union 3.
  std::vector<schema::UserStory> stories = {story_of("alpha beta"),
                                            story_of("alpha gamma")};
  CHECK(quality::detect_duplicates(stories, 0.8).empty());
  auto pairs = quality::detect_duplicates(stories, 0.3);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].similarity == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("duplicate threshold must be in (0, 1]") {
  std::vector<schema::UserStory> stories;
  CHECK_THROWS_AS(quality::detect_duplicates(stories, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(quality::detect_duplicates(stories, 1.5), std::invalid_argument);
}

TEST_CASE("the calibrated corpus yields exactly the two injected pairs") {
  auto stories = duplicate_corpus();
  auto pairs = quality::detect_duplicates(stories, 0.9);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].first == 3);
  CHECK(pairs[0].second == 11);
  CHECK(pairs[0].similarity == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pairs[1].first == 7);
  CHECK(pairs[1].second == 15);
  // 20-token sets sharing 19 tokens: 19 / 21.
  CHECK(pairs[1].similarity == doctest::Approx(19.0 / 21.0).epsilon(1e-12));

  for (const auto& p : pairs) {
    CHECK(p.similarity ==
          doctest::Approx(pair_jaccard_oracle(stories[p.first], stories[p.second]))
              .epsilon(1e-12));
  }
}

TEST_CASE("every reported similarity matches the brute-force oracle") {
  auto stories = duplicate_corpus();
  auto pairs = quality::detect_duplicates(stories, 0.05);
  std::size_t checked = 0;
  for (std::size_t i = 0; i < stories.size(); ++i) {
    for (std::size_t j = i + 1; j < stories.size(); ++j) {
      double oracle = pair_jaccard_oracle(stories[i], stories[j]);
      auto it = std::find_if(pairs.begin(), pairs.end(), [&](const auto& p) {
        return p.first == i && p.second == j;
      });
      if (it != pairs.end()) {
        CHECK(it->similarity == doctest::Approx(oracle).epsilon(1e-12));
        ++checked;
      } else {
        CHECK(oracle < 0.05);
      }
    }
  }
  CHECK(checked == pairs.size());
}

TEST_CASE("raising the threshold never adds pairs") {
  auto stories = duplicate_corpus();
  std::size_t previous = quality::detect_duplicates(stories, 0.05).size();
  for (double threshold : {0.2, 0.4, 0.6, 0.8, 0.9, 1.0}) {
    std::size_t count = quality::detect_duplicates(stories, threshold).size();
    CHECK(count <= previous);
    previous = count;
  }
}

TEST_CASE("permuting stories permutes the reported indices consistently") {
  auto stories = duplicate_corpus();
  std::vector<std::size_t> perm(stories.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::mt19937 rng(5);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<schema::UserStory> shuffled(stories.size());
  for (std::size_t i = 0; i < perm.size(); ++i) shuffled[perm[i]] = stories[i];

  auto base = quality::detect_duplicates(stories, 0.9);
  auto moved = quality::detect_duplicates(shuffled, 0.9);
  REQUIRE(base.size() == moved.size());
  auto as_pairs = [](const std::vector<quality::DuplicatePair>& in) {
    std::set<std::pair<std::size_t, std::size_t>> out;
    for (const auto& p : in) out.insert({p.first, p.second});
    return out;
  };
  std::set<std::pair<std::size_t, std::size_t>> expected;
  for (const auto& p : base) {
    std::size_t a = perm[p.first];
    std::size_t b = perm[p.second];
    expected.insert({std::min(a, b), std::max(a, b)});
  }
  CHECK(as_pairs(moved) == expected);
}

TEST_CASE("a fully passing story scores five in every category") {
  schema::GenerationResult result;
  result.requirements.requirements.push_back(
      {"R1", "The system shall export reports.", schema::RequirementKind::functional});
  result.stories.push_back(complete_story());
  result.test_cases.push_back({"T1", "R1", "Export check", {},
                               {"Request an export."}, "A report file appears.",
                               schema::TestKind::functional});
  auto report = quality::rust_report(result);
  for (auto cat : {quality::Category::R, quality::Category::U,
                   quality::Category::S, quality::Category::T}) {
    CHECK(report.category_scores.at(cat) == 5.0);
  }
  CHECK(report.duplicates.empty());
}

TEST_CASE("half of the S rules passing gives an S score of three") {
  schema::GenerationResult result;
  // criteria_present and definition_of_done pass; requirement_refs fails
  // (no refs) and unit_size fails (45 words).
  std::string sentence = "The system";
  for (int i = 0; i < 43; ++i) sentence += " runs";
  sentence += ".";
  schema::UserStory s = story_of(sentence);
  s.deliverables.insert(full_deliverable("unit_tests"));
  result.stories.push_back(s);
  auto report = quality::rust_report(result);
  CHECK(report.category_scores.at(quality::Category::S) == doctest::Approx(3.0));
}

TEST_CASE("one injected duplicate pair among ten stories is reported") {
  schema::GenerationResult result;
  auto corpus = duplicate_corpus();
  // Stories 0..8 are distinct fillers plus one of the exact pair; adding
  // index 11 injects its duplicate.
  for (std::size_t i = 0; i < 9; ++i) result.stories.push_back(corpus[i]);
  result.stories.push_back(corpus[11]);
  auto report = quality::rust_report(result);
  REQUIRE(report.duplicates.size() == 1);
  CHECK(report.duplicates[0].first == 3);
  CHECK(report.duplicates[0].second == 9);
}

TEST_CASE("category scores stay within bounds on random results") {
  std::mt19937 rng(616);
  for (int round = 0; round < 40; ++round) {
    auto result = testsupport::random_result(rng);
    auto report = quality::rust_report(result);
    for (const auto& [cat, score] : report.category_scores) {
      CHECK(score >= 1.0);
      CHECK(score <= 5.0);
    }
  }
}

TEST_CASE("reports are deterministic") {
  std::mt19937 rng(321);
  auto result = testsupport::random_result(rng);
  auto a = quality::report_to_json(quality::rust_report(result)).dump();
  auto b = quality::report_to_json(quality::rust_report(result)).dump();
  CHECK(a == b);
}

TEST_CASE("csv has one row per story per rule") {
  schema::GenerationResult result;
  result.stories.push_back(complete_story());
  result.stories.push_back(complete_story());
  auto report = quality::rust_report(result);
  std::string csv = quality::report_to_csv(report);
  auto lines = util::split_lines(csv);
  // Header plus 2 stories x 11 rules. split_lines keeps no trailing blank.
  std::size_t rows = 0;
  for (const auto& line : lines) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 1 + 2 * quality::rule_registry().size());
  CHECK(lines[0] == "story_index,rule_id,passed,category");
  CHECK(testsupport::contains(csv, "0,flesch_reading_ease,true,R"));
  CHECK(testsupport::contains(csv, "1,test_coverage,"));
}

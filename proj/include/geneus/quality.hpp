#pragma once

#include <array>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "geneus/json.hpp"
#include "geneus/schema.hpp"

// Heuristic lint over generated results, grouped into four categories:
//   R readability, U user-centricity, S specifiability, T traceability.
// Each category maps pass rates onto a 1..5 score so reports from different
// corpora are comparable.

namespace geneus::quality {

struct EmptyText : std::runtime_error {
  EmptyText() : std::runtime_error("readability needs at least one word") {}
};

enum class Category { R, U, S, T };
const char* category_name(Category c);

struct RuleInfo {
  std::string id;
  Category category;
};

/// Every rule the linter evaluates, in report order.
const std::vector<RuleInfo>& rule_registry();

struct CheckOutcome {
  std::string rule_id;
  bool passed{false};
  std::string detail;
};

/// Built-in actor words for the who-check (matched stemmed, anywhere in the
/// sentence, besides the leading "As a <actor>" form).
const std::vector<std::string>& default_actor_lexicon();

/// who / what / why outcomes for one story.
std::array<CheckOutcome, 3> check_who_what_why(
    const schema::UserStory& story,
    const std::vector<std::string>& extra_actors = {});

/// Flesch reading ease: 206.835 - 1.015*(words/sentences)
/// - 84.6*(syllables/words). Sentences are [.!?] runs (at least 1), words
/// are letter/digit/apostrophe runs, syllables are vowel groups (aeiouy,
/// at least 1 per word). Throws EmptyText when there are no words.
double readability_score(const std::string& text);

/// criteria_present / definition_of_done / requirement_refs / unit_size.
std::vector<CheckOutcome> specifiability_check(const schema::UserStory& story);

struct DuplicatePair {
  std::size_t first;
  std::size_t second;
  double similarity;
};

/// Near-duplicate stories: Jaccard over stemmed token sets of story+what at
/// or above `threshold`. Threshold must be in (0, 1].
std::vector<DuplicatePair> detect_duplicates(
    const std::vector<schema::UserStory>& stories, double threshold);

struct StoryOutcomes {
  std::size_t story_index{0};
  std::vector<CheckOutcome> checks;
};

struct QualityReport {
  std::vector<StoryOutcomes> per_story;
  /// 1 + 4 * pass_rate per category, averaged over stories; 5.0 exactly when
  /// everything passed.
  std::map<Category, double> category_scores;
  std::vector<DuplicatePair> duplicates;
};

QualityReport rust_report(const schema::GenerationResult& result,
                          double duplicate_threshold = 0.9,
                          const std::vector<std::string>& extra_actors = {});

Json report_to_json(const QualityReport& report);
/// One row per story per rule: story_index, rule_id, passed, category.
std::string report_to_csv(const QualityReport& report);

}  // namespace geneus::quality

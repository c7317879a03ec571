#include "geneus/quality.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "geneus/similarity.hpp"
#include "geneus/util.hpp"

namespace geneus::quality {

const char* category_name(Category c) {
  switch (c) {
    case Category::R: return "R";
    case Category::U: return "U";
    case Category::S: return "S";
    case Category::T: return "T";
  }
  return "?";
}

const std::vector<RuleInfo>& rule_registry() {
  static const std::vector<RuleInfo> rules = {
      {"flesch_reading_ease", Category::R},
      {"well_formed", Category::R},
      {"who", Category::U},
      {"what", Category::U},
      {"why", Category::U},
      {"criteria_present", Category::S},
      {"definition_of_done", Category::S},
      {"requirement_refs", Category::S},
      {"unit_size", Category::S},
      {"default_deliverables", Category::T},
      {"test_coverage", Category::T},
  };
  return rules;
}

const std::vector<std::string>& default_actor_lexicon() {
  static const std::vector<std::string> actors = {
      "clinician", "doctor",  "nurse",   "receptionist", "administrator",
      "user",      "patient", "manager", "operator",     "developer",
      "tester",    "customer"};
  return actors;
}

// ---------------- readability ----------------

namespace {

bool word_char(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '\'' || c >= 0x80;
}

bool vowel(char c) {
  switch (c) {
    case 'a': case 'e': case 'i': case 'o': case 'u': case 'y':
    case 'A': case 'E': case 'I': case 'O': case 'U': case 'Y':
      return true;
    default:
      return false;
  }
}

std::size_t count_syllables(const std::string& word) {
  std::size_t groups = 0;
  bool in_group = false;
  for (char c : word) {
    if (vowel(c)) {
      if (!in_group) ++groups;
      in_group = true;
    } else {
      in_group = false;
    }
  }
  return groups == 0 ? 1 : groups;
}

struct TextStats {
  std::size_t words{0};
  std::size_t sentences{0};
  std::size_t syllables{0};
};

TextStats text_stats(const std::string& text) {
  TextStats st;
  std::string current;
  bool in_terminator = false;
  for (unsigned char c : text) {
    if (word_char(c)) {
      current.push_back(static_cast<char>(c));
      in_terminator = false;
      continue;
    }
    if (!current.empty()) {
      st.words += 1;
      st.syllables += count_syllables(current);
      current.clear();
    }
    if (c == '.' || c == '!' || c == '?') {
      if (!in_terminator) st.sentences += 1;
      in_terminator = true;
    } else if (c != ' ' && c != '\t' && c != '\n' && c != '\r') {
      in_terminator = false;
    }
  }
  if (!current.empty()) {
    st.words += 1;
    st.syllables += count_syllables(current);
  }
  if (st.sentences == 0) st.sentences = 1;
  return st;
}

std::size_t word_count(const std::string& text) {
  return text_stats(text).words;
}

}  // namespace

double readability_score(const std::string& text) {
  TextStats st = text_stats(text);
  if (st.words == 0) throw EmptyText();
  double words = static_cast<double>(st.words);
  double sentences = static_cast<double>(st.sentences);
  double syllables = static_cast<double>(st.syllables);
  return 206.835 - 1.015 * (words / sentences) - 84.6 * (syllables / words);
}

// ---------------- user-centricity ----------------

namespace {

bool has_actor_token(const std::string& sentence,
                     const std::vector<std::string>& extra_actors,
                     std::string* matched) {
  std::vector<std::string> stems;
  for (const auto& a : default_actor_lexicon()) stems.push_back(similarity::stem(a));
  for (const auto& a : extra_actors) stems.push_back(similarity::stem(util::to_lower(a)));
  for (const auto& token : similarity::normalize_tokens(sentence)) {
    std::string t = similarity::stem(token);
    if (std::find(stems.begin(), stems.end(), t) != stems.end()) {
      if (matched) *matched = token;
      return true;
    }
  }
  return false;
}

bool has_modal_what(const std::string& sentence) {
  static const char* kModals[] = {"shall", "should", "must", "can", "may", "will"};
  std::vector<std::string> tokens = similarity::normalize_tokens(sentence);
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    for (const char* m : kModals) {
      if (tokens[i] == m) return true;
    }
    if ((tokens[i] == "want" || tokens[i] == "wants") && tokens[i + 1] == "to") {
      return true;
    }
  }
  return false;
}

bool has_purpose_clause(const std::string& sentence) {
  std::string lower = util::to_lower(sentence);
  return lower.find("so that") != std::string::npos ||
         lower.find("in order to") != std::string::npos ||
         lower.find("to ensure") != std::string::npos;
}

}  // namespace

std::array<CheckOutcome, 3> check_who_what_why(
    const schema::UserStory& story, const std::vector<std::string>& extra_actors) {
  std::array<CheckOutcome, 3> out;

  out[0].rule_id = "who";
  if (!util::trim(story.who).empty()) {
    out[0].passed = true;
    out[0].detail = "who field: " + story.who;
  } else {
    std::string lower = util::to_lower(story.story);
    std::string matched;
    if (lower.rfind("as a ", 0) == 0 || lower.rfind("as an ", 0) == 0) {
      out[0].passed = true;
      out[0].detail = "leading actor clause";
    } else if (has_actor_token(story.story, extra_actors, &matched)) {
      out[0].passed = true;
      out[0].detail = "actor mention: " + matched;
    } else {
      out[0].detail = "no actor found";
    }
  }

  out[1].rule_id = "what";
  if (!util::trim(story.what).empty()) {
    out[1].passed = true;
    out[1].detail = "what field present";
  } else if (has_modal_what(story.story)) {
    out[1].passed = true;
    out[1].detail = "normative clause in sentence";
  } else {
    out[1].detail = "no functionality clause found";
  }

  out[2].rule_id = "why";
  if (!util::trim(story.why).empty()) {
    out[2].passed = true;
    out[2].detail = "why field present";
  } else if (has_purpose_clause(story.story)) {
    out[2].passed = true;
    out[2].detail = "purpose clause in sentence";
  } else {
    out[2].detail = "no purpose clause found";
  }

  return out;
}

// ---------------- specifiability ----------------

std::vector<CheckOutcome> specifiability_check(const schema::UserStory& story) {
  std::vector<CheckOutcome> out;

  CheckOutcome criteria{"criteria_present", false, ""};
  for (const auto& d : story.deliverables.items) {
    if (!d.criteria.empty()) {
      criteria.passed = true;
      break;
    }
  }
  if (criteria.passed) {
    criteria.detail = "acceptance criteria present";
  } else if (story.deliverables.empty()) {
    criteria.detail = "story has no deliverables";
  } else {
    criteria.detail =
        "$.deliverables." + story.deliverables.items[0].key + ".criteria is empty";
  }
  out.push_back(std::move(criteria));

  CheckOutcome dod{"definition_of_done", false, ""};
  if (!story.deliverables.empty()) {
    dod.passed = true;
    for (const auto& d : story.deliverables.items) {
      if (util::trim(d.definition_of_done).empty()) {
        dod.passed = false;
        dod.detail = "deliverable " + d.key + " has no definition of done";
        break;
      }
    }
    if (dod.passed) dod.detail = "every deliverable defines done";
  } else {
    dod.detail = "story has no deliverables";
  }
  out.push_back(std::move(dod));

  CheckOutcome refs{"requirement_refs", !story.requirement_refs.empty(), ""};
  refs.detail = refs.passed ? "traces to requirements" : "no requirement refs";
  out.push_back(std::move(refs));

  std::size_t words = word_count(story.story);
  CheckOutcome size{"unit_size", words <= 40, ""};
  size.detail = std::to_string(words) + " words";
  out.push_back(std::move(size));

  return out;
}

// ---------------- duplicates ----------------

std::vector<DuplicatePair> detect_duplicates(
    const std::vector<schema::UserStory>& stories, double threshold) {
  if (threshold <= 0.0 || threshold > 1.0) {
    throw std::invalid_argument("duplicate threshold must be in (0, 1]");
  }
  std::vector<std::vector<std::string>> sets;
  sets.reserve(stories.size());
  for (const auto& s : stories) {
    sets.push_back(similarity::token_set(s.story + " " + s.what));
  }
  similarity::PairwiseMatrix m = similarity::pairwise_matrix(
      sets.size(),
      [&sets](std::size_t i, std::size_t j) {
        return similarity::jaccard(sets[i], sets[j]);
      });
  std::vector<DuplicatePair> out;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t j = i + 1; j < sets.size(); ++j) {
      if (m.at(i, j) >= threshold) out.push_back({i, j, m.at(i, j)});
    }
  }
  return out;
}

// ---------------- report ----------------

QualityReport rust_report(const schema::GenerationResult& result,
                          double duplicate_threshold,
                          const std::vector<std::string>& extra_actors) {
  QualityReport report;

  // Requirement ids with at least one test case.
  std::vector<std::string> covered;
  for (const auto& t : result.test_cases) covered.push_back(t.story_ref);

  for (std::size_t i = 0; i < result.stories.size(); ++i) {
    const schema::UserStory& story = result.stories[i];
    StoryOutcomes outcomes;
    outcomes.story_index = i;

    CheckOutcome flesch{"flesch_reading_ease", false, ""};
    try {
      double score = readability_score(story.story);
      flesch.passed = score >= 30.0;
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.2f", score);
      flesch.detail = buf;
    } catch (const EmptyText&) {
      flesch.detail = "empty story sentence";
    }
    outcomes.checks.push_back(std::move(flesch));

    CheckOutcome formed{"well_formed", false, ""};
    std::string trimmed = util::trim(story.story);
    if (!trimmed.empty()) {
      bool capitalized = trimmed[0] >= 'A' && trimmed[0] <= 'Z';
      char last = trimmed.back();
      bool terminated = last == '.' || last == '!' || last == '?';
      formed.passed = capitalized && terminated;
    }
    formed.detail = formed.passed ? "capitalized and terminated"
                                  : "not a well-formed sentence";
    outcomes.checks.push_back(std::move(formed));

    for (auto& c : check_who_what_why(story, extra_actors)) {
      outcomes.checks.push_back(std::move(c));
    }
    for (auto& c : specifiability_check(story)) {
      outcomes.checks.push_back(std::move(c));
    }

    CheckOutcome defaults{"default_deliverables", true, ""};
    std::vector<std::string> missing;
    for (const auto& key : schema::default_deliverable_keys()) {
      if (!story.deliverables.find(key)) missing.push_back(key);
    }
    if (!missing.empty()) {
      defaults.passed = false;
      defaults.detail = "missing: ";
      for (std::size_t k = 0; k < missing.size(); ++k) {
        if (k > 0) defaults.detail += ", ";
        defaults.detail += missing[k];
      }
    } else {
      defaults.detail = "all default deliverables present";
    }
    outcomes.checks.push_back(std::move(defaults));

    // Vacuously true with zero refs; the missing trace link is already
    // penalized by requirement_refs in S.
    CheckOutcome coverage{"test_coverage", true, ""};
    std::vector<std::string> uncovered;
    for (const auto& ref : story.requirement_refs) {
      if (std::find(covered.begin(), covered.end(), ref) == covered.end()) {
        uncovered.push_back(ref);
      }
    }
    if (!uncovered.empty()) {
      coverage.passed = false;
      coverage.detail = "no test case for: ";
      for (std::size_t k = 0; k < uncovered.size(); ++k) {
        if (k > 0) coverage.detail += ", ";
        coverage.detail += uncovered[k];
      }
    } else {
      coverage.detail = "referenced requirements covered";
    }
    outcomes.checks.push_back(std::move(coverage));

    report.per_story.push_back(std::move(outcomes));
  }

  // Category scores: per story 1 + 4 * pass-rate, averaged over stories.
  std::map<Category, std::pair<double, std::size_t>> sums;  // sum, story count
  for (Category c : {Category::R, Category::U, Category::S, Category::T}) {
    sums[c] = {0.0, 0};
  }
  for (const auto& story : report.per_story) {
    std::map<Category, std::pair<std::size_t, std::size_t>> counts;  // passed, total
    for (const auto& check : story.checks) {
      for (const auto& rule : rule_registry()) {
        if (rule.id == check.rule_id) {
          counts[rule.category].second += 1;
          if (check.passed) counts[rule.category].first += 1;
          break;
        }
      }
    }
    for (const auto& [cat, pt] : counts) {
      double rate = pt.second == 0
                        ? 1.0
                        : static_cast<double>(pt.first) / static_cast<double>(pt.second);
      sums[cat].first += 1.0 + 4.0 * rate;
      sums[cat].second += 1;
    }
  }
  for (const auto& [cat, acc] : sums) {
    report.category_scores[cat] = acc.second == 0 ? 5.0 : acc.first / acc.second;
  }

  report.duplicates = detect_duplicates(result.stories, duplicate_threshold);
  return report;
}

Json report_to_json(const QualityReport& report) {
  Json j;
  Json scores = Json::object();
  for (const auto& [cat, score] : report.category_scores) {
    scores[category_name(cat)] = score;
  }
  j["category_scores"] = std::move(scores);
  Json stories = Json::array();
  for (const auto& s : report.per_story) {
    Json checks = Json::array();
    for (const auto& c : s.checks) {
      std::string category;
      for (const auto& rule : rule_registry()) {
        if (rule.id == c.rule_id) category = category_name(rule.category);
      }
      checks.push_back({{"rule_id", c.rule_id},
                        {"category", category},
                        {"passed", c.passed},
                        {"detail", c.detail}});
    }
    stories.push_back({{"story_index", s.story_index}, {"checks", std::move(checks)}});
  }
  j["per_story"] = std::move(stories);
  Json dups = Json::array();
  for (const auto& d : report.duplicates) {
    dups.push_back({{"first", d.first}, {"second", d.second},
                    {"similarity", d.similarity}});
  }
  j["duplicates"] = std::move(dups);
  return j;
}

std::string report_to_csv(const QualityReport& report) {
  std::string out = "story_index,rule_id,passed,category\n";
  for (const auto& s : report.per_story) {
    for (const auto& c : s.checks) {
      std::string category;
      for (const auto& rule : rule_registry()) {
        if (rule.id == c.rule_id) category = category_name(rule.category);
      }
      out += std::to_string(s.story_index) + "," + c.rule_id + "," +
             (c.passed ? "true" : "false") + "," + category + "\n";
    }
  }
  return out;
}

}  // namespace geneus::quality

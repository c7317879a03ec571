#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "geneus/model.hpp"
#include "geneus/schema.hpp"

// Shared helpers for the test binaries: repo paths, a scratch directory,
// provider doubles, and a generator of random valid results for round-trip
// properties.

namespace testsupport {

inline std::filesystem::path repo_dir() {
  return std::filesystem::path(GENEUS_REPO_DIR);
}

inline std::string data_path(const std::string& name) {
  return (repo_dir() / "data" / name).string();
}

inline std::string fixture_path(const std::string& name) {
  return (repo_dir() / "fixtures" / name).string();
}

inline std::string templates_dir() {
  return (repo_dir() / "templates").string();
}

inline std::string cli_path() { return GENEUS_CLI_PATH; }

inline bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "geneus_test") {
    auto base = std::filesystem::temp_directory_path();
    std::random_device rd;
    for (int attempt = 0; attempt < 64; ++attempt) {
      auto candidate = base / (tag + "_" + std::to_string(rd()));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    throw std::runtime_error("could not create a scratch directory under " +
                             base.string());
  }

  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }

  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  std::filesystem::path path_;
};

/// Provider whose behavior is a lambda over the request.
class FunctionProvider : public geneus::model::Provider {
 public:
  using Fn = std::function<geneus::model::Completion(
      const geneus::model::ModelRequest&)>;

  explicit FunctionProvider(Fn fn) : fn_(std::move(fn)) {}

  geneus::model::Completion complete(
      const geneus::model::ModelRequest& request) override {
    ++calls;
    return fn_(request);
  }

  int calls{0};

 private:
  Fn fn_;
};

/// Pass-through wrapper that keeps a copy of every request it forwards.
class CallRecorder : public geneus::model::Provider {
 public:
  explicit CallRecorder(geneus::model::Provider& inner) : inner_(inner) {}

  geneus::model::Completion complete(
      const geneus::model::ModelRequest& request) override {
    requests.push_back(request);
    return inner_.complete(request);
  }

  std::vector<geneus::model::ModelRequest> requests;

 private:
  geneus::model::Provider& inner_;
};

inline geneus::model::Completion stop_completion(std::string text) {
  geneus::model::Completion c;
  c.text = std::move(text);
  c.finish_reason = geneus::model::FinishReason::stop;
  return c;
}

/// Echoes the last user message back, so threading invariants are provable
/// from the transcript alone.
inline geneus::model::Completion echo_last_user(
    const geneus::model::ModelRequest& request) {
  for (auto it = request.messages.rbegin(); it != request.messages.rend();
       ++it) {
    if (it->role == geneus::model::Role::user) return stop_completion(it->content);
  }
  return stop_completion("");
}

// ---------------- random valid results ----------------

inline std::string random_word(std::mt19937& rng) {
  static const std::vector<std::string> vocabulary = {
      "system",  "record",  "patient", "report",   "session", "alarm",
      "monitor", "export",  "summary", "schedule", "consent", "dose",
      "account", "profile", "audit",   "backup",   "message", "status",
      "device",  "login"};
  std::uniform_int_distribution<std::size_t> pick(0, vocabulary.size() - 1);
  return vocabulary[pick(rng)];
}

inline std::string random_sentence(std::mt19937& rng, int min_words = 4,
                                   int max_words = 12) {
  std::uniform_int_distribution<int> count(min_words, max_words);
  int n = count(rng);
  std::string s = "The";
  for (int i = 0; i < n; ++i) s += " " + random_word(rng);
  s += ".";
  return s;
}

/// A GenerationResult that satisfies every validator rule: dense unique
/// requirement ids, refs drawn from those ids, non-empty steps/criteria/
/// expected, snake_case deliverable keys. who/what/why may be empty.
inline geneus::schema::GenerationResult random_result(std::mt19937& rng) {
  namespace schema = geneus::schema;
  std::uniform_int_distribution<int> req_count(1, 6);
  std::uniform_int_distribution<int> story_count(1, 4);
  std::uniform_int_distribution<int> coin(0, 1);

  schema::GenerationResult result;
  int reqs = req_count(rng);
  for (int i = 0; i < reqs; ++i) {
    schema::Requirement r;
    r.id = "R" + std::to_string(i + 1);
    r.text = random_sentence(rng);
    r.kind = coin(rng) ? schema::RequirementKind::functional
                       : schema::RequirementKind::nonfunctional;
    result.requirements.requirements.push_back(r);
  }
  result.requirements.source_digest = std::string(64, 'a');

  auto random_ref = [&] {
    std::uniform_int_distribution<int> pick(1, reqs);
    return "R" + std::to_string(pick(rng));
  };

  static const std::vector<std::string> key_pool = {
      "architecture_design",         "database_schema_design",
      "unit_tests",                  "user_training_documentation",
      "production_support_plan",     "api_reference",
      "deployment_runbook",          "capacity_plan"};

  int stories = story_count(rng);
  for (int s = 0; s < stories; ++s) {
    schema::UserStory story;
    story.story = "As a user, I want the " + random_word(rng) +
                  " to be handled, so that work continues.";
    if (coin(rng)) {
      story.who = "user";
      story.what = "handle the " + random_word(rng);
      story.why = "work continues";
    }
    story.requirement_refs.push_back(random_ref());
    if (coin(rng)) story.requirement_refs.push_back(random_ref());

    std::uniform_int_distribution<int> key_count(1, 5);
    int keys = key_count(rng);
    std::uniform_int_distribution<std::size_t> key_pick(0, key_pool.size() - 1);
    for (int k = 0; k < keys; ++k) {
      schema::Deliverable d;
      d.key = key_pool[key_pick(rng)];
      d.definition_of_done = random_sentence(rng, 3, 8);
      d.criteria.push_back(random_sentence(rng, 3, 8));
      if (coin(rng)) d.criteria.push_back(random_sentence(rng, 3, 8));
      story.deliverables.insert(std::move(d));
    }
    result.stories.push_back(std::move(story));
  }

  std::uniform_int_distribution<int> case_count(1, 5);
  int cases = case_count(rng);
  for (int t = 0; t < cases; ++t) {
    schema::TestCase tc;
    tc.id = "T" + std::to_string(t + 1);
    tc.story_ref = random_ref();
    tc.title = random_sentence(rng, 2, 6);
    if (coin(rng)) tc.preconditions.push_back(random_sentence(rng, 3, 6));
    tc.steps.push_back(random_sentence(rng, 3, 8));
    if (coin(rng)) tc.steps.push_back(random_sentence(rng, 3, 8));
    tc.expected = random_sentence(rng, 3, 8);
    tc.kind = coin(rng) ? schema::TestKind::functional
                        : (coin(rng) ? schema::TestKind::negative
                                     : schema::TestKind::boundary);
    result.test_cases.push_back(std::move(tc));
  }

  result.run_metadata.model_id = "gpt-4-1106-preview";
  result.run_metadata.temperature = 0.2;
  result.run_metadata.started_at = "2024-01-01T00:00:00Z";
  result.run_metadata.finished_at = "2024-01-01T00:00:01Z";
  result.run_metadata.source_digest = result.requirements.source_digest;
  return result;
}

}  // namespace testsupport

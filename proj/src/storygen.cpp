#include "geneus/storygen.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <set>
#include <tuple>

#include "geneus/digest.hpp"
#include "geneus/util.hpp"

namespace geneus::storygen {

namespace {

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) out += ", ";
    out += ids[i];
  }
  return out;
}

std::string join_violations(const std::vector<schema::Violation>& violations) {
  std::string out;
  for (std::size_t i = 0; i < violations.size() && i < 5; ++i) {
    if (i > 0) out += "; ";
    out += violations[i].path + ": " + violations[i].message;
  }
  if (violations.size() > 5) out += "; ...";
  return out;
}

}  // namespace

CoverageGap::CoverageGap(std::vector<std::string> ids)
    : StorygenError("requirements without a covering test case: " + join_ids(ids)),
      missing_ids(std::move(ids)) {}

SchemaInvalid::SchemaInvalid(std::vector<schema::Violation> v)
    : StorygenError("generated stories violate the output contract: " +
                    join_violations(v)),
      violations(std::move(v)) {}

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::ingest: return "ingest";
    case Stage::requirements: return "requirements";
    case Stage::test_cases: return "test_cases";
    case Stage::stories: return "stories";
  }
  return "?";
}

PipelineError::PipelineError(Stage stage_, const std::string& detail,
                             std::vector<promptkit::RaTTrace> traces_,
                             std::exception_ptr cause_)
    : StorygenError(std::string(stage_name(stage_)) + " stage failed: " + detail),
      stage(stage_),
      traces(std::move(traces_)),
      cause(cause_) {}

// ---------------- shared helpers ----------------

namespace {

const promptkit::TemplateStore& templates_of(const PipelineOptions& opts) {
  static const promptkit::TemplateStore builtin = promptkit::TemplateStore::builtin();
  return opts.templates ? *opts.templates : builtin;
}

std::string instruction_of(const PipelineOptions& opts, const std::string& id) {
  const promptkit::PromptTemplate& tpl = templates_of(opts).get(id);
  if (id == "generate_stories") {
    std::string keys;
    for (const auto& k : schema::default_deliverable_keys()) {
      if (!keys.empty()) keys += ", ";
      keys += k;
    }
    return promptkit::render(tpl, {{"deliverable_keys", keys}});
  }
  return promptkit::render(tpl, {});
}

struct RepairExchange {
  model::ModelRequest request;
  model::Completion completion;
};

// One corrective follow-up: original instruction plus a note about what was
// wrong with the previous reply, same input content.
RepairExchange repair_call(model::Provider& provider,
                           const std::string& instruction,
                           const std::string& content, const std::string& issue,
                           const PipelineOptions& opts) {
  const promptkit::PromptTemplate& tpl = templates_of(opts).get("repair");
  std::string note = promptkit::render(tpl, {{"issue", issue}});
  RepairExchange ex;
  ex.request = promptkit::build_request(instruction + "\n\n" + note, content,
                                        opts.params);
  ex.completion = provider.complete(ex.request);
  return ex;
}

// Numbered-list fallback for replies that ignored the JSON format request.
// Lines like "1. text" or "- text" are requirements; a heading containing
// "non-functional" flips the kind for the lines after it.
void parse_requirement_lines(const std::string& raw,
                             std::vector<std::string>& functional,
                             std::vector<std::string>& nonfunctional) {
  bool in_nonfunctional = false;
  for (const std::string& line : util::split_lines(raw)) {
    std::string trimmed = util::trim(line);
    if (trimmed.empty()) continue;
    std::string lower = util::to_lower(trimmed);
    if (lower.find("non-functional") != std::string::npos ||
        lower.find("nonfunctional") != std::string::npos) {
      if (trimmed.size() < 60) {  // looks like a heading, not a requirement
        in_nonfunctional = true;
        continue;
      }
    }
    std::size_t pos = 0;
    bool numbered = false;
    while (pos < trimmed.size() && trimmed[pos] >= '0' && trimmed[pos] <= '9') ++pos;
    if (pos > 0 && pos < trimmed.size() &&
        (trimmed[pos] == '.' || trimmed[pos] == ')')) {
      ++pos;
      numbered = true;
    } else if (trimmed[0] == '-' || trimmed[0] == '*') {
      pos = 1;
      numbered = true;
    }
    if (!numbered) continue;
    std::string text = util::trim(trimmed.substr(pos));
    if (text.empty()) continue;
    (in_nonfunctional ? nonfunctional : functional).push_back(text);
  }
}

void collect_requirement_strings(const Json& j, std::vector<std::string>& out) {
  if (j.is_array()) {
    for (const auto& item : j) {
      if (item.is_string()) {
        std::string t = util::trim(item.get<std::string>());
        if (!t.empty()) out.push_back(t);
      } else if (item.is_object()) {
        std::string t = util::trim(item.value("text", item.value("requirement", "")));
        if (!t.empty()) out.push_back(t);
      }
    }
  }
}

schema::RequirementSet parse_requirements_reply(const std::string& reply) {
  std::vector<std::string> functional;
  std::vector<std::string> nonfunctional;
  try {
    Json j = schema::parse_llm_json(reply);
    if (j.is_object()) {
      if (j.contains("functional")) collect_requirement_strings(j["functional"], functional);
      if (j.contains("nonfunctional")) {
        collect_requirement_strings(j["nonfunctional"], nonfunctional);
      } else if (j.contains("non_functional")) {
        collect_requirement_strings(j["non_functional"], nonfunctional);
      }
    } else if (j.is_array()) {
      collect_requirement_strings(j, functional);
    }
  } catch (const schema::ParseError&) {
    parse_requirement_lines(reply, functional, nonfunctional);
  }
  schema::RequirementSet set;
  std::size_t n = 1;
  for (const auto& text : functional) {
    set.requirements.push_back(
        {"R" + std::to_string(n++), text, schema::RequirementKind::functional});
  }
  for (const auto& text : nonfunctional) {
    set.requirements.push_back(
        {"R" + std::to_string(n++), text, schema::RequirementKind::nonfunctional});
  }
  return set;
}

}  // namespace

std::string render_requirements(const schema::RequirementSet& set) {
  std::string out;
  for (const auto& r : set.requirements) {
    out += r.id + ". " + r.text + "\n";
  }
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

// ---------------- stage 1 ----------------

RequirementsOutcome extract_requirements(const ingest::ExtractedText& text,
                                         model::Provider& provider,
                                         const PipelineOptions& opts) {
  if (ingest::noise_report(text) == ingest::NoiseDecision::reject) {
    throw std::invalid_argument("input text is too noisy to process");
  }
  std::string instruction = instruction_of(opts, "extract_requirements");
  promptkit::RatResult rat =
      promptkit::run_rat(provider, text.text, instruction,
                         templates_of(opts).get("refine").instruction, opts.params);

  schema::RequirementSet set = parse_requirements_reply(rat.completion.text);
  if (set.requirements.empty() && opts.allow_repair) {
    RepairExchange ex = repair_call(
        provider, instruction, rat.trace.refine_output.text,
        "no requirement lists could be parsed from it", opts);
    rat.trace.thought_request = ex.request;
    rat.trace.thought_output = ex.completion;
    set = parse_requirements_reply(ex.completion.text);
  }
  if (set.requirements.empty()) {
    throw ParseFailed("reply contains no requirements");
  }
  set.source_digest = digest::sha256_hex(text.text);

  RequirementsOutcome out;
  out.set = std::move(set);
  out.trace = std::move(rat.trace);
  return out;
}

IoRequirementsOutcome extract_requirements_io(const ingest::ExtractedText& text,
                                              model::Provider& provider,
                                              const PipelineOptions& opts) {
  if (ingest::noise_report(text) == ingest::NoiseDecision::reject) {
    throw std::invalid_argument("input text is too noisy to process");
  }
  std::string instruction = instruction_of(opts, "extract_requirements");
  promptkit::IoResult io = promptkit::run_io(provider, instruction, text.text, opts.params);

  schema::RequirementSet set = parse_requirements_reply(io.completion.text);
  if (set.requirements.empty() && opts.allow_repair) {
    RepairExchange ex =
        repair_call(provider, instruction, text.text,
                    "no requirement lists could be parsed from it", opts);
    io.transcript.steps.push_back({ex.request, ex.completion});
    set = parse_requirements_reply(ex.completion.text);
  }
  if (set.requirements.empty()) {
    throw ParseFailed("reply contains no requirements");
  }
  set.source_digest = digest::sha256_hex(text.text);

  IoRequirementsOutcome out;
  out.set = std::move(set);
  out.transcript = std::move(io.transcript);
  return out;
}

// ---------------- stage 2 ----------------

namespace {

std::vector<schema::TestCase> parse_test_cases_reply(const std::string& reply) {
  std::vector<schema::TestCase> out;
  Json j = schema::parse_llm_json(reply);
  const Json* arr = nullptr;
  if (j.is_array()) {
    arr = &j;
  } else if (j.is_object() && j.contains("test_cases") && j["test_cases"].is_array()) {
    arr = &j["test_cases"];
  }
  if (!arr) return out;
  for (std::size_t i = 0; i < arr->size(); ++i) {
    if (!(*arr)[i].is_object()) continue;
    schema::TestCase t = schema::test_case_from_json((*arr)[i], i);
    if (!t.story_ref.empty() && !t.steps.empty() && !t.expected.empty()) {
      out.push_back(std::move(t));
    }
  }
  return out;
}

std::vector<std::string> uncovered_ids(const schema::RequirementSet& set,
                                       const std::vector<schema::TestCase>& cases) {
  std::set<std::string> covered;
  for (const auto& t : cases) covered.insert(t.story_ref);
  std::vector<std::string> missing;
  for (const auto& r : set.requirements) {
    if (!covered.count(r.id)) missing.push_back(r.id);
  }
  return missing;
}

void renumber_test_ids(std::vector<schema::TestCase>& cases) {
  std::set<std::string> seen;
  for (auto& t : cases) {
    if (t.id.empty() || !seen.insert(t.id).second) {
      std::size_t n = cases.size();
      std::string fresh;
      do {
        fresh = "T" + std::to_string(++n);
      } while (seen.count(fresh));
      t.id = fresh;
      seen.insert(fresh);
    }
  }
}

}  // namespace

TestCasesOutcome generate_test_cases(const schema::RequirementSet& set,
                                     model::Provider& provider,
                                     const PipelineOptions& opts) {
  if (set.requirements.empty()) {
    throw std::invalid_argument("cannot generate test cases without requirements");
  }
  std::string instruction = instruction_of(opts, "generate_test_cases");
  std::string input = render_requirements(set);
  promptkit::RatResult rat = promptkit::run_rat(
      provider, input, instruction, templates_of(opts).get("refine").instruction,
      opts.params);

  std::vector<schema::TestCase> cases;
  try {
    cases = parse_test_cases_reply(rat.completion.text);
  } catch (const schema::ParseError&) {
    cases.clear();
  }

  if (cases.empty() && opts.allow_repair) {
    RepairExchange ex = repair_call(
        provider, instruction, rat.trace.refine_output.text,
        "no test case array could be parsed from it", opts);
    rat.trace.thought_request = ex.request;
    rat.trace.thought_output = ex.completion;
    try {
      cases = parse_test_cases_reply(ex.completion.text);
    } catch (const schema::ParseError&) {
      cases.clear();
    }
  }
  if (cases.empty()) throw ParseFailed("reply contains no test cases");

  std::vector<std::string> missing = uncovered_ids(set, cases);
  if (!missing.empty() && opts.allow_repair) {
    RepairExchange ex = repair_call(
        provider, instruction, rat.trace.refine_output.text,
        "these requirement ids have no test case yet: " + join_ids(missing), opts);
    try {
      for (auto& t : parse_test_cases_reply(ex.completion.text)) {
        cases.push_back(std::move(t));
      }
    } catch (const schema::ParseError&) {
      // keep what we have; the gap check below decides
    }
    missing = uncovered_ids(set, cases);
  }
  if (!missing.empty()) throw CoverageGap(missing);

  renumber_test_ids(cases);

  TestCasesOutcome out;
  out.test_cases = std::move(cases);
  out.trace = std::move(rat.trace);
  return out;
}

// ---------------- stage 3 ----------------

namespace {

std::pair<std::vector<schema::UserStory>, std::vector<schema::Violation>>
parse_stories_reply(const std::string& reply,
                    const std::vector<std::string>& requirement_ids) {
  std::vector<schema::UserStory> stories;
  std::vector<schema::Violation> violations;
  Json j = schema::parse_llm_json(reply);
  const Json* arr = nullptr;
  if (j.is_array()) {
    arr = &j;
  } else if (j.is_object() && j.contains("stories") && j["stories"].is_array()) {
    arr = &j["stories"];
  } else if (j.is_object()) {
    arr = nullptr;
  }
  if (!arr) return {stories, violations};
  for (std::size_t i = 0; i < arr->size(); ++i) {
    auto sub = schema::validate_story((*arr)[i], "$.stories[" + std::to_string(i) + "]",
                                      requirement_ids);
    violations.insert(violations.end(), sub.begin(), sub.end());
    if (sub.empty()) {
      schema::UserStory story = schema::story_from_json((*arr)[i]);
      schema::derive_who_what_why(story);
      stories.push_back(std::move(story));
    }
  }
  return {stories, violations};
}

}  // namespace

StoriesOutcome generate_stories(const schema::RequirementSet& set,
                                model::Provider& provider,
                                const PipelineOptions& opts) {
  if (set.requirements.empty()) {
    throw std::invalid_argument("cannot generate stories without requirements");
  }
  std::string instruction = instruction_of(opts, "generate_stories");
  std::string input = render_requirements(set);
  promptkit::RatResult rat = promptkit::run_rat(
      provider, input, instruction, templates_of(opts).get("refine").instruction,
      opts.params);

  std::vector<schema::UserStory> stories;
  std::vector<schema::Violation> violations;
  try {
    std::tie(stories, violations) =
        parse_stories_reply(rat.completion.text, set.ids());
  } catch (const schema::ParseError& e) {
    violations.push_back({"$", "no-json", e.what()});
  }

  if ((stories.empty() || !violations.empty()) && opts.allow_repair) {
    std::string issue = violations.empty()
                            ? "no story array could be parsed from it"
                            : join_violations(violations);
    RepairExchange ex =
        repair_call(provider, instruction, rat.trace.refine_output.text, issue, opts);
    rat.trace.thought_request = ex.request;
    rat.trace.thought_output = ex.completion;
    try {
      std::tie(stories, violations) =
          parse_stories_reply(ex.completion.text, set.ids());
    } catch (const schema::ParseError& e) {
      violations = {{"$", "no-json", e.what()}};
      stories.clear();
    }
  }
  if (!violations.empty()) throw SchemaInvalid(std::move(violations));
  if (stories.empty()) throw ParseFailed("reply contains no stories");

  StoriesOutcome out;
  out.stories = std::move(stories);
  out.trace = std::move(rat.trace);
  return out;
}

// ---------------- the pipeline ----------------

schema::GenerationResult run_pipeline(const ingest::SourceDocument& doc,
                                      model::Provider& provider,
                                      const PipelineOptions& opts) {
  auto started = std::chrono::system_clock::now();
  std::vector<promptkit::RaTTrace> traces;

  ingest::ExtractedText text;
  try {
    text = ingest::extract_text(doc);
  } catch (const ingest::IngestError& e) {
    throw PipelineError(Stage::ingest, e.what(), {});
  }
  if (ingest::noise_report(text) == ingest::NoiseDecision::reject) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", text.noise_ratio);
    throw PipelineError(Stage::ingest,
                        std::string("noise ratio ") + buf + " is past refining",
                        {});
  }

  RequirementsOutcome requirements;
  try {
    requirements = extract_requirements(text, provider, opts);
  } catch (const std::exception& e) {
    throw PipelineError(Stage::requirements, e.what(), std::move(traces),
                        std::current_exception());
  }
  traces.push_back(requirements.trace);

  TestCasesOutcome tests;
  try {
    tests = generate_test_cases(requirements.set, provider, opts);
  } catch (const std::exception& e) {
    throw PipelineError(Stage::test_cases, e.what(), std::move(traces),
                        std::current_exception());
  }
  traces.push_back(tests.trace);

  StoriesOutcome stories;
  try {
    stories = generate_stories(requirements.set, provider, opts);
  } catch (const std::exception& e) {
    throw PipelineError(Stage::stories, e.what(), std::move(traces),
                        std::current_exception());
  }
  traces.push_back(stories.trace);

  schema::GenerationResult result;
  result.requirements = std::move(requirements.set);
  result.test_cases = std::move(tests.test_cases);
  result.stories = std::move(stories.stories);
  result.traces = std::move(traces);
  result.run_metadata.model_id = opts.params.model_id;
  result.run_metadata.temperature = opts.params.temperature;
  result.run_metadata.started_at = util::iso8601_utc(started);
  result.run_metadata.finished_at =
      util::iso8601_utc(std::chrono::system_clock::now());
  result.run_metadata.template_versions = templates_of(opts).versions();
  result.run_metadata.source_digest = result.requirements.source_digest;

  // Final self-check: the envelope we hand out must satisfy the contract.
  auto violations = schema::validate_result(schema::result_to_json(result));
  if (!violations.empty()) throw SchemaInvalid(std::move(violations));

  return result;
}

}  // namespace geneus::storygen

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "geneus/ingest.hpp"
#include "geneus/model.hpp"
#include "geneus/promptkit.hpp"
#include "geneus/schema.hpp"

// The generation pipeline: refine-then-extract requirements, then derive
// test cases and user stories from them. Three two-call blocks, six provider
// calls per document on the happy path.

namespace geneus::storygen {

struct StorygenError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Reply had no usable structure even after one repair re-prompt.
struct ParseFailed : StorygenError {
  using StorygenError::StorygenError;
};

/// Requirements left without a covering test case after repair.
struct CoverageGap : StorygenError {
  std::vector<std::string> missing_ids;
  explicit CoverageGap(std::vector<std::string> ids);
};

/// Generated stories that still violate the output contract after repair.
struct SchemaInvalid : StorygenError {
  std::vector<schema::Violation> violations;
  explicit SchemaInvalid(std::vector<schema::Violation> v);
};

enum class Stage { ingest, requirements, test_cases, stories };
const char* stage_name(Stage s);

/// Pipeline abort: which stage failed, the traces of the stages that
/// completed before it, and the original exception (so callers can still
/// tell a provider outage from a validation problem).
struct PipelineError : StorygenError {
  Stage stage;
  std::vector<promptkit::RaTTrace> traces;
  std::exception_ptr cause;
  PipelineError(Stage stage_, const std::string& detail,
                std::vector<promptkit::RaTTrace> traces_,
                std::exception_ptr cause_ = nullptr);
};

struct PipelineOptions {
  promptkit::RequestParams params;
  /// Null means the compiled-in templates.
  const promptkit::TemplateStore* templates{nullptr};
  /// One corrective re-prompt per stage before giving up.
  bool allow_repair{true};
};

struct RequirementsOutcome {
  schema::RequirementSet set;
  promptkit::RaTTrace trace;
};

/// Stage 1 (two calls: refine + extract). Requirement ids are assigned
/// R1..Rn, functional entries first.
RequirementsOutcome extract_requirements(const ingest::ExtractedText& text,
                                         model::Provider& provider,
                                         const PipelineOptions& opts = {});

struct IoRequirementsOutcome {
  schema::RequirementSet set;
  promptkit::Transcript transcript;
};

/// Direct-ask variant of stage 1: one call, no refinement. Same parsing and
/// id assignment; exists for comparing the two prompting modes.
IoRequirementsOutcome extract_requirements_io(const ingest::ExtractedText& text,
                                              model::Provider& provider,
                                              const PipelineOptions& opts = {});

/// "R1. <text>" lines, the wire form requirements take in later stages.
std::string render_requirements(const schema::RequirementSet& set);

struct TestCasesOutcome {
  std::vector<schema::TestCase> test_cases;
  promptkit::RaTTrace trace;
};

/// Stage 2. Every requirement id must end up covered by at least one test
/// case; a coverage repair re-prompt runs once before CoverageGap is raised.
TestCasesOutcome generate_test_cases(const schema::RequirementSet& set,
                                     model::Provider& provider,
                                     const PipelineOptions& opts = {});

struct StoriesOutcome {
  std::vector<schema::UserStory> stories;
  promptkit::RaTTrace trace;
};

/// Stage 3. Stories are validated against the output contract; one repair
/// re-prompt, then SchemaInvalid.
StoriesOutcome generate_stories(const schema::RequirementSet& set,
                                model::Provider& provider,
                                const PipelineOptions& opts = {});

/// The whole pipeline over one document. Rejects documents whose noise
/// ratio is past refining. The result carries all three traces and run
/// metadata; persistence is the caller's concern.
schema::GenerationResult run_pipeline(const ingest::SourceDocument& doc,
                                      model::Provider& provider,
                                      const PipelineOptions& opts = {});

}  // namespace geneus::storygen

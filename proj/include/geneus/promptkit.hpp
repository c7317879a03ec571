#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "geneus/json.hpp"
#include "geneus/model.hpp"

// Prompting blocks. The central one is the refine-then-answer block: a first
// call rewrites the raw input into clean text, a second call runs the actual
// instruction over that refined text. Blocks compose into chains; every
// exchange lands in a transcript.

namespace geneus::promptkit {

struct PromptError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MissingBinding : PromptError {
  std::string placeholder;
  explicit MissingBinding(std::string name)
      : PromptError("no binding for placeholder {" + name + "}"),
        placeholder(std::move(name)) {}
};

/// Step chain aborted; `step` is 1-based, earlier outputs are preserved in
/// the transcript.
struct AbortedAtStep : PromptError {
  std::size_t step;
  AbortedAtStep(std::size_t step_, const std::string& detail)
      : PromptError("step " + std::to_string(step_) + " failed: " + detail),
        step(step_) {}
};

struct RefineFailed : PromptError {
  explicit RefineFailed(const std::string& detail)
      : PromptError("refine call failed: " + detail) {}
};

struct ThoughtFailed : PromptError {
  explicit ThoughtFailed(const std::string& detail)
      : PromptError("thought call failed: " + detail) {}
};

struct ChainBlockError : PromptError {
  std::size_t block;
  ChainBlockError(std::size_t block_, const std::string& detail)
      : PromptError("chain block " + std::to_string(block_) + " failed: " + detail),
        block(block_) {}
};

// ---------------- templates ----------------

struct PromptTemplate {
  std::string id;
  std::string instruction;
  std::set<std::string> placeholders;

  /// Scans `instruction` for {name} placeholders. "{{" and "}}" are literal
  /// braces; only [A-Za-z_][A-Za-z0-9_]* inside single braces is a placeholder.
  static PromptTemplate from_text(std::string id, std::string instruction);
};

/// Substitutes every placeholder; throws MissingBinding when one is unbound.
/// Extra bindings are ignored.
std::string render(const PromptTemplate& tpl,
                   const std::map<std::string, std::string>& bindings);

/// Named prompt texts. Compiled-in defaults cover every pipeline stage; a
/// directory of <id>.txt files can override or extend them.
class TemplateStore {
 public:
  static TemplateStore builtin();

  void load_directory(const std::string& dir);
  const PromptTemplate& get(const std::string& id) const;
  bool has(const std::string& id) const;
  /// Short content hash, recorded in run metadata so results are traceable
  /// to the exact prompt text that produced them.
  std::string version(const std::string& id) const;
  std::map<std::string, std::string> versions() const;

 private:
  std::map<std::string, PromptTemplate> templates_;
};

// ---------------- blocks ----------------

struct RequestParams {
  std::string model_id{"gpt-4-1106-preview"};
  double temperature{0.2};
  int max_output{2048};
  std::optional<std::int64_t> seed;
};

struct TranscriptStep {
  model::ModelRequest request;
  model::Completion completion;
};

struct Transcript {
  std::vector<TranscriptStep> steps;
  std::chrono::system_clock::time_point started_at{};
  std::chrono::system_clock::time_point finished_at{};
};

struct RaTTrace {
  model::ModelRequest refine_request;
  model::Completion refine_output;
  model::ModelRequest thought_request;
  model::Completion thought_output;
};

/// True when the refine output text appears verbatim inside the thought
/// request. Every block this module produces satisfies it.
bool context_threading_holds(const RaTTrace& trace);

/// Plain-text form of a request ("role: content" lines).
std::string request_text(const model::ModelRequest& request);

model::ModelRequest build_request(const std::string& instruction,
                                  const std::string& content,
                                  const RequestParams& params);

struct IoResult {
  model::Completion completion;
  Transcript transcript;
};

/// Single direct call: instruction as system message, input as user message.
IoResult run_io(model::Provider& provider, const std::string& instruction,
                const std::string& input, const RequestParams& params = {});

struct CotResult {
  model::Completion completion;
  Transcript transcript;
};

/// Runs `step_instructions` in order. Step 1 sees the original input; step i
/// sees the concatenated outputs of steps 1..i-1 (blank-line separated).
CotResult run_cot(model::Provider& provider, const std::string& input,
                  const std::vector<std::string>& step_instructions,
                  const RequestParams& params = {});

struct RatResult {
  model::Completion completion;
  RaTTrace trace;
};

const std::string& default_refine_instruction();

/// The two-step block: refine the input, then run the instruction over the
/// refined text. Exactly two provider calls, in that order.
RatResult run_rat(model::Provider& provider, const std::string& input,
                  const std::string& thought_instruction,
                  const RequestParams& params = {});
RatResult run_rat(model::Provider& provider, const std::string& input,
                  const std::string& thought_instruction,
                  const std::string& refine_instruction,
                  const RequestParams& params);

// ---------------- chains ----------------

struct OriginalInput {};
struct BlockOutput {
  std::size_t index;
};
using InputSelector = std::variant<OriginalInput, BlockOutput>;

struct ChainBlock {
  InputSelector input{OriginalInput{}};
  std::string thought_instruction;
};

struct ChainResult {
  std::vector<RatResult> blocks;
  Transcript transcript;
};

class Chain {
 public:
  /// Throws std::invalid_argument for an empty chain or a selector that
  /// points at the current or a later block.
  explicit Chain(std::vector<ChainBlock> blocks);

  ChainResult run(model::Provider& provider, const std::string& input,
                  const RequestParams& params = {}) const;

  std::size_t size() const { return blocks_.size(); }

 private:
  std::vector<ChainBlock> blocks_;
};

Chain compose_rat_chain(std::vector<ChainBlock> blocks);

// ---------------- persistence forms ----------------

Json to_json(const model::ModelRequest& request);
Json to_json(const model::Completion& completion);
Json to_json(const TranscriptStep& step);
Json to_json(const RaTTrace& trace);
/// `include_times=false` yields the determinism-comparable form.
Json transcript_to_json(const Transcript& t, bool include_times = true);

}  // namespace geneus::promptkit

#include "geneus/promptkit.hpp"

#include <filesystem>

#include "geneus/digest.hpp"
#include "geneus/util.hpp"

namespace geneus::promptkit {

namespace {

bool ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }

// Shared scanner for placeholder extraction and rendering. When `bindings`
// is null it only collects names; otherwise it substitutes.
std::string scan_template(const std::string& text,
                          const std::map<std::string, std::string>* bindings,
                          std::set<std::string>* names) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    char c = text[i];
    if (c == '{' && i + 1 < n && text[i + 1] == '{') {
      out.push_back('{');
      i += 2;
      continue;
    }
    if (c == '}' && i + 1 < n && text[i + 1] == '}') {
      out.push_back('}');
      i += 2;
      continue;
    }
    if (c == '{' && i + 1 < n && ident_start(text[i + 1])) {
      std::size_t j = i + 1;
      while (j < n && ident_char(text[j])) ++j;
      if (j < n && text[j] == '}') {
        std::string name = text.substr(i + 1, j - i - 1);
        if (names) names->insert(name);
        if (bindings) {
          auto it = bindings->find(name);
          if (it == bindings->end()) throw MissingBinding(name);
          out += it->second;
        }
        i = j + 1;
        continue;
      }
    }
    out.push_back(c);
    ++i;
  }
  return out;
}

constexpr const char* kRefine =
    "Rewrite the following text. Remove meaningless symbols and "
    "unrecognizable tokens, remove redundant information, and keep all "
    "requirements, constraints, and actors intact.";

constexpr const char* kExtractRequirements =
    "Extract all functional and non-functional requirements from the "
    "following text as two numbered lists.\n"
    "Respond with a single JSON object and nothing else, in exactly this "
    "form:\n"
    "{{\"functional\": [\"<requirement sentence>\", ...], \"nonfunctional\": "
    "[\"<requirement sentence>\", ...]}}\n"
    "Each entry must be one complete normative sentence. Use an empty array "
    "when a list has no entries.";

constexpr const char* kGenerateTestCases =
    "Generate test cases for the input requirements.\n"
    "Every requirement id must be covered by at least one test case.\n"
    "Respond with a single JSON array and nothing else. Each element must be "
    "an object in exactly this form:\n"
    "{{\"id\": \"T<number>\", \"story_ref\": \"<requirement id>\", \"title\": "
    "\"<short title>\", \"preconditions\": [\"<precondition>\", ...], "
    "\"steps\": [\"<step>\", ...], \"expected\": \"<expected result>\", "
    "\"kind\": \"functional\"}}\n"
    "Use kind \"functional\", \"negative\", or \"boundary\".";

constexpr const char* kGenerateStories =
    "Write one user story for each related group of the input requirements, "
    "and add deliverables to each user story.\n"
    "A user story must state who needs the feature, what the feature is, and "
    "why it is needed.\n"
    "Respond with a single JSON array and nothing else. Each element must be "
    "an object in exactly this form:\n"
    "{{\"story\": \"<one-sentence user story>\", \"who\": \"<actor>\", "
    "\"what\": \"<functionality>\", \"why\": \"<purpose>\", "
    "\"requirement_refs\": [\"<requirement id>\", ...], \"deliverables\": "
    "{{\"<deliverable key>\": {{\"definition_of_done\": \"<text>\", "
    "\"criteria\": [\"<criterion>\", ...]}}, ...}}}}\n"
    "Include these deliverable keys for every story: {deliverable_keys}.";

constexpr const char* kRepair =
    "Your previous reply could not be used: {issue}\n"
    "Reply again with only the corrected JSON and nothing else.";

}  // namespace

PromptTemplate PromptTemplate::from_text(std::string id, std::string instruction) {
  PromptTemplate tpl;
  tpl.id = std::move(id);
  tpl.instruction = std::move(instruction);
  scan_template(tpl.instruction, nullptr, &tpl.placeholders);
  return tpl;
}

std::string render(const PromptTemplate& tpl,
                   const std::map<std::string, std::string>& bindings) {
  return scan_template(tpl.instruction, &bindings, nullptr);
}

TemplateStore TemplateStore::builtin() {
  TemplateStore store;
  auto put = [&store](const char* id, const char* text) {
    store.templates_.emplace(id, PromptTemplate::from_text(id, text));
  };
  put("refine", kRefine);
  put("extract_requirements", kExtractRequirements);
  put("generate_test_cases", kGenerateTestCases);
  put("generate_stories", kGenerateStories);
  put("repair", kRepair);
  return store;
}

void TemplateStore::load_directory(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw PromptError("template directory not found: " + dir);
  }
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::string id = entry.path().stem().string();
    std::string text = util::read_file(entry.path().string());
    // Trailing newline from the editor is not part of the prompt.
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) {
      text.pop_back();
    }
    templates_[id] = PromptTemplate::from_text(id, text);
  }
}

const PromptTemplate& TemplateStore::get(const std::string& id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) throw PromptError("unknown template: " + id);
  return it->second;
}

bool TemplateStore::has(const std::string& id) const {
  return templates_.count(id) > 0;
}

std::string TemplateStore::version(const std::string& id) const {
  return digest::sha256_hex(get(id).instruction).substr(0, 8);
}

std::map<std::string, std::string> TemplateStore::versions() const {
  std::map<std::string, std::string> out;
  for (const auto& [id, tpl] : templates_) {
    out[id] = digest::sha256_hex(tpl.instruction).substr(0, 8);
  }
  return out;
}

// ---------------- blocks ----------------

bool context_threading_holds(const RaTTrace& trace) {
  if (trace.refine_output.text.empty()) return true;
  for (const auto& msg : trace.thought_request.messages) {
    if (msg.content.find(trace.refine_output.text) != std::string::npos) {
      return true;
    }
  }
  return false;
}

std::string request_text(const model::ModelRequest& request) {
  std::string out;
  for (const auto& msg : request.messages) {
    out += model::role_name(msg.role);
    out += ": ";
    out += msg.content;
    out += "\n";
  }
  return out;
}

model::ModelRequest build_request(const std::string& instruction,
                                  const std::string& content,
                                  const RequestParams& params) {
  model::ModelRequest req;
  req.messages.push_back({model::Role::system, instruction});
  req.messages.push_back({model::Role::user, content});
  req.model_id = params.model_id;
  req.temperature = params.temperature;
  req.max_output = params.max_output;
  req.seed = params.seed;
  model::validate(req);
  return req;
}

IoResult run_io(model::Provider& provider, const std::string& instruction,
                const std::string& input, const RequestParams& params) {
  if (input.empty()) throw std::invalid_argument("run_io: input is empty");
  IoResult result;
  result.transcript.started_at = std::chrono::system_clock::now();
  model::ModelRequest req = build_request(instruction, input, params);
  try {
    result.completion = provider.complete(req);
  } catch (const model::ProviderError& e) {
    model::Completion failed;
    failed.text = e.what();
    failed.finish_reason = model::FinishReason::error;
    result.transcript.steps.push_back({req, failed});
    result.transcript.finished_at = std::chrono::system_clock::now();
    throw;
  }
  result.transcript.steps.push_back({req, result.completion});
  result.transcript.finished_at = std::chrono::system_clock::now();
  return result;
}

CotResult run_cot(model::Provider& provider, const std::string& input,
                  const std::vector<std::string>& step_instructions,
                  const RequestParams& params) {
  if (input.empty()) throw std::invalid_argument("run_cot: input is empty");
  if (step_instructions.empty()) {
    throw std::invalid_argument("run_cot: needs at least one step");
  }
  CotResult result;
  result.transcript.started_at = std::chrono::system_clock::now();
  std::vector<std::string> outputs;
  for (std::size_t i = 0; i < step_instructions.size(); ++i) {
    std::string content;
    if (i == 0) {
      content = input;
    } else {
      for (std::size_t j = 0; j < outputs.size(); ++j) {
        if (j > 0) content += "\n\n";
        content += outputs[j];
      }
    }
    model::ModelRequest req = build_request(step_instructions[i], content, params);
    model::Completion completion;
    try {
      completion = provider.complete(req);
    } catch (const model::ProviderError& e) {
      model::Completion failed;
      failed.text = e.what();
      failed.finish_reason = model::FinishReason::error;
      result.transcript.steps.push_back({req, failed});
      result.transcript.finished_at = std::chrono::system_clock::now();
      // Nested so callers can still recognize the provider failure behind
      // the step abort.
      std::throw_with_nested(AbortedAtStep(i + 1, e.what()));
    }
    result.transcript.steps.push_back({req, completion});
    outputs.push_back(completion.text);
    result.completion = std::move(completion);
  }
  result.transcript.finished_at = std::chrono::system_clock::now();
  return result;
}

const std::string& default_refine_instruction() {
  static const std::string instruction = kRefine;
  return instruction;
}

RatResult run_rat(model::Provider& provider, const std::string& input,
                  const std::string& thought_instruction,
                  const RequestParams& params) {
  return run_rat(provider, input, thought_instruction,
                 default_refine_instruction(), params);
}

RatResult run_rat(model::Provider& provider, const std::string& input,
                  const std::string& thought_instruction,
                  const std::string& refine_instruction,
                  const RequestParams& params) {
  CotResult cot;
  try {
    cot = run_cot(provider, input, {refine_instruction, thought_instruction},
                  params);
  } catch (const AbortedAtStep& e) {
    if (e.step == 1) std::throw_with_nested(RefineFailed(e.what()));
    std::throw_with_nested(ThoughtFailed(e.what()));
  }
  RatResult result;
  result.completion = cot.completion;
  result.trace.refine_request = cot.transcript.steps[0].request;
  result.trace.refine_output = cot.transcript.steps[0].completion;
  result.trace.thought_request = cot.transcript.steps[1].request;
  result.trace.thought_output = cot.transcript.steps[1].completion;
  return result;
}

// ---------------- chains ----------------

Chain::Chain(std::vector<ChainBlock> blocks) : blocks_(std::move(blocks)) {
  if (blocks_.empty()) throw std::invalid_argument("chain has no blocks");
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (const auto* sel = std::get_if<BlockOutput>(&blocks_[i].input)) {
      if (sel->index >= i) {
        throw std::invalid_argument(
            "chain block " + std::to_string(i) +
            " selects output of block " + std::to_string(sel->index) +
            " which does not precede it");
      }
    }
  }
}

ChainResult Chain::run(model::Provider& provider, const std::string& input,
                       const RequestParams& params) const {
  ChainResult result;
  result.transcript.started_at = std::chrono::system_clock::now();
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const ChainBlock& block = blocks_[i];
    std::string block_input;
    if (std::holds_alternative<OriginalInput>(block.input)) {
      block_input = input;
    } else {
      block_input = result.blocks[std::get<BlockOutput>(block.input).index]
                        .completion.text;
    }
    RatResult rat;
    try {
      rat = run_rat(provider, block_input, block.thought_instruction, params);
    } catch (const PromptError& e) {
      result.transcript.finished_at = std::chrono::system_clock::now();
      std::throw_with_nested(ChainBlockError(i, e.what()));
    }
    result.transcript.steps.push_back({rat.trace.refine_request, rat.trace.refine_output});
    result.transcript.steps.push_back({rat.trace.thought_request, rat.trace.thought_output});
    result.blocks.push_back(std::move(rat));
  }
  result.transcript.finished_at = std::chrono::system_clock::now();
  return result;
}

Chain compose_rat_chain(std::vector<ChainBlock> blocks) {
  return Chain(std::move(blocks));
}

// ---------------- persistence forms ----------------

Json to_json(const model::ModelRequest& request) {
  Json j;
  j["model"] = request.model_id;
  j["temperature"] = request.temperature;
  j["max_output"] = request.max_output;
  if (request.seed) j["seed"] = *request.seed;
  Json msgs = Json::array();
  for (const auto& m : request.messages) {
    msgs.push_back({{"role", model::role_name(m.role)}, {"content", m.content}});
  }
  j["messages"] = std::move(msgs);
  return j;
}

Json to_json(const model::Completion& completion) {
  Json j;
  j["text"] = completion.text;
  j["finish_reason"] = model::finish_reason_name(completion.finish_reason);
  if (completion.usage) {
    j["usage"] = {{"prompt_tokens", completion.usage->prompt_tokens},
                  {"completion_tokens", completion.usage->completion_tokens}};
  }
  return j;
}

Json to_json(const TranscriptStep& step) {
  return Json{{"request", to_json(step.request)},
              {"completion", to_json(step.completion)}};
}

Json to_json(const RaTTrace& trace) {
  Json j;
  j["refine"] = Json{{"request", to_json(trace.refine_request)},
                     {"completion", to_json(trace.refine_output)}};
  j["thought"] = Json{{"request", to_json(trace.thought_request)},
                      {"completion", to_json(trace.thought_output)}};
  return j;
}

Json transcript_to_json(const Transcript& t, bool include_times) {
  Json j;
  if (include_times) {
    j["started_at"] = util::iso8601_utc(t.started_at);
    j["finished_at"] = util::iso8601_utc(t.finished_at);
  }
  Json steps = Json::array();
  for (const auto& s : t.steps) steps.push_back(to_json(s));
  j["steps"] = std::move(steps);
  return j;
}

}  // namespace geneus::promptkit

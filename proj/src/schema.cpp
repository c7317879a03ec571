#include "geneus/schema.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "geneus/util.hpp"

namespace geneus::schema {

// ---------------- reply parsing ----------------

namespace {

// Blanks out code-fence marker lines so a fenced reply scans the same as a
// bare one.
std::string drop_fence_lines(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    std::size_t eol = raw.find('\n', pos);
    std::string line = raw.substr(pos, eol == std::string::npos ? std::string::npos
                                                                : eol - pos);
    std::size_t ws = 0;
    while (ws < line.size() && (line[ws] == ' ' || line[ws] == '\t')) ++ws;
    bool fence = line.compare(ws, 3, "```") == 0;
    if (!fence) out += line;
    if (eol == std::string::npos) break;
    out.push_back('\n');
    pos = eol + 1;
  }
  return out;
}

// [start, end) of the outermost balanced object/array, or npos when the
// text never balances.
std::pair<std::size_t, std::size_t> balanced_span(const std::string& s) {
  std::size_t start = s.find_first_of("{[");
  if (start == std::string::npos) return {std::string::npos, std::string::npos};
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = start; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{' || c == '[') {
      ++depth;
    } else if (c == '}' || c == ']') {
      --depth;
      if (depth == 0) return {start, i + 1};
    }
  }
  return {start, std::string::npos};
}

std::string drop_trailing_commas(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      out.push_back(c);
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') {
      in_string = true;
      out.push_back(c);
      continue;
    }
    if (c == ',') {
      std::size_t j = i + 1;
      while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j]))) ++j;
      if (j < s.size() && (s[j] == '}' || s[j] == ']')) continue;  // drop it
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace

Json parse_llm_json(const std::string& raw) {
  std::string text = drop_fence_lines(raw);
  auto [start, end] = balanced_span(text);
  if (start == std::string::npos) throw NoJsonFound();
  std::string candidate = end == std::string::npos
                              ? text.substr(start)
                              : text.substr(start, end - start);
  candidate = drop_trailing_commas(candidate);
  try {
    return Json::parse(candidate);
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedJson(e.byte, e.what());
  }
}

// ---------------- artifact types ----------------

const Deliverable* DeliverableSet::find(const std::string& key) const {
  for (const auto& d : items) {
    if (d.key == key) return &d;
  }
  return nullptr;
}

bool DeliverableSet::insert(Deliverable d) {
  if (find(d.key)) return false;
  items.push_back(std::move(d));
  return true;
}

std::vector<std::string> DeliverableSet::keys() const {
  std::vector<std::string> out;
  out.reserve(items.size());
  for (const auto& d : items) out.push_back(d.key);
  return out;
}

const std::vector<std::string>& default_deliverable_keys() {
  static const std::vector<std::string> keys = {
      "architecture_design", "database_schema_design", "unit_tests",
      "user_training_documentation", "production_support_plan"};
  return keys;
}

const char* test_kind_name(TestKind k) {
  switch (k) {
    case TestKind::functional: return "functional";
    case TestKind::negative: return "negative";
    case TestKind::boundary: return "boundary";
  }
  return "functional";
}

const char* requirement_kind_name(RequirementKind k) {
  return k == RequirementKind::functional ? "functional" : "nonfunctional";
}

std::vector<std::string> RequirementSet::ids() const {
  std::vector<std::string> out;
  out.reserve(requirements.size());
  for (const auto& r : requirements) out.push_back(r.id);
  return out;
}

// ---------------- validation ----------------

namespace {

void add(std::vector<Violation>& out, std::string path, std::string rule,
         std::string message) {
  out.push_back(Violation{std::move(path), std::move(rule), std::move(message)});
}

// Returns the value for the first alias present and reports the key it was
// found under, so violation paths mirror the actual document.
const Json* find_alias(const Json& obj, std::initializer_list<const char*> names,
                       std::string* used_key) {
  for (const char* name : names) {
    auto it = obj.find(name);
    if (it != obj.end()) {
      if (used_key) *used_key = name;
      return &*it;
    }
  }
  return nullptr;
}

bool nonempty_string(const Json& j) {
  return j.is_string() && !util::trim(j.get<std::string>()).empty();
}

bool valid_deliverable_key(const std::string& key) {
  if (key.empty()) return false;
  if (!(key[0] >= 'a' && key[0] <= 'z')) return false;
  for (char c : key) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    if (!ok) return false;
  }
  return true;
}

void check_string_array(const Json& j, const std::string& path,
                        const std::string& empty_rule, bool allow_empty,
                        std::vector<Violation>& out) {
  if (!j.is_array()) {
    add(out, path, "wrong-type", "expected an array of strings");
    return;
  }
  if (j.empty() && !allow_empty) {
    add(out, path, empty_rule, "array must not be empty");
    return;
  }
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!nonempty_string(j[i])) {
      add(out, path + "[" + std::to_string(i) + "]", empty_rule,
          "entry must be a non-empty string");
    }
  }
}

}  // namespace

std::vector<Violation> validate_story(
    const Json& story, const std::string& path_prefix,
    const std::vector<std::string>& known_requirement_ids) {
  std::vector<Violation> out;
  if (!story.is_object()) {
    add(out, path_prefix, "wrong-type", "story must be an object");
    return out;
  }

  std::string story_key;
  const Json* sentence = find_alias(story, {"story", "User Story", "user_story"},
                                    &story_key);
  if (!sentence) {
    add(out, path_prefix + ".story", "required-field",
        "story sentence is missing");
  } else if (!nonempty_string(*sentence)) {
    add(out, path_prefix + "." + story_key, "empty-text",
        "story sentence must be a non-empty string");
  }

  for (const char* field : {"who", "what", "why"}) {
    auto it = story.find(field);
    if (it != story.end() && !it->is_string()) {
      add(out, path_prefix + "." + field, "wrong-type", "expected a string");
    }
  }

  auto refs = story.find("requirement_refs");
  if (refs != story.end()) {
    if (!refs->is_array()) {
      add(out, path_prefix + ".requirement_refs", "wrong-type",
          "expected an array of requirement ids");
    } else {
      for (std::size_t i = 0; i < refs->size(); ++i) {
        const Json& ref = (*refs)[i];
        std::string ref_path =
            path_prefix + ".requirement_refs[" + std::to_string(i) + "]";
        if (!nonempty_string(ref)) {
          add(out, ref_path, "empty-text", "ref must be a non-empty string");
        } else if (!known_requirement_ids.empty()) {
          const std::string id = ref.get<std::string>();
          if (std::find(known_requirement_ids.begin(),
                        known_requirement_ids.end(),
                        id) == known_requirement_ids.end()) {
            add(out, ref_path, "ref-unknown",
                "requirement id " + id + " is not in the requirements list");
          }
        }
      }
    }
  }

  std::string deliv_key;
  const Json* deliverables =
      find_alias(story, {"deliverables", "Deliverables"}, &deliv_key);
  if (!deliverables) {
    add(out, path_prefix + ".deliverables", "required-field",
        "deliverables are missing");
    return out;
  }
  std::string dpath = path_prefix + "." + deliv_key;
  if (!deliverables->is_object()) {
    add(out, dpath, "wrong-type", "deliverables must be an object");
    return out;
  }
  if (deliverables->empty()) {
    add(out, dpath, "empty-deliverables", "a story needs at least one deliverable");
    return out;
  }
  for (auto it = deliverables->begin(); it != deliverables->end(); ++it) {
    std::string key = it.key();
    std::string kpath = dpath + "." + key;
    if (!valid_deliverable_key(key)) {
      add(out, kpath, "bad-key",
          "deliverable keys must be lower_snake_case identifiers");
    }
    const Json& d = it.value();
    if (!d.is_object()) {
      add(out, kpath, "wrong-type", "deliverable must be an object");
      continue;
    }
    auto dod = d.find("definition_of_done");
    if (dod == d.end()) {
      add(out, kpath + ".definition_of_done", "required-field",
          "definition_of_done is missing");
    } else if (!nonempty_string(*dod)) {
      add(out, kpath + ".definition_of_done", "empty-text",
          "definition_of_done must be a non-empty string");
    }
    auto criteria = d.find("criteria");
    if (criteria == d.end()) {
      add(out, kpath + ".criteria", "required-field", "criteria are missing");
    } else {
      check_string_array(*criteria, kpath + ".criteria", "empty-criteria",
                         /*allow_empty=*/false, out);
    }
  }
  return out;
}

std::vector<Violation> validate_result(const Json& parsed) {
  std::vector<Violation> out;
  if (!parsed.is_object()) {
    add(out, "$", "wrong-type", "result must be a JSON object");
    return out;
  }

  for (const char* key : {"requirements", "stories", "test_cases"}) {
    auto it = parsed.find(key);
    if (it == parsed.end()) {
      add(out, std::string("$.") + key, "required-field",
          std::string(key) + " array is missing");
    } else if (!it->is_array()) {
      add(out, std::string("$.") + key, "wrong-type", "expected an array");
    }
  }
  if (!parsed.contains("metadata")) {
    add(out, "$.metadata", "required-field", "metadata object is missing");
  } else if (!parsed["metadata"].is_object()) {
    add(out, "$.metadata", "wrong-type", "metadata must be an object");
  }

  std::vector<std::string> requirement_ids;
  if (parsed.contains("requirements") && parsed["requirements"].is_array()) {
    const Json& reqs = parsed["requirements"];
    std::set<std::string> seen;
    for (std::size_t i = 0; i < reqs.size(); ++i) {
      std::string path = "$.requirements[" + std::to_string(i) + "]";
      const Json& r = reqs[i];
      if (!r.is_object()) {
        add(out, path, "wrong-type", "requirement must be an object");
        continue;
      }
      auto id = r.find("id");
      if (id == r.end() || !nonempty_string(*id)) {
        add(out, path + ".id", id == r.end() ? "required-field" : "empty-text",
            "requirement id must be a non-empty string");
      } else {
        std::string idv = id->get<std::string>();
        if (!seen.insert(idv).second) {
          add(out, path + ".id", "duplicate-id",
              "requirement id " + idv + " appears more than once");
        }
        requirement_ids.push_back(idv);
      }
      auto text = r.find("text");
      if (text == r.end() || !nonempty_string(*text)) {
        add(out, path + ".text", text == r.end() ? "required-field" : "empty-text",
            "requirement text must be a non-empty string");
      }
      auto kind = r.find("kind");
      if (kind == r.end()) {
        add(out, path + ".kind", "required-field", "requirement kind is missing");
      } else if (!kind->is_string() ||
                 (kind->get<std::string>() != "functional" &&
                  kind->get<std::string>() != "nonfunctional")) {
        add(out, path + ".kind", "invalid-kind",
            "kind must be functional or nonfunctional");
      }
    }
  }

  if (parsed.contains("stories") && parsed["stories"].is_array()) {
    const Json& stories = parsed["stories"];
    for (std::size_t i = 0; i < stories.size(); ++i) {
      auto sub = validate_story(stories[i], "$.stories[" + std::to_string(i) + "]",
                                requirement_ids);
      out.insert(out.end(), sub.begin(), sub.end());
    }
  }

  if (parsed.contains("test_cases") && parsed["test_cases"].is_array()) {
    const Json& cases = parsed["test_cases"];
    std::set<std::string> seen;
    for (std::size_t i = 0; i < cases.size(); ++i) {
      std::string path = "$.test_cases[" + std::to_string(i) + "]";
      const Json& t = cases[i];
      if (!t.is_object()) {
        add(out, path, "wrong-type", "test case must be an object");
        continue;
      }
      auto id = t.find("id");
      if (id == t.end() || !nonempty_string(*id)) {
        add(out, path + ".id", id == t.end() ? "required-field" : "empty-text",
            "test case id must be a non-empty string");
      } else if (!seen.insert(id->get<std::string>()).second) {
        add(out, path + ".id", "duplicate-id",
            "test case id " + id->get<std::string>() + " appears more than once");
      }
      auto ref = t.find("story_ref");
      if (ref == t.end() || !nonempty_string(*ref)) {
        add(out, path + ".story_ref",
            ref == t.end() ? "required-field" : "empty-text",
            "story_ref must be a non-empty string");
      } else if (!requirement_ids.empty()) {
        std::string refv = ref->get<std::string>();
        if (std::find(requirement_ids.begin(), requirement_ids.end(), refv) ==
            requirement_ids.end()) {
          add(out, path + ".story_ref", "ref-unknown",
              "story_ref " + refv + " does not match any requirement id");
        }
      }
      auto title = t.find("title");
      if (title == t.end() || !nonempty_string(*title)) {
        add(out, path + ".title", title == t.end() ? "required-field" : "empty-text",
            "test case title must be a non-empty string");
      }
      auto pre = t.find("preconditions");
      if (pre != t.end()) {
        check_string_array(*pre, path + ".preconditions", "empty-text",
                           /*allow_empty=*/true, out);
      }
      auto steps = t.find("steps");
      if (steps == t.end()) {
        add(out, path + ".steps", "required-field", "steps are missing");
      } else {
        check_string_array(*steps, path + ".steps", "empty-steps",
                           /*allow_empty=*/false, out);
      }
      auto expected = t.find("expected");
      if (expected == t.end() || !nonempty_string(*expected)) {
        add(out, path + ".expected",
            expected == t.end() ? "required-field" : "empty-expected",
            "expected result must be a non-empty string");
      }
      auto kind = t.find("kind");
      if (kind != t.end()) {
        bool ok = kind->is_string() && (kind->get<std::string>() == "functional" ||
                                        kind->get<std::string>() == "negative" ||
                                        kind->get<std::string>() == "boundary");
        if (!ok) {
          add(out, path + ".kind", "invalid-kind",
              "kind must be functional, negative, or boundary");
        }
      }
    }
  }

  if (parsed.contains("metadata") && parsed["metadata"].is_object()) {
    const Json& m = parsed["metadata"];
    for (const char* key : {"model_id", "started_at", "finished_at",
                            "source_digest", "run_id"}) {
      auto it = m.find(key);
      if (it != m.end() && !it->is_string()) {
        add(out, std::string("$.metadata.") + key, "wrong-type",
            "expected a string");
      }
    }
    auto temp = m.find("temperature");
    if (temp != m.end() && !temp->is_number()) {
      add(out, "$.metadata.temperature", "wrong-type", "expected a number");
    }
    auto tv = m.find("template_versions");
    if (tv != m.end() && !tv->is_object()) {
      add(out, "$.metadata.template_versions", "wrong-type",
          "expected an object");
    }
  }

  return out;
}

// ---------------- conversions ----------------

namespace {

std::vector<std::string> string_array(const Json& j) {
  std::vector<std::string> out;
  if (!j.is_array()) return out;
  for (const auto& item : j) {
    if (item.is_string()) out.push_back(item.get<std::string>());
  }
  return out;
}

TestKind test_kind_from_name(const std::string& name) {
  if (name == "negative") return TestKind::negative;
  if (name == "boundary") return TestKind::boundary;
  return TestKind::functional;
}

}  // namespace

Json to_json(const Requirement& r) {
  return Json{{"id", r.id}, {"text", r.text}, {"kind", requirement_kind_name(r.kind)}};
}

Json to_json(const UserStory& s) {
  Json j;
  j["story"] = s.story;
  j["who"] = s.who;
  j["what"] = s.what;
  j["why"] = s.why;
  j["requirement_refs"] = s.requirement_refs;
  Json d = Json::object();
  for (const auto& item : s.deliverables.items) {
    d[item.key] = Json{{"definition_of_done", item.definition_of_done},
                       {"criteria", item.criteria}};
  }
  j["deliverables"] = std::move(d);
  return j;
}

Json to_json(const TestCase& t) {
  Json j;
  j["id"] = t.id;
  j["story_ref"] = t.story_ref;
  j["title"] = t.title;
  j["preconditions"] = t.preconditions;
  j["steps"] = t.steps;
  j["expected"] = t.expected;
  j["kind"] = test_kind_name(t.kind);
  return j;
}

Json to_json(const RunMetadata& m) {
  Json j;
  j["model_id"] = m.model_id;
  j["temperature"] = m.temperature;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  Json tv = Json::object();
  for (const auto& [id, ver] : m.template_versions) tv[id] = ver;
  j["template_versions"] = std::move(tv);
  j["source_digest"] = m.source_digest;
  if (!m.run_id.empty()) j["run_id"] = m.run_id;
  return j;
}

Json result_to_json(const GenerationResult& r) {
  Json j;
  Json reqs = Json::array();
  for (const auto& req : r.requirements.requirements) reqs.push_back(to_json(req));
  j["requirements"] = std::move(reqs);
  Json stories = Json::array();
  for (const auto& s : r.stories) stories.push_back(to_json(s));
  j["stories"] = std::move(stories);
  Json cases = Json::array();
  for (const auto& t : r.test_cases) cases.push_back(to_json(t));
  j["test_cases"] = std::move(cases);
  j["metadata"] = to_json(r.run_metadata);
  return j;
}

Requirement requirement_from_json(const Json& j, std::size_t fallback_index) {
  Requirement r;
  if (j.is_string()) {
    r.id = "R" + std::to_string(fallback_index + 1);
    r.text = j.get<std::string>();
    return r;
  }
  r.id = j.value("id", "");
  if (r.id.empty()) r.id = "R" + std::to_string(fallback_index + 1);
  r.text = j.value("text", j.value("requirement", ""));
  r.kind = j.value("kind", "functional") == "nonfunctional"
               ? RequirementKind::nonfunctional
               : RequirementKind::functional;
  return r;
}

UserStory story_from_json(const Json& j) {
  UserStory s;
  if (const Json* sentence = find_alias(j, {"story", "User Story", "user_story"}, nullptr)) {
    if (sentence->is_string()) s.story = sentence->get<std::string>();
  }
  s.who = j.value("who", "");
  s.what = j.value("what", "");
  s.why = j.value("why", "");
  if (j.contains("requirement_refs")) {
    s.requirement_refs = string_array(j["requirement_refs"]);
  }
  if (const Json* deliverables = find_alias(j, {"deliverables", "Deliverables"}, nullptr)) {
    if (deliverables->is_object()) {
      for (auto it = deliverables->begin(); it != deliverables->end(); ++it) {
        Deliverable d;
        d.key = it.key();
        if (it.value().is_object()) {
          d.definition_of_done = it.value().value("definition_of_done", "");
          if (it.value().contains("criteria")) {
            d.criteria = string_array(it.value()["criteria"]);
          }
        }
        s.deliverables.insert(std::move(d));
      }
    }
  }
  return s;
}

TestCase test_case_from_json(const Json& j, std::size_t fallback_index) {
  TestCase t;
  t.id = j.value("id", "");
  if (t.id.empty()) t.id = "T" + std::to_string(fallback_index + 1);
  t.story_ref = j.value("story_ref",
                        j.value("requirement_ref", j.value("ref", "")));
  t.title = j.value("title", "");
  if (j.contains("preconditions")) t.preconditions = string_array(j["preconditions"]);
  if (j.contains("steps")) t.steps = string_array(j["steps"]);
  t.expected = j.value("expected", j.value("expected_result", ""));
  t.kind = test_kind_from_name(j.value("kind", "functional"));
  return t;
}

RunMetadata metadata_from_json(const Json& j) {
  RunMetadata m;
  m.model_id = j.value("model_id", "");
  m.temperature = j.value("temperature", 0.0);
  m.started_at = j.value("started_at", "");
  m.finished_at = j.value("finished_at", "");
  m.source_digest = j.value("source_digest", "");
  m.run_id = j.value("run_id", "");
  if (j.contains("template_versions") && j["template_versions"].is_object()) {
    for (auto it = j["template_versions"].begin();
         it != j["template_versions"].end(); ++it) {
      if (it.value().is_string()) {
        m.template_versions[it.key()] = it.value().get<std::string>();
      }
    }
  }
  return m;
}

GenerationResult result_from_json(const Json& j) {
  GenerationResult r;
  if (j.contains("requirements") && j["requirements"].is_array()) {
    const Json& reqs = j["requirements"];
    for (std::size_t i = 0; i < reqs.size(); ++i) {
      r.requirements.requirements.push_back(requirement_from_json(reqs[i], i));
    }
  }
  if (j.contains("stories") && j["stories"].is_array()) {
    for (const auto& s : j["stories"]) r.stories.push_back(story_from_json(s));
  }
  if (j.contains("test_cases") && j["test_cases"].is_array()) {
    const Json& cases = j["test_cases"];
    for (std::size_t i = 0; i < cases.size(); ++i) {
      r.test_cases.push_back(test_case_from_json(cases[i], i));
    }
  }
  if (j.contains("metadata") && j["metadata"].is_object()) {
    r.run_metadata = metadata_from_json(j["metadata"]);
    r.requirements.source_digest = r.run_metadata.source_digest;
  }
  return r;
}

std::string serialize(const GenerationResult& r) {
  return result_to_json(r).dump(4) + "\n";
}

void derive_who_what_why(UserStory& story) {
  const std::string lower = util::to_lower(story.story);
  std::size_t who_start = 0;
  if (lower.rfind("as a ", 0) == 0) {
    who_start = 5;
  } else if (lower.rfind("as an ", 0) == 0) {
    who_start = 6;
  } else {
    return;
  }
  std::size_t comma = story.story.find(',', who_start);
  if (comma == std::string::npos) return;
  if (story.who.empty()) {
    story.who = util::trim(story.story.substr(who_start, comma - who_start));
  }
  std::size_t want = lower.find("i want ", comma);
  if (want == std::string::npos) return;
  std::size_t what_start = want + 7;
  std::size_t so_that = lower.find("so that ", what_start);
  std::size_t what_end = so_that == std::string::npos ? story.story.size() : so_that;
  std::string what = util::trim(story.story.substr(what_start, what_end - what_start));
  while (!what.empty() && (what.back() == ',' || what.back() == '.')) what.pop_back();
  if (story.what.empty()) story.what = what;
  if (so_that != std::string::npos && story.why.empty()) {
    std::string why = util::trim(story.story.substr(so_that + 8));
    while (!why.empty() && why.back() == '.') why.pop_back();
    story.why = why;
  }
}

}  // namespace geneus::schema

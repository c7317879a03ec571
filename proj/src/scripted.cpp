#include "geneus/scripted.hpp"

#include <vector>

#include "geneus/json.hpp"
#include "geneus/schema.hpp"
#include "geneus/util.hpp"

namespace geneus::scripted {

Stage classify(const model::ModelRequest& request) {
  std::string instruction;
  for (const auto& m : request.messages) {
    if (m.role == model::Role::system) {
      instruction = m.content;
      break;
    }
  }
  if (instruction.find("Rewrite the following text") != std::string::npos) {
    return Stage::refine;
  }
  if (instruction.find("Extract all functional") != std::string::npos) {
    return Stage::extract;
  }
  if (instruction.find("Generate test cases") != std::string::npos) {
    return Stage::test_cases;
  }
  if (instruction.find("add deliverables to each user story") != std::string::npos) {
    return Stage::stories;
  }
  return Stage::unknown;
}

bool is_requirements_listing(const std::string& content) {
  std::string trimmed = util::trim(content);
  return trimmed.rfind("R1. ", 0) == 0;
}

// ---------------- insulin sample ----------------

const std::vector<std::string>& insulin_requirements_refined() {
  static const std::vector<std::string> items = {
      "The system must collect real-time data from a sensor to monitor blood "
      "sugar levels.",
      "The software must calculate the required amount of insulin based on "
      "the current blood sugar level.",
      "The system should be able to control the insulin pump to deliver the "
      "calculated dose of insulin to the user.",
      "The software must have mechanisms in place to ensure the correct "
      "amount of insulin is delivered accurately.",
      "The system should be able to send signals to the pump promptly when "
      "insulin delivery is required.",
      "The software must have fail-safe mechanisms to prevent over or under "
      "delivery of insulin.",
      "The system should provide alerts or notifications to the user in case "
      "of any issues or failures in the insulin delivery process.",
      "The software must be designed to operate reliably to ensure the "
      "health and safety of the user.",
      "The system should have backup systems in place to ensure continuous "
      "operation in case of any failures."};
  return items;
}

const std::vector<std::string>& insulin_requirements_direct() {
  static const std::vector<std::string> items = {
      "The system shall collect information from a sensor to monitor blood "
      "sugar levels.",
      "The system shall calculate the required dose of insulin based on the "
      "blood sugar level and time since the last insulin injection.",
      "The system shall control the pump to deliver the calculated dose of "
      "insulin to the user.",
      "The system shall ensure that the pump delivers the correct amount of "
      "insulin in response to the controller's signals.",
      "The system shall be able to deliver insulin in units, with each unit "
      "corresponding to a single pulse from the controller.",
      "The system shall be available to deliver insulin when required to the "
      "user.",
      "The system shall perform reliably to maintain the user's blood sugar "
      "levels within a safe range.",
      "The system shall be designed and implemented to ensure the safety of "
      "the user's health by preventing incorrect insulin delivery."};
  return items;
}

namespace {

using geneus::Json;

const char* kInsulinRefined =
    "Diabetics currently measure blood sugar with a meter and work out their "
    "own insulin dose, which risks dangerously low or high blood glucose. "
    "Miniaturized sensors now make automated insulin delivery possible: the "
    "system monitors blood sugar levels in real time and delivers an "
    "appropriate dose of insulin when required.";

const char* kMentcareRefined =
    "MentCare is a patient information system for mental health care used in "
    "clinics. It stores patient records, consultations, conditions, and "
    "treatments in a centralized database, with local copies available when "
    "clinics are disconnected. Clinicians can create, edit, and view patient "
    "records and see summaries of patient history. The system monitors "
    "patient records and issues warnings when possible problems are "
    "detected, such as missed appointments or overdue legally required "
    "checks for sectioned patients. It generates monthly management reports "
    "on patients treated, admissions and discharges, sectioned patients, and "
    "prescribed drug costs. Patient information must remain confidential and "
    "available only to authorized medical staff and the patient. The system "
    "is safety-critical: it should warn staff about potentially suicidal or "
    "dangerous patients and must remain available so that correct medication "
    "can always be prescribed.";

std::string requirements_json(const std::vector<std::string>& functional,
                              const std::vector<std::string>& nonfunctional) {
  Json j;
  j["functional"] = functional;
  j["nonfunctional"] = nonfunctional;
  return j.dump(2);
}

// Parses "R<n>. text" lines out of a rendered requirement list.
std::vector<std::pair<std::string, std::string>> parse_listing(
    const std::string& content) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const std::string& line : util::split_lines(content)) {
    std::string trimmed = util::trim(line);
    if (trimmed.size() < 4 || trimmed[0] != 'R') continue;
    std::size_t pos = 1;
    while (pos < trimmed.size() && trimmed[pos] >= '0' && trimmed[pos] <= '9') ++pos;
    if (pos == 1 || pos + 1 >= trimmed.size() || trimmed[pos] != '.') continue;
    out.emplace_back(trimmed.substr(0, pos), util::trim(trimmed.substr(pos + 1)));
  }
  return out;
}

Json deliverable(const std::string& dod, std::vector<std::string> criteria) {
  Json d;
  d["definition_of_done"] = dod;
  d["criteria"] = std::move(criteria);
  return d;
}

// The standard five deliverables, phrased around a topic.
Json default_deliverables(const std::string& topic) {
  Json d = Json::object();
  d["architecture_design"] = deliverable(
      "Architecture design covering " + topic + " completed and reviewed.",
      {"Design document stored in the shared repository",
       "Design reviewed and approved by the development team",
       "Design addresses the referenced requirements"});
  d["database_schema_design"] = deliverable(
      "Database schema for " + topic + " designed and implemented.",
      {"Schema supports all data captured by this story",
       "Schema reviewed by the database administrator",
       "Migration scripts tested on a staging copy"});
  d["unit_tests"] = deliverable(
      "Unit tests written and passing for " + topic + ".",
      {"Tests cover the main flow and error paths",
       "Tests run in the automated build",
       "Coverage meets the agreed threshold"});
  d["user_training_documentation"] = deliverable(
      "User documentation written for " + topic + ".",
      {"Documentation covers every user-facing function of this story",
       "Documentation reviewed by stakeholders",
       "Documentation published where users can reach it"});
  d["production_support_plan"] = deliverable(
      "Support plan prepared for operating " + topic + " in production.",
      {"Monitoring and alerting defined",
       "Failure and backup procedures documented",
       "Plan approved by the operations team"});
  return d;
}

Json story(const std::string& sentence, const std::string& who,
           const std::string& what, const std::string& why,
           std::vector<std::string> refs, Json deliverables) {
  Json s;
  s["story"] = sentence;
  s["who"] = who;
  s["what"] = what;
  s["why"] = why;
  s["requirement_refs"] = std::move(refs);
  s["deliverables"] = std::move(deliverables);
  return s;
}

Json test_case(const std::string& id, const std::string& ref,
               const std::string& title, std::vector<std::string> steps,
               const std::string& expected, const std::string& kind) {
  Json t;
  t["id"] = id;
  t["story_ref"] = ref;
  t["title"] = title;
  t["preconditions"] = Json::array({"System is installed and powered on."});
  t["steps"] = std::move(steps);
  t["expected"] = expected;
  t["kind"] = kind;
  return t;
}

// ---------------- insulin answers ----------------

std::string insulin_test_cases_json() {
  Json arr = Json::array();
  arr.push_back(test_case(
      "T1", "R1", "Sensor readings reach the controller",
      {"Attach the glucose sensor to the test harness",
       "Feed a known glucose profile into the sensor",
       "Read the values received by the controller"},
      "Controller receives each reading within one sampling interval.",
      "functional"));
  arr.push_back(test_case(
      "T2", "R2", "Dose computed from current blood sugar",
      {"Inject a sequence of blood sugar levels",
       "Record the dose computed for each level"},
      "Computed dose matches the dosage table for the current level only.",
      "functional"));
  arr.push_back(test_case(
      "T3", "R3", "Pump delivers the commanded dose",
      {"Command a dose of 3 units", "Measure the volume delivered by the pump"},
      "Delivered volume corresponds to 3 unit pulses.", "functional"));
  arr.push_back(test_case(
      "T4", "R4", "Delivered amount matches command at the limits",
      {"Command the minimum dose and measure delivery",
       "Command the maximum dose and measure delivery"},
      "Measured delivery stays within tolerance at both limits.", "boundary"));
  arr.push_back(test_case(
      "T5", "R5", "Delivery signal latency",
      {"Raise blood sugar above the dosing threshold",
       "Measure the time until the pump signal is sent"},
      "Signal is sent within the specified latency budget.", "functional"));
  arr.push_back(test_case(
      "T6", "R6", "Fail-safe blocks a runaway dose",
      {"Simulate a controller fault that requests repeated maximum doses"},
      "Fail-safe interlock blocks delivery and raises an alarm.", "negative"));
  arr.push_back(test_case(
      "T7", "R7", "User alerted on delivery failure",
      {"Block the pump line", "Command a dose"},
      "User receives an alert identifying the delivery failure.", "negative"));
  arr.push_back(test_case(
      "T8", "R8", "Sustained operation soak test",
      {"Run the simulated patient profile for 72 hours"},
      "No missed doses, no crashes, and logs show continuous operation.",
      "functional"));
  arr.push_back(test_case(
      "T9", "R9", "Backup takes over on primary failure",
      {"Fail the primary controller during an active delivery cycle"},
      "Backup system continues monitoring and delivery without interruption.",
      "negative"));
  return arr.dump(2);
}

std::string insulin_stories_json() {
  Json arr = Json::array();
  arr.push_back(story(
      "As a diabetic patient, I want the system to monitor my blood sugar "
      "through a sensor and compute the insulin dose from the current "
      "reading, so that my dose always reflects my present condition.",
      "diabetic patient",
      "monitor blood sugar through a sensor and compute the dose from the "
      "current reading",
      "the dose always reflects the patient's present condition",
      {"R1", "R2"}, default_deliverables("real-time glucose monitoring")));
  arr.push_back(story(
      "As a diabetic patient, I want the controller to drive the pump "
      "accurately and promptly whenever insulin is required, so that I "
      "receive the right dose at the right time.",
      "diabetic patient",
      "drive the pump accurately and promptly whenever insulin is required",
      "the patient receives the right dose at the right time", {"R3", "R4", "R5"},
      default_deliverables("insulin delivery control")));
  arr.push_back(story(
      "As a clinician, I want fail-safe mechanisms, alerts, and backup "
      "operation built into the delivery system, so that a component failure "
      "cannot endanger the patient.",
      "clinician",
      "fail-safe mechanisms, alerts, and backup operation in the delivery "
      "system",
      "a component failure cannot endanger the patient", {"R6", "R7", "R8", "R9"},
      default_deliverables("delivery safety mechanisms")));
  return arr.dump(2);
}

// ---------------- MentCare answers ----------------

std::string mentcare_requirements_json() {
  return requirements_json(
      {"The system shall allow clinicians to create, edit, and view patient "
       "records.",
       "The system shall provide summaries of patient history so that "
       "doctors new to a patient can quickly learn the key problems and "
       "treatments.",
       "The system shall monitor patient records and issue warnings if "
       "possible problems are detected.",
       "The system shall track sectioned patients and ensure that legally "
       "required checks are carried out at the right time.",
       "The system shall generate monthly management reports covering "
       "patients treated, admissions and discharges, sectioned patients, and "
       "prescribed drug costs.",
       "The system shall maintain local copies of patient records for use "
       "when a clinic has no secure network connection.",
       "The system shall warn medical staff about potentially suicidal or "
       "dangerous patients."},
      {"Patient information shall be confidential and disclosed only to "
       "authorized medical staff and the patient.",
       "The system shall be available when needed so that patient safety is "
       "not compromised."});
}

std::string mentcare_test_cases_json() {
  Json arr = Json::array();
  arr.push_back(test_case(
      "T1", "R1", "Create, edit, and view a patient record",
      {"Log in as a clinician", "Create a record for a new patient",
       "Edit the record and save", "Open the record again"},
      "All changes are stored and shown when the record is viewed.",
      "functional"));
  arr.push_back(test_case(
      "T2", "R2", "History summary for an unfamiliar patient",
      {"Open a patient with an existing treatment history",
       "Open the summary view"},
      "Summary lists key problems and prescribed treatments.", "functional"));
  arr.push_back(test_case(
      "T3", "R3", "Warning for a missed appointment pattern",
      {"Load a patient who has not seen a doctor for the warning interval",
       "Run the monitoring pass"},
      "A warning is issued for the patient.", "functional"));
  arr.push_back(test_case(
      "T4", "R4", "Sectioned patient check reminder",
      {"Mark a patient as sectioned with a due legal check",
       "Advance the clock past the check date"},
      "The system flags the overdue legally required check.", "functional"));
  arr.push_back(test_case(
      "T5", "R5", "Monthly management report content",
      {"Generate the monthly report for a clinic with known data"},
      "Report shows patients treated, admissions, discharges, sectioned "
      "count, and drug costs.",
      "functional"));
  arr.push_back(test_case(
      "T6", "R6", "Disconnected clinic uses a local copy",
      {"Download a local copy of a patient record",
       "Disconnect the network and open the record"},
      "Record is readable and editable from the local copy.", "functional"));
  arr.push_back(test_case(
      "T7", "R7", "Dangerous-patient warning shown to staff",
      {"Flag a patient as potentially dangerous", "Open the patient record"},
      "A prominent warning is shown to the member of staff.", "functional"));
  arr.push_back(test_case(
      "T8", "R8", "Unauthorized access is refused",
      {"Log in as a non-medical user", "Attempt to open a patient record"},
      "Access is denied and the attempt is logged.", "negative"));
  arr.push_back(test_case(
      "T9", "R9", "Availability during server failure",
      {"Fail the central server while a clinic is working",
       "Continue working against the local copy"},
      "Work continues and data is reconciled when the server returns.",
      "negative"));
  return arr.dump(2);
}

std::string mentcare_stories_json() {
  Json arr = Json::array();

  // First story mirrors the tool's published sample output for this
  // document, deliverables included.
  Json golden = Json::object();
  golden["architecture_design"] = deliverable(
      "Architecture design document created and reviewed by the development "
      "team. Design aligns with system requirements and best practices.",
      {"Document created and stored in a designated location",
       "Design reviewed and approved by development team",
       "Design aligns with system requirements and scalability needs",
       "Design follows best practices and coding standards"});
  golden["database_schema_design"] = deliverable(
      "Database schema designed and implemented for storing patient records.",
      {"Schema design document created and stored in a designated location",
       "Schema implemented in the database",
       "Schema optimized for efficient data storage and retrieval",
       "Schema reviewed and approved by database administrators"});
  golden["unit_tests"] = deliverable(
      "Unit tests written and executed for patient record management "
      "functionality.",
      {"Unit test cases written to cover all aspects of patient record "
       "management",
       "Tests executed and passed successfully",
       "Code coverage of unit tests meets defined threshold",
       "Unit tests integrated into the automated testing framework"});
  golden["user_training_documentation"] = deliverable(
      "Comprehensive documentation created on how to create, edit, and view "
      "patient records.",
      {"Documentation covers all functionalities related to patient record "
       "management",
       "Documentation is clear, concise, and easy to understand",
       "Documentation reviewed and approved by stakeholders",
       "Documentation accessible to all users through a centralized location"});
  golden["production_support_plan"] = deliverable(
      "Plan developed for supporting patient record management in a "
      "production environment.",
      {"Plan outlines procedures for monitoring and maintaining patient "
       "records",
       "Plan includes strategies for handling system failures and data "
       "backups",
       "Plan reviewed and approved by operations team",
       "Plan integrated into the overall support and maintenance framework"});
  arr.push_back(story(
      "The system should allow clinicians to create, edit, and view patient "
      "records.",
      "clinicians", "create, edit, and view patient records", "", {"R1"},
      std::move(golden)));

  arr.push_back(story(
      "As a doctor, I want the system to monitor patient records and warn me "
      "about missed appointments, overdue legal checks, and potentially "
      "dangerous patients, so that problems are caught before they cause "
      "harm.",
      "doctor",
      "monitoring of patient records with warnings for missed appointments, "
      "overdue legal checks, and dangerous patients",
      "problems are caught before they cause harm", {"R3", "R4", "R7"},
      default_deliverables("patient monitoring and warnings")));
  arr.push_back(story(
      "As a health service manager, I want monthly management reports on "
      "patients treated, admissions, sectioned patients, and drug costs, so "
      "that performance can be assessed against local and government "
      "targets.",
      "health service manager",
      "monthly management reports on patients treated, admissions, sectioned "
      "patients, and drug costs",
      "performance can be assessed against local and government targets",
      {"R5"}, default_deliverables("administrative reporting")));
  return arr.dump(2);
}

// ---------------- generic answers ----------------

std::vector<std::string> split_sentences(const std::string& text) {
  std::vector<std::string> out;
  std::string current;
  for (char c : text) {
    current.push_back(c);
    if (c == '.' || c == '!' || c == '?') {
      std::string t = util::trim(current);
      if (!t.empty()) out.push_back(t);
      current.clear();
    }
  }
  std::string t = util::trim(current);
  if (!t.empty()) out.push_back(t);
  return out;
}

bool normative(const std::string& sentence) {
  std::string lower = util::to_lower(sentence);
  for (const char* m : {" shall ", " should ", " must ", " will "}) {
    if (lower.find(m) != std::string::npos) return true;
  }
  return false;
}

std::string generic_requirements(const std::string& text) {
  std::vector<std::string> functional;
  for (const auto& s : split_sentences(text)) {
    if (normative(s)) functional.push_back(s);
  }
  if (functional.empty()) functional.push_back(util::trim(text));
  return requirements_json(functional, {});
}

std::string generic_test_cases(const std::string& content) {
  Json arr = Json::array();
  auto listing = parse_listing(content);
  std::size_t n = 1;
  for (const auto& [id, text] : listing) {
    arr.push_back(test_case(
        "T" + std::to_string(n++), id, "Verify " + id,
        {"Prepare the preconditions described by " + id,
         "Exercise the behavior: " + text},
        "Observed behavior matches the requirement.", "functional"));
  }
  return arr.dump(2);
}

// "The system shall log every login." -> "log every login"
std::string feature_phrase(const std::string& requirement) {
  std::string lower = util::to_lower(requirement);
  static const char* kPrefixes[] = {
      "the system shall ", "the system should ", "the system must ",
      "the software shall ", "the software should ", "the software must ",
      "the system will ", "the software will "};
  std::string phrase = requirement;
  for (const char* p : kPrefixes) {
    if (lower.rfind(p, 0) == 0) {
      phrase = requirement.substr(std::string(p).size());
      break;
    }
  }
  phrase = util::trim(phrase);
  while (!phrase.empty() && phrase.back() == '.') phrase.pop_back();
  return phrase;
}

std::string generic_stories(const std::string& content) {
  Json arr = Json::array();
  for (const auto& [id, text] : parse_listing(content)) {
    std::string phrase = feature_phrase(text);
    arr.push_back(story(
        "As a user, I want the system to " + phrase +
            ", so that the documented requirements are met.",
        "user", phrase, "the documented requirements are met", {id},
        default_deliverables(phrase.empty() ? "the feature" : phrase)));
  }
  return arr.dump(2);
}

enum class Profile { insulin, mentcare, generic };

Profile detect_profile(const std::string& content) {
  std::string lower = util::to_lower(content);
  if (lower.find("insulin") != std::string::npos) return Profile::insulin;
  // "sectioned patients" carries through to the rendered requirement list,
  // where the product name no longer appears.
  if (lower.find("mentcare") != std::string::npos ||
      lower.find("mental health") != std::string::npos ||
      lower.find("sectioned patients") != std::string::npos) {
    return Profile::mentcare;
  }
  return Profile::generic;
}

}  // namespace

model::Completion ScriptedProvider::complete(const model::ModelRequest& request) {
  model::validate(request);
  std::string content;
  for (const auto& m : request.messages) {
    if (m.role == model::Role::user) content = m.content;
  }
  Profile profile = detect_profile(content);
  Stage stage = classify(request);

  model::Completion out;
  switch (stage) {
    case Stage::refine:
      if (is_requirements_listing(content)) {
        out.text = content;  // already clean
      } else if (profile == Profile::insulin) {
        out.text = kInsulinRefined;
      } else if (profile == Profile::mentcare) {
        out.text = kMentcareRefined;
      } else {
        out.text = util::trim(content);
      }
      break;
    case Stage::extract:
      if (profile == Profile::insulin) {
        // The raw document mentions the meter-based routine; the refined
        // text does not. That marker separates the direct ask from the
        // refined one.
        bool raw_document = content.find("external meter") != std::string::npos;
        out.text = requirements_json(raw_document ? insulin_requirements_direct()
                                                  : insulin_requirements_refined(),
                                     {});
      } else if (profile == Profile::mentcare) {
        out.text = mentcare_requirements_json();
      } else {
        out.text = generic_requirements(content);
      }
      break;
    case Stage::test_cases:
      if (profile == Profile::insulin) {
        out.text = insulin_test_cases_json();
      } else if (profile == Profile::mentcare) {
        out.text = mentcare_test_cases_json();
      } else {
        out.text = generic_test_cases(content);
      }
      break;
    case Stage::stories:
      if (profile == Profile::insulin) {
        out.text = insulin_stories_json();
      } else if (profile == Profile::mentcare) {
        out.text = mentcare_stories_json();
      } else {
        out.text = generic_stories(content);
      }
      break;
    case Stage::unknown:
      out.text = util::trim(content);
      break;
  }
  return out;
}

}  // namespace geneus::scripted

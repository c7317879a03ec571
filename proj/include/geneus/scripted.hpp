#pragma once

#include <string>
#include <vector>

#include "geneus/model.hpp"

// A deterministic backend with hand-written answers for the bundled sample
// documents and synthesized answers for anything else. It exists to exercise
// the whole pipeline offline and to (re)generate the replay fixtures without
// talking to a real endpoint.

namespace geneus::scripted {

enum class Stage { refine, extract, test_cases, stories, unknown };

/// Classifies a request by its system instruction.
Stage classify(const model::ModelRequest& request);

/// True for content that looks like a rendered requirement list ("R1. ...").
bool is_requirements_listing(const std::string& content);

/// The canned requirement listings for the insulin-pump sample document.
/// The direct-ask variant misreads the document (it drags the injection
/// timing into the dose calculation); the refined variant does not. Tests
/// pin both behaviors.
const std::vector<std::string>& insulin_requirements_refined();
const std::vector<std::string>& insulin_requirements_direct();

class ScriptedProvider : public model::Provider {
 public:
  model::Completion complete(const model::ModelRequest& request) override;
};

}  // namespace geneus::scripted

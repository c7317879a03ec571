#pragma once

#include <exception>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "geneus/ingest.hpp"
#include "geneus/json.hpp"
#include "geneus/model.hpp"
#include "geneus/run_store.hpp"
#include "geneus/schema.hpp"
#include "geneus/similarity.hpp"
#include "geneus/storygen.hpp"

namespace geneus::consistency {

struct ConsistencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunFailure {
  int run_index{0};
  std::string stage;
  std::string message;
  bool provider_error{false};
};

/// Every repeated run failed; nothing to score.
struct AllRunsFailed : ConsistencyError {
  AllRunsFailed(const std::string& detail, std::vector<RunFailure> failures_)
      : ConsistencyError(detail), failures(std::move(failures_)) {}
  std::vector<RunFailure> failures;
};

/// Failure in one arm of the two-arm comparison. When the io arm fails
/// after the rat arm succeeded, the rat requirements survive here.
struct ArmError : ConsistencyError {
  ArmError(std::string arm_, const std::string& detail,
           std::exception_ptr cause_ = nullptr)
      : ConsistencyError(arm_ + " arm failed: " + detail),
        arm(std::move(arm_)),
        cause(cause_) {}
  std::string arm;  // "rat" or "io"
  std::exception_ptr cause;
  std::optional<schema::RequirementSet> rat_requirements;
};

/// How alike the requirement sets of repeated runs are.
///
/// The exact matrix is Jaccard over normalized requirement texts. The
/// relaxed matrix also counts two requirements as the same when their
/// stemmed-token Jaccard reaches `relaxed_threshold`, since repeated runs
/// tend to restate a requirement rather than repeat it verbatim.
struct StabilityScore {
  double mean_pairwise_similarity{1.0};
  int n_runs{0};
  similarity::PairwiseMatrix per_pair;

  double relaxed_mean_pairwise_similarity{1.0};
  similarity::PairwiseMatrix relaxed_per_pair;
  double relaxed_threshold{0.7};
};

struct RepeatOptions {
  storygen::PipelineOptions pipeline;
  /// When set, every successful run is persisted through this store.
  runstore::RunStore* store{nullptr};
};

struct RepeatedRuns {
  std::vector<schema::GenerationResult> results;
  std::vector<RunFailure> failures;
  /// Run ids assigned at persistence time, parallel to results; empty when
  /// no store was supplied.
  std::vector<std::string> run_ids;
};

/// Runs the full pipeline n times over the same document with identical
/// configuration. Individual run failures are recorded and skipped; throws
/// AllRunsFailed only when no run succeeds.
RepeatedRuns run_repeated(const ingest::SourceDocument& doc,
                          model::Provider& provider, int n = 10,
                          const RepeatOptions& options = {});

/// Pairwise stability of the requirement sets; needs at least two.
StabilityScore requirement_stability(
    const std::vector<schema::RequirementSet>& sets,
    double relaxed_threshold = 0.7);

/// The two extraction modes side by side, with requirements matched across
/// arms at stemmed-token Jaccard >= match_threshold. `rat_only` and
/// `io_only` hold the requirements left unmatched on each side.
struct ComparisonReport {
  schema::RequirementSet rat_requirements;
  schema::RequirementSet io_requirements;
  std::vector<schema::Requirement> rat_only;
  std::vector<schema::Requirement> io_only;
  /// Matched (rat id, io id) pairs.
  std::vector<std::pair<std::string, std::string>> matched;
  double match_threshold{0.7};
};

ComparisonReport compare_rat_vs_io(const ingest::SourceDocument& doc,
                                   model::Provider& provider,
                                   const storygen::PipelineOptions& options = {},
                                   double match_threshold = 0.7);

Json stability_to_json(const StabilityScore& score);
std::string matrix_to_csv(const similarity::PairwiseMatrix& matrix);
Json comparison_to_json(const ComparisonReport& report);

}  // namespace geneus::consistency

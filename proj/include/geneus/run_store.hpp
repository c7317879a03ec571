#pragma once

#include <filesystem>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "geneus/json.hpp"
#include "geneus/schema.hpp"

namespace geneus::runstore {

struct StoreError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Requested run id does not name a stored run (also raised for ids that
/// are not valid run ids at all, so path traversal cannot reach this layer).
struct UnknownRun : StoreError {
  explicit UnknownRun(std::string id)
      : StoreError("unknown run: " + id), run_id(std::move(id)) {}
  std::string run_id;
};

/// 26-character ULID: 48-bit millisecond timestamp + 80 random bits,
/// Crockford base32. Lexicographic order follows creation time.
std::string new_ulid();

/// One committed run on disk.
struct RunRecord {
  std::string run_id;
  std::string input_digest;
  std::filesystem::path result_path;
  std::filesystem::path transcript_path;
  std::string created_at;
};

/// True when the string is a plausible run id (Crockford base32 alphabet,
/// sane length). Used to reject traversal attempts before touching paths.
bool valid_run_id(const std::string& id);

/// Flat-file persistence for pipeline runs.
///
/// Layout: root/<run_id>/result.json     the output envelope
///         root/<run_id>/transcript.json the prompt traces
///         root/<run_id>/meta.json       summary fields for listing
class RunStore {
 public:
  explicit RunStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  /// Assigns a fresh run id and writes all three files. The id is also
  /// written into result.run_metadata.
  RunRecord save(schema::GenerationResult& result);

  bool exists(const std::string& run_id) const;
  /// Record for a stored run (paths plus the meta.json summary fields).
  RunRecord record(const std::string& run_id) const;
  Json load_result(const std::string& run_id) const;
  Json load_transcript(const std::string& run_id) const;
  Json load_meta(const std::string& run_id) const;

  /// Stored run ids, oldest first.
  std::vector<std::string> list() const;

 private:
  std::filesystem::path dir_for(const std::string& run_id) const;

  std::filesystem::path root_;
  mutable std::mutex mutex_;
};

}  // namespace geneus::runstore

#include "geneus/run_store.hpp"

#include <algorithm>
#include <chrono>
#include <random>

#include "geneus/promptkit.hpp"
#include "geneus/util.hpp"

namespace geneus::runstore {

namespace {

constexpr char kAlphabet[] = "0123456789ABCDEFGHJKMNPQRSTVWXYZ";

std::mt19937_64& ulid_rng() {
  static std::mt19937_64 rng{std::random_device{}()};
  return rng;
}

std::mutex& ulid_mutex() {
  static std::mutex m;
  return m;
}

Json read_json(const std::filesystem::path& path) {
  return Json::parse(util::read_file(path.string()));
}

}  // namespace

std::string new_ulid() {
  using namespace std::chrono;
  const auto ms = static_cast<std::uint64_t>(
      duration_cast<milliseconds>(system_clock::now().time_since_epoch())
          .count());

  std::uint64_t hi, lo;
  {
    std::lock_guard lock(ulid_mutex());
    hi = ulid_rng()();
    lo = ulid_rng()();
  }

  std::string out(26, '0');
  for (int i = 0; i < 10; ++i) {
    out[9 - i] = kAlphabet[(ms >> (5 * i)) & 0x1F];
  }
  // 80 random bits: 16 from hi's low bits, 64 from lo.
  std::uint64_t bits_hi = hi & 0xFFFF;
  for (int i = 0; i < 16; ++i) {
    std::uint64_t v;
    // Group g covers bits [80 - 5*(g+1), 80 - 5*g) of the 80-bit value.
    int low_bit = 75 - 5 * i;
    if (low_bit >= 64) {
      v = (bits_hi >> (low_bit - 64)) & 0x1F;
    } else if (low_bit >= 60) {
      v = ((bits_hi << (64 - low_bit)) | (lo >> low_bit)) & 0x1F;
    } else {
      v = (lo >> low_bit) & 0x1F;
    }
    out[10 + i] = kAlphabet[v];
  }
  return out;
}

bool valid_run_id(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::string_view(kAlphabet).find(c) != std::string_view::npos;
  });
}

RunStore::RunStore(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_);
}

std::filesystem::path RunStore::dir_for(const std::string& run_id) const {
  if (!valid_run_id(run_id)) throw UnknownRun(run_id);
  return root_ / run_id;
}

RunRecord RunStore::save(schema::GenerationResult& result) {
  const std::string run_id = new_ulid();
  result.run_metadata.run_id = run_id;

  const auto dir = root_ / run_id;
  std::filesystem::create_directories(dir);

  RunRecord rec;
  rec.run_id = run_id;
  rec.input_digest = result.run_metadata.source_digest;
  rec.result_path = dir / "result.json";
  rec.transcript_path = dir / "transcript.json";
  rec.created_at = util::iso8601_utc(std::chrono::system_clock::now());

  util::write_file_atomic(rec.result_path.string(), schema::serialize(result));

  Json transcript;
  transcript["run_id"] = run_id;
  transcript["traces"] = Json::array();
  for (const auto& trace : result.traces) {
    transcript["traces"].push_back(promptkit::to_json(trace));
  }
  util::write_file_atomic(rec.transcript_path.string(),
                          transcript.dump(2) + "\n");

  Json meta;
  meta["run_id"] = run_id;
  meta["created_at"] = rec.created_at;
  meta["input_digest"] = rec.input_digest;
  meta["model_id"] = result.run_metadata.model_id;
  meta["temperature"] = result.run_metadata.temperature;
  meta["counts"] = {{"requirements", result.requirements.requirements.size()},
                    {"stories", result.stories.size()},
                    {"test_cases", result.test_cases.size()}};
  util::write_file_atomic((dir / "meta.json").string(), meta.dump(2) + "\n");

  return rec;
}

RunRecord RunStore::record(const std::string& run_id) const {
  Json meta = load_meta(run_id);
  RunRecord rec;
  rec.run_id = run_id;
  rec.input_digest = meta.value("input_digest", "");
  rec.result_path = root_ / run_id / "result.json";
  rec.transcript_path = root_ / run_id / "transcript.json";
  rec.created_at = meta.value("created_at", "");
  return rec;
}

bool RunStore::exists(const std::string& run_id) const {
  if (!valid_run_id(run_id)) return false;
  std::lock_guard lock(mutex_);
  return std::filesystem::exists(root_ / run_id / "result.json");
}

Json RunStore::load_result(const std::string& run_id) const {
  const auto dir = dir_for(run_id);
  std::lock_guard lock(mutex_);
  if (!std::filesystem::exists(dir / "result.json")) throw UnknownRun(run_id);
  return read_json(dir / "result.json");
}

Json RunStore::load_transcript(const std::string& run_id) const {
  const auto dir = dir_for(run_id);
  std::lock_guard lock(mutex_);
  if (!std::filesystem::exists(dir / "transcript.json")) {
    throw UnknownRun(run_id);
  }
  return read_json(dir / "transcript.json");
}

Json RunStore::load_meta(const std::string& run_id) const {
  const auto dir = dir_for(run_id);
  std::lock_guard lock(mutex_);
  if (!std::filesystem::exists(dir / "meta.json")) throw UnknownRun(run_id);
  return read_json(dir / "meta.json");
}

std::vector<std::string> RunStore::list() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> ids;
  if (!std::filesystem::exists(root_)) return ids;
  for (const auto& entry : std::filesystem::directory_iterator(root_)) {
    if (!entry.is_directory()) continue;
    const std::string name = entry.path().filename().string();
    if (valid_run_id(name)) ids.push_back(name);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace geneus::runstore

// Regenerates the replay fixtures under fixtures/ from the scripted
// backend. Run from the repository root after changing the scripted
// responses or the prompt templates, then commit the updated files.

#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>

#include "CLI11.hpp"

#include "geneus/ingest.hpp"
#include "geneus/provider.hpp"
#include "geneus/scripted.hpp"
#include "geneus/storygen.hpp"

namespace {

using namespace geneus;

std::size_t record_document(const std::string& doc_path,
                            const std::string& fixture_path,
                            bool include_direct_arm) {
  std::filesystem::remove(fixture_path);
  auto recorder = std::make_shared<provider::RecordingProvider>(
      std::make_shared<scripted::ScriptedProvider>(), fixture_path);

  ingest::SourceDocument doc = ingest::load_document(doc_path);
  storygen::run_pipeline(doc, *recorder);
  if (include_direct_arm) {
    ingest::ExtractedText text = ingest::extract_text(doc);
    storygen::extract_requirements_io(text, *recorder);
  }

  return provider::Fixture::load(fixture_path).entries.size();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regenerate the replay fixtures from the scripted backend"};
  std::string data_dir = "data";
  std::string out_dir = "fixtures";
  app.add_option("--data-dir", data_dir, "Directory holding the sample documents");
  app.add_option("--out-dir", out_dir, "Directory the fixtures are written to");
  CLI11_PARSE(app, argc, argv);

  try {
    std::filesystem::create_directories(out_dir);
    const auto data = std::filesystem::path(data_dir);
    const auto out = std::filesystem::path(out_dir);

    // The insulin fixture also carries the single direct-ask call so the
    // two-arm comparison can replay from it.
    std::size_t n = record_document((data / "insulin.txt").string(),
                                    (out / "insulin.fixture.json").string(),
                                    /*include_direct_arm=*/true);
    std::printf("%s: %zu entries\n",
                (out / "insulin.fixture.json").string().c_str(), n);

    n = record_document((data / "mentcare.md").string(),
                        (out / "mentcare.fixture.json").string(),
                        /*include_direct_arm=*/false);
    std::printf("%s: %zu entries\n",
                (out / "mentcare.fixture.json").string().c_str(), n);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

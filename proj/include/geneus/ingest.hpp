#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace geneus::ingest {

enum class FormatHint { plain, markdown, unknown };

struct SourceDocument {
  std::string bytes;
  FormatHint format_hint{FormatHint::unknown};
  std::string name;
};

struct IngestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyDocument : IngestError {
  EmptyDocument() : IngestError("document is empty or whitespace-only") {}
};
struct EncodingUnusable : IngestError {
  using IngestError::IngestError;
};
struct InvalidChunkParams : IngestError {
  using IngestError::IngestError;
};

struct ExtractedText {
  std::string text;
  // Fraction of code points that were control characters, DEL/C1, or U+FFFD
  // replacements, measured before stripping.
  double noise_ratio{0.0};
  // Count of removed constructs: fenced code blocks, images, link wrappers,
  // and stripped noise characters.
  std::size_t stripped_elements{0};
};

enum class NoiseDecision { clean, refinable, reject };

/// Loads a file and derives the format hint from its extension
/// (.md/.markdown -> markdown, .txt -> plain, anything else -> unknown).
SourceDocument load_document(const std::string& path);

/// Decodes UTF-8 (lossy, replacements counted as noise), strips markdown
/// furniture and control characters, and reports how noisy the input was.
/// Throws EmptyDocument / EncodingUnusable.
ExtractedText extract_text(const SourceDocument& doc);

/// clean below 2% noise, refinable up to 30%, reject above that.
NoiseDecision noise_report(const ExtractedText& text);

struct TextChunk {
  std::size_t index{0};
  std::string text;
  std::size_t span_begin{0};  // byte offsets into ExtractedText::text
  std::size_t span_end{0};
};

/// Splits on paragraph boundaries where possible, then sentence boundaries,
/// then hard-cuts at a UTF-8 boundary. Chunks cover the text in order; each
/// overlaps its predecessor by at most `overlap` bytes.
std::vector<TextChunk> chunk(const ExtractedText& text, std::size_t max_chars,
                             std::size_t overlap);

}  // namespace geneus::ingest

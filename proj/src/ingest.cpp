#include "geneus/ingest.hpp"

#include <algorithm>
#include <cstdint>

#include "geneus/util.hpp"

namespace geneus::ingest {

namespace {

struct Decoded {
  std::vector<std::uint32_t> cps;
  std::size_t invalid_bytes{0};
};

// Lossy UTF-8 decode: every invalid byte becomes one U+FFFD and is counted,
// so the badness of the input is preserved in both the ratio and the text.
Decoded decode_utf8(const std::string& bytes) {
  Decoded out;
  out.cps.reserve(bytes.size());
  std::size_t i = 0;
  const std::size_t n = bytes.size();
  while (i < n) {
    unsigned char b0 = static_cast<unsigned char>(bytes[i]);
    if (b0 < 0x80) {
      out.cps.push_back(b0);
      ++i;
      continue;
    }
    int len = 0;
    std::uint32_t cp = 0;
    std::uint32_t min_cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
      len = 2; cp = b0 & 0x1F; min_cp = 0x80;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3; cp = b0 & 0x0F; min_cp = 0x800;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4; cp = b0 & 0x07; min_cp = 0x10000;
    } else {
      out.cps.push_back(0xFFFD);
      out.invalid_bytes += 1;
      ++i;
      continue;
    }
    if (i + len > n) {
      out.cps.push_back(0xFFFD);
      out.invalid_bytes += 1;
      ++i;
      continue;
    }
    bool ok = true;
    for (int j = 1; j < len; ++j) {
      unsigned char bj = static_cast<unsigned char>(bytes[i + j]);
      if ((bj & 0xC0) != 0x80) { ok = false; break; }
      cp = (cp << 6) | (bj & 0x3F);
    }
    if (!ok || cp < min_cp || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      out.cps.push_back(0xFFFD);
      out.invalid_bytes += 1;
      ++i;
      continue;
    }
    out.cps.push_back(cp);
    i += len;
  }
  return out;
}

void encode_utf8(std::uint32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_noise_cp(std::uint32_t cp) {
  if (cp == '\n' || cp == '\t' || cp == '\r') return false;
  if (cp < 0x20) return true;                  // C0 controls
  if (cp == 0x7F) return true;                 // DEL
  if (cp >= 0x80 && cp <= 0x9F) return true;   // C1 controls
  if (cp == 0xFFFD) return true;               // replacement char
  return false;
}

bool is_fence_line(const std::string& line) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  return line.compare(i, 3, "```") == 0;
}

// Removes fenced code blocks; each complete block counts as one stripped
// element. An unclosed fence drops only the fence marker line itself.
std::string strip_fences(const std::string& text, std::size_t& stripped) {
  std::vector<std::string> lines = util::split_lines(text);
  std::vector<bool> drop(lines.size(), false);
  std::size_t i = 0;
  while (i < lines.size()) {
    if (!is_fence_line(lines[i])) { ++i; continue; }
    std::size_t close = i + 1;
    while (close < lines.size() && !is_fence_line(lines[close])) ++close;
    if (close < lines.size()) {
      for (std::size_t j = i; j <= close; ++j) drop[j] = true;
      stripped += 1;
      i = close + 1;
    } else {
      drop[i] = true;
      stripped += 1;
      ++i;
    }
  }
  std::string out;
  bool first = true;
  for (std::size_t j = 0; j < lines.size(); ++j) {
    if (drop[j]) continue;
    if (!first) out.push_back('\n');
    out += lines[j];
    first = false;
  }
  return out;
}

// Single left-to-right pass replacing images "![alt](url)" with nothing and
// links "[text](url)" with their text. Incomplete constructs pass through
// untouched, which keeps the transform idempotent.
std::string strip_images_and_links(const std::string& text, std::size_t& stripped) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    bool image = text[i] == '!' && i + 1 < n && text[i + 1] == '[';
    bool link = text[i] == '[';
    if (image || link) {
      std::size_t open = image ? i + 1 : i;
      std::size_t close = text.find(']', open + 1);
      if (close != std::string::npos && close + 1 < n && text[close + 1] == '(') {
        std::size_t paren = text.find(')', close + 2);
        if (paren != std::string::npos) {
          if (!image) out += text.substr(open + 1, close - open - 1);
          stripped += 1;
          i = paren + 1;
          continue;
        }
      }
    }
    out.push_back(text[i]);
    ++i;
  }
  return out;
}

}  // namespace

SourceDocument load_document(const std::string& path) {
  SourceDocument doc;
  doc.bytes = util::read_file(path);
  doc.name = path;
  std::size_t dot = path.find_last_of('.');
  std::string ext = dot == std::string::npos ? "" : util::to_lower(path.substr(dot + 1));
  if (ext == "md" || ext == "markdown") {
    doc.format_hint = FormatHint::markdown;
  } else if (ext == "txt") {
    doc.format_hint = FormatHint::plain;
  } else {
    doc.format_hint = FormatHint::unknown;
  }
  return doc;
}

ExtractedText extract_text(const SourceDocument& doc) {
  if (util::trim(doc.bytes).empty()) throw EmptyDocument();

  Decoded decoded = decode_utf8(doc.bytes);
  if (decoded.invalid_bytes * 2 > doc.bytes.size()) {
    throw EncodingUnusable("more than half of the input is not valid UTF-8 (" +
                           std::to_string(decoded.invalid_bytes) + " of " +
                           std::to_string(doc.bytes.size()) + " bytes)");
  }

  std::size_t noisy = 0;
  for (std::uint32_t cp : decoded.cps) {
    if (is_noise_cp(cp)) ++noisy;
  }
  double ratio = decoded.cps.empty() ? 0.0
                                     : static_cast<double>(noisy) /
                                           static_cast<double>(decoded.cps.size());

  // Normalize newlines, drop noise code points (each counts as stripped).
  std::size_t stripped = 0;
  std::string normalized;
  normalized.reserve(doc.bytes.size());
  for (std::size_t i = 0; i < decoded.cps.size(); ++i) {
    std::uint32_t cp = decoded.cps[i];
    if (cp == '\r') {
      if (i + 1 < decoded.cps.size() && decoded.cps[i + 1] == '\n') continue;
      normalized.push_back('\n');
      continue;
    }
    if (is_noise_cp(cp)) {
      stripped += 1;
      continue;
    }
    encode_utf8(cp, normalized);
  }

  std::string no_fences = strip_fences(normalized, stripped);
  std::string cleaned = strip_images_and_links(no_fences, stripped);

  ExtractedText out;
  out.text = std::move(cleaned);
  out.noise_ratio = ratio;
  out.stripped_elements = stripped;
  if (util::trim(out.text).empty()) throw EmptyDocument();
  return out;
}

NoiseDecision noise_report(const ExtractedText& text) {
  if (text.noise_ratio < 0.02) return NoiseDecision::clean;
  if (text.noise_ratio <= 0.30) return NoiseDecision::refinable;
  return NoiseDecision::reject;
}

namespace {

std::size_t utf8_align_back(const std::string& s, std::size_t pos) {
  while (pos > 0 && pos < s.size() &&
         (static_cast<unsigned char>(s[pos]) & 0xC0) == 0x80) {
    --pos;
  }
  return pos;
}

std::size_t utf8_align_forward(const std::string& s, std::size_t pos) {
  while (pos < s.size() && (static_cast<unsigned char>(s[pos]) & 0xC0) == 0x80) {
    ++pos;
  }
  return pos;
}

// Best split position in (pos, limit]: after a paragraph break if one
// exists, else after a sentence end, else 0 (meaning: hard cut).
std::size_t find_split(const std::string& s, std::size_t pos, std::size_t limit) {
  std::size_t best = 0;
  std::size_t search = s.rfind("\n\n", limit - 2);
  if (search != std::string::npos && search + 2 > pos && search + 2 <= limit &&
      search >= pos) {
    best = search + 2;
  }
  if (best > pos) return best;
  static const char* enders[] = {". ", "! ", "? ", ".\n", "!\n", "?\n"};
  for (const char* e : enders) {
    std::size_t at = s.rfind(e, limit - 2);
    if (at != std::string::npos && at >= pos && at + 2 <= limit && at + 2 > pos) {
      best = std::max(best, at + 2);
    }
  }
  return best > pos ? best : 0;
}

}  // namespace

std::vector<TextChunk> chunk(const ExtractedText& text, std::size_t max_chars,
                             std::size_t overlap) {
  if (max_chars < 256) {
    throw InvalidChunkParams("max_chars must be at least 256");
  }
  if (overlap >= max_chars) {
    throw InvalidChunkParams("overlap must be smaller than max_chars");
  }
  const std::string& s = text.text;
  std::vector<TextChunk> out;
  if (s.size() <= max_chars) {
    out.push_back(TextChunk{0, s, 0, s.size()});
    return out;
  }
  std::size_t pos = 0;
  std::size_t index = 0;
  while (pos < s.size()) {
    std::size_t end;
    if (s.size() - pos <= max_chars) {
      end = s.size();
    } else {
      std::size_t limit = pos + max_chars;
      end = find_split(s, pos, limit);
      if (end == 0) end = utf8_align_back(s, limit);
      if (end <= pos) end = limit;  // pathological: no boundary found at all
    }
    out.push_back(TextChunk{index++, s.substr(pos, end - pos), pos, end});
    if (end >= s.size()) break;
    std::size_t next = end;
    if (overlap > 0 && end - pos > overlap) {
      next = utf8_align_forward(s, end - overlap);
      if (next <= pos) next = end;
    }
    pos = next;
  }
  return out;
}

}  // namespace geneus::ingest

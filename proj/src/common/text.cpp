#include "detect/text.hpp"

#include <array>
#include <algorithm>

namespace detect::text {

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    char32_t cp = 0xFFFD;
    std::size_t len = 1;
    if (b0 < 0x80) {
      cp = b0;
    } else if ((b0 >> 5) == 0x6) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 >> 4) == 0xE) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 >> 3) == 0x1E) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    if (i + len > s.size()) {
      out.push_back(0xFFFD);
      break;
    }
    bool ok = true;
    for (std::size_t k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b >> 6) != 0x2) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string encode_utf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t c : s) {
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else if (c < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else if (c < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (c >> 12)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (c >> 18)));
      out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
  }
  return out;
}

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (char c : s) {
    if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
  }
  return n;
}

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' ||
         c == 0x00A0 || c == 0x2009 || c == 0x202F || c == 0x3000;
}

bool is_punctuation(char32_t c) {
  if (c < 0x80) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
           (c >= 0x7B && c <= 0x7E);
  }
  static constexpr std::array<char32_t, 18> extra = {
      0x00A1, 0x00AB, 0x00BB, 0x00BF, 0x00B7, 0x2010, 0x2013, 0x2014, 0x2018,
      0x2019, 0x201A, 0x201C, 0x201D, 0x201E, 0x2026, 0x2039, 0x203A, 0x00A7};
  return std::find(extra.begin(), extra.end(), c) != extra.end();
}

bool is_sentence_terminator(char32_t c) { return c == U'.' || c == U'!' || c == U'?'; }

std::string to_lower(std::string_view s) {
  std::u32string cps = decode_utf8(s);
  for (auto& c : cps) {
    if (c >= U'A' && c <= U'Z') {
      c = c + 32;
    } else if (c >= 0xC0 && c <= 0xDE && c != 0xD7) {
      c = c + 32;
    }
  }
  return encode_utf8(cps);
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  const std::u32string cps = decode_utf8(s);
  std::u32string cur;
  for (char32_t c : cps) {
    if (is_space(c)) {
      if (!cur.empty()) out.push_back(encode_utf8(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(encode_utf8(cur));
  return out;
}

namespace {

std::u32string strip_punct(std::u32string_view chunk) {
  std::size_t b = 0;
  std::size_t e = chunk.size();
  while (b < e && is_punctuation(chunk[b])) ++b;
  while (e > b && is_punctuation(chunk[e - 1])) --e;
  return std::u32string(chunk.substr(b, e - b));
}

bool is_closing(char32_t c) {
  return c == U'"' || c == U'\'' || c == U')' || c == U']' || c == U'}' || c == 0x201C ||
         c == 0x201D || c == 0x2019 || c == 0x00BB || c == 0x00AB || c == 0x203A || c == 0x2039;
}

bool ends_with_terminator(std::u32string_view chunk) {
  std::size_t e = chunk.size();
  while (e > 0 && is_closing(chunk[e - 1])) --e;
  return e > 0 && is_sentence_terminator(chunk[e - 1]);
}

bool is_abbreviation(const std::string& lower) {
  static const std::array<std::string_view, 7> abbrevs = {"z.b.", "bzw.", "dr.", "ca.",
                                                         "nr.",  "usw.", "d.h."};
  return std::find(abbrevs.begin(), abbrevs.end(), lower) != abbrevs.end();
}

std::string strip_opening(const std::string& chunk) {
  const std::u32string cps = decode_utf8(chunk);
  std::size_t b = 0;
  while (b < cps.size() && (cps[b] == U'(' || cps[b] == U'"' || cps[b] == 0x201E ||
                            cps[b] == 0x201A || cps[b] == U'[' || cps[b] == 0x00BB)) {
    ++b;
  }
  return encode_utf8(std::u32string_view(cps).substr(b));
}

}  // namespace

std::vector<std::string> tokenize_words(std::string_view s) {
  std::vector<std::string> out;
  for (const auto& chunk : split_whitespace(s)) {
    const std::u32string stripped = strip_punct(decode_utf8(chunk));
    if (!stripped.empty()) out.push_back(encode_utf8(stripped));
  }
  return out;
}

std::size_t count_sentences(std::string_view s) {
  const auto chunks = split_whitespace(s);
  std::size_t count = 0;
  bool pending = false;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const std::u32string cps = decode_utf8(chunks[i]);
    const bool has_word = !strip_punct(cps).empty();
    pending = pending || has_word;
    if (!ends_with_terminator(cps)) continue;

    const std::string lower = to_lower(strip_opening(chunks[i]));
    if (is_abbreviation(lower)) continue;
    if ((lower == "z." || lower == "d.") && i + 1 < chunks.size()) {
      const std::string next = to_lower(chunks[i + 1]);
      if ((lower == "z." && next.rfind("b.", 0) == 0) || (lower == "d." && next.rfind("h.", 0) == 0)) {
        ++i;
        continue;
      }
    }
    if (pending) {
      ++count;
      pending = false;
    }
  }
  if (pending) ++count;
  return count;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\n' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\n' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace detect::text

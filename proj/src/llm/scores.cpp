#include "detect/llm/scores.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <string>

namespace detect::llm {

std::string_view to_string(Criterion c) {
  switch (c) {
    case Criterion::simplicity: return "simplicity";
    case Criterion::meaning_preservation: return "meaning_preservation";
    case Criterion::fluency: return "fluency";
  }
  return "?";
}

double CriterionScores::operator[](Criterion c) const {
  switch (c) {
    case Criterion::simplicity: return simplicity;
    case Criterion::meaning_preservation: return meaning_preservation;
    case Criterion::fluency: return fluency;
  }
  return 0.0;
}

double& CriterionScores::operator[](Criterion c) {
  switch (c) {
    case Criterion::simplicity: return simplicity;
    case Criterion::meaning_preservation: return meaning_preservation;
    case Criterion::fluency: break;
  }
  return fluency;
}

bool CriterionScores::in_range() const {
  auto ok = [](double v) { return v >= 0.0 && v <= 100.0; };
  return ok(simplicity) && ok(meaning_preservation) && ok(fluency);
}

double total_score(const CriterionScores& s) {
  const double lowest = std::min({s.meaning_preservation, s.simplicity, s.fluency});
  if (lowest < 25.0) return lowest;
  return 0.4 * s.meaning_preservation + 0.4 * s.simplicity + 0.2 * s.fluency;
}

namespace {

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_blank(char c) { return c == ' ' || c == '\t'; }
bool is_markup(char c) { return c == '*' || c == '_' || c == '`' || c == '"' || c == '\''; }

// Outcome of reading a value after one label occurrence.
enum class Read { no_value, value, malformed };

struct LabelMatch {
  Read read = Read::no_value;
  double value = 0.0;
};

// Matches the label at `pos` (already known to match `label` case-insensitively) and reads
// "<markup/space>[(...)][score]<markup/space>[:=]<markup/space><number>".
LabelMatch read_after_label(std::string_view text, std::size_t pos) {
  std::size_t i = pos;
  auto skip_soft = [&] {
    while (i < text.size() && (is_blank(text[i]) || is_markup(text[i]))) ++i;
  };
  skip_soft();
  if (i < text.size() && text[i] == '(') {
    const std::size_t close = text.find(')', i);
    if (close == std::string_view::npos || text.substr(i, close - i).find('\n') != std::string_view::npos) return {};
    i = close + 1;
    skip_soft();
  }
  if (i + 5 <= text.size()) {
    std::string word(text.substr(i, 5));
    std::transform(word.begin(), word.end(), word.begin(), [](unsigned char c) { return std::tolower(c); });
    if (word == "score" && (i + 5 == text.size() || !is_alpha(text[i + 5]))) {
      i += 5;
      skip_soft();
    }
  }
  if (i >= text.size() || (text[i] != ':' && text[i] != '=')) return {};
  ++i;
  skip_soft();

  std::string number;
  if (i < text.size() && (text[i] == '-' || text[i] == '+')) number.push_back(text[i++]);
  const std::size_t digits_start = i;
  while (i < text.size() && is_digit(text[i])) number.push_back(text[i++]);
  if (i == digits_start) return {};  // prose after the label, e.g. feedback text
  if (i + 1 < text.size() && (text[i] == '.' || text[i] == ',') && is_digit(text[i + 1])) {
    number.push_back('.');
    ++i;
    while (i < text.size() && is_digit(text[i])) number.push_back(text[i++]);
  }
  // Anything number-like glued to the value makes it ambiguous.
  if (i < text.size()) {
    const char c = text[i];
    if (is_alpha(c) && (c == 'e' || c == 'E') && i + 1 < text.size() && (is_digit(text[i + 1]) || text[i + 1] == '-')) {
      return {Read::malformed};
    }
    if ((c == '.' || c == ',') && i + 1 < text.size() && is_digit(text[i + 1])) return {Read::malformed};
    if (c == '-' && i + 1 < text.size() && is_digit(text[i + 1])) return {Read::malformed};
    if (is_blank(c)) {  // "8 5"
      std::size_t j = i;
      while (j < text.size() && is_blank(text[j])) ++j;
      if (j < text.size() && is_digit(text[j])) return {Read::malformed};
    }
    if (c == '/') {
      std::size_t j = i + 1;
      while (j < text.size() && is_blank(text[j])) ++j;
      std::string denom;
      while (j < text.size() && is_digit(text[j])) denom.push_back(text[j++]);
      if (denom != "100") return {Read::malformed};
    }
  }
  if (number.front() == '+') number.erase(0, 1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), v);
  if (ec != std::errc() || ptr != number.data() + number.size()) return {Read::malformed};
  return {Read::value, v};
}

bool iequals_at(std::string_view text, std::size_t pos, std::string_view word) {
  if (pos + word.size() > text.size()) return false;
  for (std::size_t k = 0; k < word.size(); ++k) {
    if (std::tolower(static_cast<unsigned char>(text[pos + k])) != word[k]) return false;
  }
  return true;
}

// Length of the label occurrence at pos, 0 if none. "meaning preservation" tolerates
// spaces, '-' or '_' between the two words.
std::size_t label_at(std::string_view text, std::size_t pos, Criterion c) {
  if (pos > 0 && is_alpha(text[pos - 1])) return 0;
  std::size_t end = 0;
  switch (c) {
    case Criterion::simplicity:
      if (!iequals_at(text, pos, "simplicity")) return 0;
      end = pos + 10;
      break;
    case Criterion::fluency:
      if (!iequals_at(text, pos, "fluency")) return 0;
      end = pos + 7;
      break;
    case Criterion::meaning_preservation: {
      if (!iequals_at(text, pos, "meaning")) return 0;
      std::size_t i = pos + 7;
      const std::size_t gap = i;
      while (i < text.size() && (is_blank(text[i]) || text[i] == '-' || text[i] == '_')) ++i;
      if (i == gap || !iequals_at(text, i, "preservation")) return 0;
      end = i + 12;
      break;
    }
  }
  if (end < text.size() && is_alpha(text[end])) return 0;
  return end - pos;
}

}  // namespace

ParseResult parse_scores(std::string_view raw) {
  CriterionScores out;
  for (Criterion c : kCriteria) {
    LabelMatch last;
    for (std::size_t pos = 0; pos < raw.size(); ++pos) {
      const std::size_t len = label_at(raw, pos, c);
      if (len == 0) continue;
      const LabelMatch m = read_after_label(raw, pos + len);
      if (m.read != Read::no_value) last = m;
      pos += len - 1;
    }
    if (last.read == Read::no_value) return {std::nullopt, "missing score for " + std::string(to_string(c))};
    if (last.read == Read::malformed) return {std::nullopt, "malformed score for " + std::string(to_string(c))};
    if (!(last.value >= 0.0 && last.value <= 100.0)) {
      return {std::nullopt, std::string(to_string(c)) + " score out of range [0,100]"};
    }
    out[c] = last.value;
  }
  return {out, {}};
}

std::string format_scores(const CriterionScores& s) {
  auto fmt = [](double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed);
    return std::string(buf.data(), res.ptr);
  };
  return "Score:\n- Simplicity: " + fmt(s.simplicity) + "\n- Meaning Preservation: " + fmt(s.meaning_preservation) +
         "\n- Fluency: " + fmt(s.fluency) + "\n";
}

}  // namespace detect::llm

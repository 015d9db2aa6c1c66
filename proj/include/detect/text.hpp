#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace detect::text {

// Decodes UTF-8 into code points. Invalid bytes decode to U+FFFD.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);

// Number of code points in a UTF-8 string.
std::size_t utf8_length(std::string_view s);

bool is_space(char32_t c);
// ASCII punctuation plus the typographic quotes, dashes and brackets found in German news text.
// Hyphen-minus counts as punctuation only at token edges.
bool is_punctuation(char32_t c);
bool is_sentence_terminator(char32_t c);

// Lowercases ASCII and Latin-1 letters (covers Ä Ö Ü).
std::string to_lower(std::string_view s);

// Whitespace-separated chunks, untouched.
std::vector<std::string> split_whitespace(std::string_view s);

// Whitespace split, leading/trailing punctuation stripped, empty chunks dropped.
// Hyphenated compounds stay single tokens.
std::vector<std::string> tokenize_words(std::string_view s);

// Sentence count: chunks ending in . ! ? close a sentence, runs of terminators count once,
// a trailing unterminated segment counts as a sentence, and a fixed German abbreviation
// list (z.B., bzw., Dr., ca., Nr., usw., plus the spaced forms "z. B." and "d. h.")
// never closes one. Empty text -> 0.
std::size_t count_sentences(std::string_view s);

std::string trim(std::string_view s);

}  // namespace detect::text

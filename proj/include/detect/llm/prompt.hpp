#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "detect/corpus.hpp"

namespace detect::llm {

enum class TemplateId { ats_generation, judge_final };
std::string_view to_string(TemplateId id);

// Text with named {slot} markers. Only the declared slots are substituted; other braces
// in the body (the judge format's "{X}" placeholders) are literal text.
struct PromptTemplate {
  TemplateId id;
  std::string version;
  std::string body;
  std::vector<std::string> slots;

  std::string checksum() const;  // sha256 of body
};

using Bindings = std::map<std::string, std::string, std::less<>>;

// Substitutes every declared slot. Throws InvalidArgument naming the first unbound slot.
// Unused bindings are ignored.
std::string render_prompt(const PromptTemplate& t, const Bindings& bindings);

// Shipped templates (assets/prompts/*.txt, compiled in).
const PromptTemplate& ats_generation_template();
const PromptTemplate& judge_final_template();
PromptTemplate load_template(TemplateId id, const std::string& version, const std::string& body);

// The rubric section of the judge prompt ("Evaluation Criteria and Definitions" up to the
// output format), served to human graders so both see the same text.
std::string rubric_text();

struct FewShotExample {
  std::string complex;
  std::string simplification;
};

// Parses "Eingabe: ... / Ausgabe: ..." blocks.
std::vector<FewShotExample> parse_few_shot(std::string_view block);
std::string format_few_shot(const std::vector<FewShotExample>& examples);
const std::string& default_few_shot_block();
// Throws InvalidArgument unless every strategy (classified from the pair) appears at least once.
void check_few_shot_balance(const std::vector<FewShotExample>& examples);

}  // namespace detect::llm

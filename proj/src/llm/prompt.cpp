#include "detect/llm/prompt.hpp"

#include <set>

#include "detect/error.hpp"
#include "detect/hashing.hpp"
#include "detect/text.hpp"
#include "prompt_assets.hpp"

namespace detect::llm {

std::string_view to_string(TemplateId id) {
  return id == TemplateId::ats_generation ? "ats_generation" : "judge_final";
}

std::string PromptTemplate::checksum() const { return sha256_hex(body); }

std::string render_prompt(const PromptTemplate& t, const Bindings& bindings) {
  for (const auto& slot : t.slots) {
    if (!bindings.count(slot)) {
      throw InvalidArgument("prompt " + std::string(to_string(t.id)) + ": slot '" + slot + "' is not bound");
    }
  }
  // Single pass, so bound values are never re-scanned for markers.
  std::string out;
  out.reserve(t.body.size());
  std::size_t pos = 0;
  while (pos < t.body.size()) {
    if (t.body[pos] == '{') {
      bool replaced = false;
      for (const auto& slot : t.slots) {
        if (t.body.compare(pos + 1, slot.size(), slot) == 0 && pos + slot.size() + 1 < t.body.size() &&
            t.body[pos + slot.size() + 1] == '}') {
          out += bindings.find(slot)->second;
          pos += slot.size() + 2;
          replaced = true;
          break;
        }
      }
      if (replaced) continue;
    }
    out.push_back(t.body[pos++]);
  }
  return out;
}

namespace {

std::string strip_final_newline(std::string_view s) {
  if (!s.empty() && s.back() == '\n') s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

PromptTemplate load_template(TemplateId id, const std::string& version, const std::string& body) {
  PromptTemplate t{id, version, strip_final_newline(body), {}};
  if (id == TemplateId::ats_generation) {
    t.slots = {"five_shot", "text"};
  } else {
    t.slots = {"complex_sentence", "simplified_sentence"};
  }
  for (const auto& slot : t.slots) {
    if (t.body.find("{" + slot + "}") == std::string::npos) {
      throw InvalidArgument("template " + std::string(to_string(id)) + " lacks slot {" + slot + "}");
    }
  }
  return t;
}

const PromptTemplate& ats_generation_template() {
  static const PromptTemplate t = load_template(TemplateId::ats_generation, "v1", std::string(assets::ats_generation_v1));
  return t;
}

const PromptTemplate& judge_final_template() {
  static const PromptTemplate t = load_template(TemplateId::judge_final, "v1", std::string(assets::judge_final_v1));
  return t;
}

std::string rubric_text() {
  const std::string& body = judge_final_template().body;
  const std::size_t begin = body.find("Evaluation Criteria and Definitions:");
  const std::size_t end = body.find("Evaluation Output Format:");
  if (begin == std::string::npos || end == std::string::npos || end < begin) {
    throw Error("judge template has no rubric section");
  }
  return text::trim(std::string_view(body).substr(begin, end - begin));
}

std::vector<FewShotExample> parse_few_shot(std::string_view block) {
  std::vector<FewShotExample> out;
  std::optional<std::string> pending;
  std::size_t pos = 0;
  while (pos < block.size()) {
    std::size_t end = block.find('\n', pos);
    if (end == std::string_view::npos) end = block.size();
    const std::string line = text::trim(block.substr(pos, end - pos));
    pos = end + 1;
    if (line.rfind("Eingabe:", 0) == 0) {
      pending = text::trim(std::string_view(line).substr(8));
    } else if (line.rfind("Ausgabe:", 0) == 0) {
      if (!pending) throw InvalidArgument("few-shot block: 'Ausgabe:' without preceding 'Eingabe:'");
      out.push_back({*pending, text::trim(std::string_view(line).substr(8))});
      pending.reset();
    }
  }
  if (pending) throw InvalidArgument("few-shot block: 'Eingabe:' without 'Ausgabe:'");
  return out;
}

std::string format_few_shot(const std::vector<FewShotExample>& examples) {
  std::string out;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (i) out += "\n\n";
    out += "Eingabe: " + examples[i].complex + "\nAusgabe: " + examples[i].simplification;
  }
  return out;
}

const std::string& default_few_shot_block() {
  static const std::string block = strip_final_newline(assets::ats_few_shot_v1);
  return block;
}

void check_few_shot_balance(const std::vector<FewShotExample>& examples) {
  std::set<Strategy> seen;
  for (const auto& ex : examples) seen.insert(classify_strategy(ex.complex, ex.simplification));
  for (Strategy s : {Strategy::split, Strategy::del, Strategy::paraphrase}) {
    if (!seen.count(s)) {
      throw InvalidArgument("few-shot block has no " + std::string(to_string(s)) + " example");
    }
  }
}

}  // namespace detect::llm

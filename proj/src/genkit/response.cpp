#include "kc/genkit/response.hpp"

#include <cctype>
#include <optional>
#include <regex>
#include <sstream>

#include "kc/common/error.hpp"

namespace kc::genkit {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string line(text.substr(pos, nl - pos));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    pos = nl + 1;
  }
  return lines;
}

bool is_blank(std::string_view s) { return s.find_first_not_of(" \t\r") == std::string_view::npos; }

bool is_fence(std::string_view line) { return trim(line).rfind("```", 0) == 0; }

std::string unquote(std::string s) {
  for (const char* pair : {"**", "\"", "'", "`"}) {
    const std::string q(pair);
    if (s.size() >= 2 * q.size() && s.rfind(q, 0) == 0 && s.compare(s.size() - q.size(), q.size(), q) == 0)
      s = trim(s.substr(q.size(), s.size() - 2 * q.size()));
  }
  return s;
}

std::size_t word_count(std::string_view s) {
  std::istringstream in{std::string(s)};
  std::size_t n = 0;
  for (std::string w; in >> w;) ++n;
  return n;
}

// Positions of '.', '!' or '?' that end a sentence: followed by whitespace
// or the end of the text.
std::size_t sentence_ends(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '.' && s[i] != '!' && s[i] != '?') continue;
    if (i + 1 == s.size() || std::isspace(static_cast<unsigned char>(s[i + 1]))) ++n;
  }
  return n;
}

enum class Tag { None, Question, Overview, Step };

struct TagLine {
  Tag tag = Tag::None;
  int number = 0;
  std::string rest;
};

TagLine classify(const std::string& line) {
  static const std::regex re(R"(^\s*(QUESTION|OVERVIEW|STEP\s+(\d+))\s*:\s*(.*)$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(line, m, re)) return {};
  TagLine t;
  t.rest = m[3].str();
  const char head = static_cast<char>(std::toupper(static_cast<unsigned char>(m[1].str()[0])));
  if (head == 'Q') t.tag = Tag::Question;
  else if (head == 'O') t.tag = Tag::Overview;
  else {
    t.tag = Tag::Step;
    t.number = std::stoi(m[2].str());
  }
  return t;
}

std::string join(const std::vector<std::string>& lines, std::size_t from, std::size_t to) {
  std::string out;
  for (std::size_t i = from; i < to; ++i) {
    if (i > from) out += '\n';
    out += lines[i];
  }
  return out;
}

}  // namespace

void validate_label(const KcLabel& l) {
  const auto words = word_count(l.label);
  if (words < kMinLabelWords || words > kMaxLabelWords)
    throw DataError("KC label '" + l.label + "' has " + std::to_string(words) + " words; expected " +
                    std::to_string(kMinLabelWords) + "-" + std::to_string(kMaxLabelWords));
  if (l.description.empty()) throw DataError("KC description is empty");
  if (l.description.size() > kMaxDescriptionChars)
    throw DataError("KC description has " + std::to_string(l.description.size()) + " characters; limit is " +
                    std::to_string(kMaxDescriptionChars));
  if (l.description.back() != '.' || sentence_ends(l.description) != 1)
    throw DataError("KC description must be a single sentence ending in a period");
}

KcLabel parse_enrichment_response(std::string_view text) {
  static const std::regex tag_re(R"(^\s*(LABEL|DESC|DESCRIPTION)\s*:\s*(.*)$)", std::regex::icase);
  std::optional<std::string> label;
  std::optional<std::string> desc;
  std::optional<std::string>* current = nullptr;
  for (const auto& line : split_lines(text)) {
    std::smatch m;
    if (std::regex_match(line, m, tag_re)) {
      const bool is_label = std::toupper(static_cast<unsigned char>(m[1].str()[0])) == 'L';
      current = is_label ? &label : &desc;
      if (current->has_value()) throw DataError("response repeats the " + m[1].str() + ": tag");
      *current = trim(m[2].str());
      continue;
    }
    if (is_blank(line)) {
      current = nullptr;
      continue;
    }
    if (current == &desc) {
      **current += (desc->empty() ? "" : " ") + trim(line);
    } else if (current == nullptr && !label && !desc) {
      continue;  // preamble before the tags
    } else {
      throw DataError("unexpected text in enrichment response: '" + trim(line) + "'");
    }
  }
  if (!label) throw DataError("enrichment response has no LABEL: line");
  if (!desc) throw DataError("enrichment response has no DESC: line");
  KcLabel out;
  out.label = unquote(*label);
  out.description = unquote(*desc);
  validate_label(out);
  return out;
}

WorkedExample parse_worked_example(std::string_view text, Variant variant, std::span<const KcLabel> targets) {
  if (variant == Variant::Enrichment) throw UsageError("worked examples are baseline or kc_conditioned");
  const auto lines = split_lines(text);
  WorkedExample w;
  w.variant = variant;
  w.kc_targets.assign(targets.begin(), targets.end());

  std::size_t i = 0;
  auto section = [&](Tag expected, const char* name, const TagLine& head) {
    if (head.tag != expected) throw DataError(std::string("expected ") + name + ": at line " + std::to_string(i + 1));
    std::vector<std::string> body{head.rest};
    ++i;
    while (i < lines.size() && classify(lines[i]).tag == Tag::None) {
      if (is_fence(lines[i])) throw DataError(std::string("code block inside ") + name + " at line " + std::to_string(i + 1));
      body.push_back(lines[i++]);
    }
    std::string out = trim(join(body, 0, body.size()));
    if (out.empty()) throw DataError(std::string(name) + ": is empty");
    return out;
  };

  while (i < lines.size() && is_blank(lines[i])) ++i;
  if (i == lines.size()) throw DataError("worked example response is empty");
  w.question = section(Tag::Question, "QUESTION", classify(lines[i]));
  if (i == lines.size()) throw DataError("worked example has no OVERVIEW:");
  w.overview = section(Tag::Overview, "OVERVIEW", classify(lines[i]));

  while (i < lines.size()) {
    const auto head = classify(lines[i]);
    if (head.tag != Tag::Step) throw DataError("expected STEP " + std::to_string(w.steps.size() + 1) + ": at line " + std::to_string(i + 1));
    const std::string label = "step " + std::to_string(head.number);
    if (head.number != static_cast<int>(w.steps.size()) + 1)
      throw DataError(label + " is out of order; expected step " + std::to_string(w.steps.size() + 1));
    std::vector<std::string> expl{head.rest};
    ++i;
    while (i < lines.size() && !is_fence(lines[i]) && classify(lines[i]).tag == Tag::None) expl.push_back(lines[i++]);
    if (i == lines.size() || !is_fence(lines[i])) throw DataError(label + " has no code block");
    const std::size_t code_begin = ++i;
    while (i < lines.size() && trim(lines[i]) != "```") ++i;
    if (i == lines.size()) throw DataError(label + " has an unterminated code block");
    WorkedStep step{trim(join(expl, 0, expl.size())), join(lines, code_begin, i)};
    ++i;
    if (step.explanation.empty()) throw DataError(label + " has no explanation");
    if (step.code.find_first_not_of(" \t\r\n") == std::string::npos)
      throw DataError(label + " has an empty code block");
    while (i < lines.size() && classify(lines[i]).tag == Tag::None) {
      if (!is_blank(lines[i])) throw DataError("unexpected text after the code block of " + label + " at line " + std::to_string(i + 1));
      ++i;
    }
    w.steps.push_back(std::move(step));
  }
  if (w.steps.size() < kMinSteps || w.steps.size() > kMaxSteps)
    throw DataError("worked example has " + std::to_string(w.steps.size()) + " steps; expected " +
                    std::to_string(kMinSteps) + "-" + std::to_string(kMaxSteps));
  return w;
}

std::string render_worked_example(const WorkedExample& w) {
  std::string out = "QUESTION: " + w.question + "\n\nOVERVIEW: " + w.overview + "\n";
  for (std::size_t s = 0; s < w.steps.size(); ++s)
    out += "\nSTEP " + std::to_string(s + 1) + ": " + w.steps[s].explanation + "\n```java\n" + w.steps[s].code + "\n```\n";
  return out;
}

}  // namespace kc::genkit

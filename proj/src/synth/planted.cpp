#include "kc/synth/planted.hpp"

#include <array>
#include <algorithm>

#include "kc/common/error.hpp"
#include "kc/common/rng.hpp"

namespace kc::synth {

namespace {

struct Names {
  std::string arr, str, num, acc, loop;
};

template <std::size_t N>
const char* pick(Rng& rng, const std::array<const char*, N>& pool) {
  return pool[rng.uniform_index(N)];
}

Names draw_names(Rng& rng) {
  static constexpr std::array<const char*, 4> arrs{"nums", "arr", "values", "data"};
  static constexpr std::array<const char*, 4> strs{"word", "str", "name", "text"};
  static constexpr std::array<const char*, 4> nums{"n", "limit", "size", "k"};
  static constexpr std::array<const char*, 4> accs{"total", "count", "sum", "result"};
  static constexpr std::array<const char*, 3> loops{"i", "j", "idx"};
  return Names{pick(rng, arrs), pick(rng, strs), pick(rng, nums), pick(rng, accs), pick(rng, loops)};
}

std::string num(Rng& rng, int lo, int hi) {
  return std::to_string(lo + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(hi - lo + 1))));
}

std::string literal(Rng& rng) {
  static constexpr std::array<const char*, 5> words{"abc", "yes", "stop", "hi", "end"};
  return std::string("\"") + pick(rng, words) + "\"";
}

std::string pattern_statement(int pattern, bool buggy, const Names& v, Rng& rng) {
  switch (pattern) {
    case 0:
      return "for (int " + v.loop + " = 0; " + v.loop + (buggy ? " <= " : " < ") + v.arr +
             ".length; " + v.loop + "++) {\n    " + v.acc + " += " + num(rng, 1, 3) + ";\n  }";
    case 1: {
      const std::string a = v.num + " > " + num(rng, 0, 9);
      const std::string b = v.acc + " < " + num(rng, 10, 99);
      const std::string c = v.num + " == " + num(rng, 0, 9);
      const std::string cond = buggy ? a + " && " + b + " || " + c : "(" + a + " && " + b + ") || " + c;
      return "if (" + cond + ") {\n    " + v.acc + "++;\n  }";
    }
    case 2: {
      const std::string cond = buggy ? v.str + " == " + literal(rng) : v.str + ".equals(" + literal(rng) + ")";
      return "if (" + cond + ") {\n    " + v.acc + " += " + num(rng, 1, 5) + ";\n  }";
    }
    case 3:
      return v.acc + " += " + v.arr + "[" + v.arr + ".length" + (buggy ? "" : " - 1") + "];";
    default:
      throw UsageError("unknown planted pattern " + std::to_string(pattern));
  }
}

std::string benign_statement(const Names& v, Rng& rng) {
  switch (rng.uniform_index(8)) {
    case 0:
      return "int tmp = " + v.num + " * " + num(rng, 2, 5) + ";";
    case 1:
      return v.acc + " += " + v.num + ";";
    case 2:
      return "if (" + v.num + " > " + num(rng, 1, 9) + ") {\n    " + v.acc + "++;\n  }";
    case 3:
      return "while (" + v.acc + " > " + num(rng, 50, 200) + ") {\n    " + v.acc + " = " + v.acc +
             " / 2;\n  }";
    case 4:
      return "for (int " + v.loop + " = 0; " + v.loop + " < " + v.num + "; " + v.loop + "++) {\n    " +
             v.acc + " += " + v.loop + ";\n  }";
    case 5:
      return "String extra = " + v.str + " + " + literal(rng) + ";";
    case 6:
      return v.acc + " = Math.max(" + v.acc + ", " + v.num + ");";
    default:
      return "boolean even = " + v.num + " % 2 == 0;";
  }
}

std::string assemble(const Names& v, std::vector<std::string> body) {
  std::string src = "public int solve(int[] " + v.arr + ", String " + v.str + ", int " + v.num +
                    ") {\n  int " + v.acc + " = 0;\n";
  for (const auto& s : body) src += "  " + s + "\n";
  src += "  return " + v.acc + ";\n}\n";
  return src;
}

template <typename T>
void shuffle(std::vector<T>& xs, Rng& rng) {
  for (std::size_t i = xs.size(); i > 1; --i) std::swap(xs[i - 1], xs[rng.uniform_index(i)]);
}

}  // namespace

const std::vector<std::string>& planted_sequence(int pattern) {
  static const std::array<std::vector<std::string>, kPlantedPatternCount> seqs{{
      {"VAR", "<=", "VAR", ".", "VAR"},
      {"&&", "VAR", "<", "NUM", "||"},
      {"VAR", "==", "STR"},
      {"VAR", "[", "VAR", ".", "VAR", "]"},
  }};
  if (pattern < 0 || pattern >= kPlantedPatternCount)
    throw UsageError("unknown planted pattern " + std::to_string(pattern));
  return seqs[static_cast<std::size_t>(pattern)];
}

const std::vector<std::string>& near_miss_sequence(int pattern) {
  static const std::array<std::vector<std::string>, kPlantedPatternCount> seqs{{
      {"VAR", "<", "VAR", ".", "VAR"},
      {"(", "VAR", ">", "NUM", "&&", "VAR", "<", "NUM", ")", "||"},
      {"VAR", ".", "CALL", "(", "STR", ")"},
      {"VAR", "[", "VAR", ".", "VAR", "-", "NUM", "]"},
  }};
  if (pattern < 0 || pattern >= kPlantedPatternCount)
    throw UsageError("unknown planted pattern " + std::to_string(pattern));
  return seqs[static_cast<std::size_t>(pattern)];
}

bool contains_sequence(std::span<const std::string> tokens, std::span<const std::string> seq) {
  if (seq.empty()) return true;
  return std::search(tokens.begin(), tokens.end(), seq.begin(), seq.end()) != tokens.end();
}

int planted_pattern_in(std::span<const std::string> tokens) {
  for (int p = 0; p < kPlantedPatternCount; ++p)
    if (contains_sequence(tokens, planted_sequence(p))) return p;
  return -1;
}

std::string planted_statement(int pattern, bool buggy, std::uint64_t seed) {
  Rng rng(seed);
  const Names v = draw_names(rng);
  return pattern_statement(pattern, buggy, v, rng);
}

std::vector<PlantedProgram> generate_planted_corpus(std::size_t count, std::uint64_t seed) {
  static constexpr std::array<int, kPlantedPatternCount> all{0, 1, 2, 3};
  return generate_planted_corpus(count, seed, all);
}

std::vector<PlantedProgram> generate_planted_corpus(std::size_t count, std::uint64_t seed,
                                                    std::span<const int> patterns) {
  if (patterns.empty()) throw UsageError("generate_planted_corpus: no patterns given");
  for (int p : patterns) planted_sequence(p);
  Rng rng(seed);
  std::vector<PlantedProgram> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Names v = draw_names(rng);
    const bool buggy = rng.uniform01() < 0.5;
    const int planted = buggy ? patterns[rng.uniform_index(patterns.size())] : -1;

    std::vector<std::string> body;
    const auto benign = 2 + rng.uniform_index(3);
    for (std::uint64_t b = 0; b < benign; ++b) body.push_back(benign_statement(v, rng));
    if (buggy) body.push_back(pattern_statement(planted, true, v, rng));
    // Near-miss counterparts, drawn independently of the label.
    const auto near_misses = rng.uniform_index(3);
    for (std::uint64_t m = 0; m < near_misses; ++m) {
      const int p = static_cast<int>(rng.uniform_index(kPlantedPatternCount));
      body.push_back(pattern_statement(p, false, v, rng));
    }
    shuffle(body, rng);

    PlantedProgram prog;
    prog.id = "planted-" + std::to_string(i);
    prog.source = assemble(v, std::move(body));
    prog.is_correct = !buggy;
    prog.pattern = planted;
    out.push_back(std::move(prog));
  }
  return out;
}

}  // namespace kc::synth

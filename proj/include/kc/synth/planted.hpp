#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace kc::synth {

// Four bug patterns, each with a near-miss correct counterpart:
//   0  loop bound `i <= a.length`          vs `i < a.length`
//   1  unparenthesized `x && y || z`       vs `(x && y) || z`
//   2  string compared with `s == "lit"`   vs `s.equals("lit")`
//   3  out-of-range `a[a.length]`          vs `a[a.length - 1]`
inline constexpr int kPlantedPatternCount = 4;

// Normalized token sequence whose presence marks a subtree as planted.
const std::vector<std::string>& planted_sequence(int pattern);

// Normalized token sequence of the near-miss counterpart.
const std::vector<std::string>& near_miss_sequence(int pattern);

bool contains_sequence(std::span<const std::string> tokens, std::span<const std::string> seq);

// Index of the first planted pattern found in `tokens`, or -1.
int planted_pattern_in(std::span<const std::string> tokens);

struct PlantedProgram {
  std::string id;
  std::string source;
  bool is_correct = false;
  int pattern = -1;  // planted pattern for incorrect programs
};

// Java methods built from a benign statement pool plus near-miss
// counterparts. Incorrect programs (about half) carry exactly one planted
// pattern drawn from `patterns`; correct programs carry none. Deterministic
// in `seed`.
std::vector<PlantedProgram> generate_planted_corpus(std::size_t count, std::uint64_t seed,
                                                    std::span<const int> patterns);
std::vector<PlantedProgram> generate_planted_corpus(std::size_t count, std::uint64_t seed);

// Source of one planted or near-miss statement with fresh names.
std::string planted_statement(int pattern, bool buggy, std::uint64_t seed);

}  // namespace kc::synth

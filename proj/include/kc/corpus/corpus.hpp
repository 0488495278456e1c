#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "kc/common/io.hpp"
#include "kc/common/timestamp.hpp"

namespace kc::corpus {

struct Submission {
  std::string submission_id;
  std::string student_id;
  std::string problem_id;
  Timestamp timestamp;
  std::string code;
  bool is_correct = false;
};

struct Problem {
  std::string problem_id;
  std::string title;
  std::string statement;
};

struct Corpus {
  std::map<std::string, Problem> problems;
  std::vector<Submission> submissions;

  const Submission& submission(const std::string& id) const;
  const Problem& problem(const std::string& id) const;
  std::map<std::string, std::size_t> counts_by_problem() const;
};

Json to_json(const Submission& s);
Json to_json(const Problem& p);
// Both throw DataError naming the first missing or ill-typed field.
Submission submission_from_json(const Json& j);
Problem problem_from_json(const Json& j);

// Loads a JSONL submissions file plus its problems sidecar. When
// `problems_path` is empty, `problems.jsonl` next to `submissions_path` is
// used. Record order is preserved.
Corpus load_corpus(const std::filesystem::path& submissions_path,
                   const std::filesystem::path& problems_path = {});

std::filesystem::path default_problems_path(const std::filesystem::path& submissions_path);

// Each student's latest incorrect attempt at `problem_id`, one per student,
// sorted by student_id. Equal timestamps fall back to the larger submission_id.
std::vector<Submission> last_incorrect_attempts(const Corpus& corpus,
                                                const std::string& problem_id);

// Uniform sample of n candidates without replacement, returned in candidate
// order. Returns every candidate when there are at most n of them.
std::vector<Submission> sample_submissions(std::span<const Submission> candidates,
                                           std::size_t n, std::uint64_t seed);

}  // namespace kc::corpus

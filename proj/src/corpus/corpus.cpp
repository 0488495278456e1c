#include "kc/corpus/corpus.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <unordered_map>

#include "kc/common/error.hpp"
#include "kc/common/rng.hpp"

namespace kc::corpus {

namespace {

const Json& require(const Json& j, const char* field) {
  if (!j.is_object()) throw DataError("record is not a JSON object");
  auto it = j.find(field);
  if (it == j.end()) throw DataError(std::string("missing field '") + field + "'");
  return *it;
}

std::string require_string(const Json& j, const char* field) {
  const Json& v = require(j, field);
  if (!v.is_string()) throw DataError(std::string("field '") + field + "' must be a string");
  return v.get<std::string>();
}

}  // namespace

const Submission& Corpus::submission(const std::string& id) const {
  for (const auto& s : submissions)
    if (s.submission_id == id) return s;
  throw DataError("unknown submission_id: " + id);
}

const Problem& Corpus::problem(const std::string& id) const {
  auto it = problems.find(id);
  if (it == problems.end()) throw DataError("unknown problem_id: " + id);
  return it->second;
}

std::map<std::string, std::size_t> Corpus::counts_by_problem() const {
  std::map<std::string, std::size_t> counts;
  for (const auto& s : submissions) ++counts[s.problem_id];
  return counts;
}

Json to_json(const Submission& s) {
  return Json{{"submission_id", s.submission_id},
              {"student_id", s.student_id},
              {"problem_id", s.problem_id},
              {"timestamp", format_timestamp(s.timestamp)},
              {"code", s.code},
              {"is_correct", s.is_correct}};
}

Json to_json(const Problem& p) {
  return Json{{"problem_id", p.problem_id}, {"title", p.title}, {"statement", p.statement}};
}

Submission submission_from_json(const Json& j) {
  Submission s;
  s.submission_id = require_string(j, "submission_id");
  s.student_id = require_string(j, "student_id");
  s.problem_id = require_string(j, "problem_id");
  s.timestamp = parse_timestamp(require_string(j, "timestamp"));
  s.code = require_string(j, "code");
  const Json& correct = require(j, "is_correct");
  if (!correct.is_boolean()) throw DataError("field 'is_correct' must be a boolean");
  s.is_correct = correct.get<bool>();
  if (s.code.empty()) throw DataError("field 'code' is empty");
  return s;
}

Problem problem_from_json(const Json& j) {
  Problem p;
  p.problem_id = require_string(j, "problem_id");
  p.title = require_string(j, "title");
  p.statement = require_string(j, "statement");
  if (p.statement.empty()) throw DataError("field 'statement' is empty");
  return p;
}

std::filesystem::path default_problems_path(const std::filesystem::path& submissions_path) {
  return submissions_path.parent_path() / "problems.jsonl";
}

Corpus load_corpus(const std::filesystem::path& submissions_path,
                   const std::filesystem::path& problems_path) {
  Corpus corpus;
  const auto ppath = problems_path.empty() ? default_problems_path(submissions_path)
                                           : problems_path;
  for_each_jsonl(ppath, [&](std::size_t line, const Json& j) {
    try {
      Problem p = problem_from_json(j);
      if (!corpus.problems.emplace(p.problem_id, p).second)
        throw DataError("duplicate problem_id '" + p.problem_id + "'");
    } catch (const DataError& e) {
      throw DataError(ppath.string() + ": line " + std::to_string(line) + ": " + e.what());
    }
  });

  std::set<std::string> seen_ids;
  for_each_jsonl(submissions_path, [&](std::size_t line, const Json& j) {
    try {
      Submission s = submission_from_json(j);
      if (!seen_ids.insert(s.submission_id).second)
        throw DataError("duplicate submission_id '" + s.submission_id + "'");
      corpus.submissions.push_back(std::move(s));
    } catch (const DataError& e) {
      throw DataError(submissions_path.string() + ": line " + std::to_string(line) + ": " +
                      e.what());
    }
  });

  std::set<std::string> unresolved;
  for (const auto& s : corpus.submissions)
    if (!corpus.problems.contains(s.problem_id)) unresolved.insert(s.problem_id);
  if (!unresolved.empty()) {
    std::string list;
    for (const auto& id : unresolved) list += (list.empty() ? "" : ", ") + id;
    throw DataError("submissions reference unknown problem_id(s): " + list);
  }
  return corpus;
}

std::vector<Submission> last_incorrect_attempts(const Corpus& corpus,
                                                const std::string& problem_id) {
  if (!corpus.problems.contains(problem_id))
    throw DataError("unknown problem_id: " + problem_id);

  std::map<std::string, const Submission*> latest;  // keyed by student, sorted
  for (const auto& s : corpus.submissions) {
    if (s.problem_id != problem_id || s.is_correct) continue;
    auto [it, inserted] = latest.try_emplace(s.student_id, &s);
    if (inserted) continue;
    const Submission* cur = it->second;
    if (s.timestamp > cur->timestamp ||
        (s.timestamp == cur->timestamp && s.submission_id > cur->submission_id)) {
      it->second = &s;
    }
  }
  std::vector<Submission> out;
  out.reserve(latest.size());
  for (const auto& [student, sub] : latest) out.push_back(*sub);
  return out;
}

std::vector<Submission> sample_submissions(std::span<const Submission> candidates,
                                           std::size_t n, std::uint64_t seed) {
  if (n == 0) throw UsageError("sample size must be at least 1");
  if (candidates.empty()) throw DataError("cannot sample from an empty candidate list");
  if (candidates.size() <= n) return {candidates.begin(), candidates.end()};

  // Partial Fisher-Yates over candidate indices: position i swaps with a
  // uniform position in [i, size).
  std::vector<std::size_t> idx(candidates.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + rng.uniform_index(idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  std::vector<Submission> out;
  out.reserve(n);
  for (std::size_t i : idx) out.push_back(candidates[i]);
  return out;
}

}  // namespace kc::corpus

#include "kc/corpus/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "kc/common/error.hpp"

using namespace kc;
using namespace kc::corpus;

namespace {

const std::filesystem::path kCorpusDir = std::filesystem::path(KC_FIXTURE_DIR) / "corpus";

std::vector<Submission> make_candidates(std::size_t n) {
  std::vector<Submission> out;
  for (std::size_t i = 0; i < n; ++i) {
    Submission s;
    s.submission_id = "c" + std::to_string(i);
    s.student_id = "u" + std::to_string(i);
    s.problem_id = "p";
    s.timestamp = Timestamp{static_cast<std::int64_t>(i)};
    s.code = "x";
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST_CASE("load_corpus reads every record in order") {
  Corpus c = load_corpus(kCorpusDir / "three" / "submissions.jsonl");
  REQUIRE(c.submissions.size() == 3);
  CHECK(c.submissions[0].submission_id == "s1");
  CHECK(c.submissions[2].submission_id == "s3");
  CHECK(c.submissions[2].timestamp.epoch_ms % 1000 == 250);
  CHECK(c.problems.at("p1").title == "Sum");
}

TEST_CASE("load_corpus reports the line of a record missing a field") {
  try {
    load_corpus(kCorpusDir / "missing_field" / "submissions.jsonl");
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("is_correct") != std::string::npos);
  }
}

TEST_CASE("load_corpus lists every unresolved problem id") {
  try {
    load_corpus(kCorpusDir / "bad_problem" / "submissions.jsonl");
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("p7") != std::string::npos);
    CHECK(msg.find("p9") != std::string::npos);
  }
}

TEST_CASE("per-problem counts on the two-problem fixture") {
  Corpus c = load_corpus(kCorpusDir / "two_problems" / "submissions.jsonl");
  CHECK(c.submissions.size() == 10);
  const auto counts = c.counts_by_problem();
  CHECK(counts.at("p1") == 6);
  CHECK(counts.at("p2") == 4);
}

TEST_CASE("last_incorrect_attempts picks the latest incorrect attempt") {
  Corpus c;
  c.problems["p"] = Problem{"p", "t", "s"};
  auto add = [&](std::string id, std::int64_t t, bool ok, std::string student = "u") {
    c.submissions.push_back(Submission{id, student, "p", Timestamp{t}, "code", ok});
  };
  add("t1", 1, false);
  add("t2", 2, true);
  add("t3", 3, false);
  add("v1", 5, true, "v");
  const auto out = last_incorrect_attempts(c, "p");
  REQUIRE(out.size() == 1);
  CHECK(out[0].submission_id == "t3");
  CHECK_THROWS_AS(last_incorrect_attempts(c, "missing"), DataError);
}

TEST_CASE("last_incorrect_attempts matches a brute-force scan of the five-student fixture") {
  Corpus c = load_corpus(kCorpusDir / "five_students" / "submissions.jsonl");
  const auto out = last_incorrect_attempts(c, "fix45");

  // Oracle: for every student, scan all their incorrect fix45 rows and keep
  // the one no other row beats on (timestamp, submission_id).
  std::set<std::string> students;
  for (const auto& s : c.submissions)
    if (s.problem_id == "fix45") students.insert(s.student_id);
  std::vector<std::string> expected;
  for (const auto& student : students) {
    for (const auto& s : c.submissions) {
      if (s.student_id != student || s.problem_id != "fix45" || s.is_correct) continue;
      bool beaten = false;
      for (const auto& o : c.submissions) {
        if (o.student_id != student || o.problem_id != "fix45" || o.is_correct) continue;
        if (o.timestamp > s.timestamp ||
            (o.timestamp == s.timestamp && o.submission_id > s.submission_id))
          beaten = true;
      }
      if (!beaten) expected.push_back(s.submission_id);
    }
  }

  REQUIRE(out.size() == 3);
  std::vector<std::string> got;
  for (const auto& s : out) {
    CHECK_FALSE(s.is_correct);
    got.push_back(s.submission_id);
  }
  CHECK(got == expected);
  CHECK(got == std::vector<std::string>{"a3", "c2", "e1"});
}

TEST_CASE("sample_submissions returns the population when it fits") {
  const auto cands = make_candidates(50);
  const auto out = sample_submissions(cands, 50, 1);
  CHECK(out.size() == 50);
  CHECK_THROWS_AS(sample_submissions({}, 5, 1), DataError);
  CHECK_THROWS_AS(sample_submissions(cands, 0, 1), UsageError);
}

TEST_CASE("sample_submissions is deterministic and duplicate-free") {
  const auto cands = make_candidates(100);
  const auto a = sample_submissions(cands, 50, 7);
  const auto b = sample_submissions(cands, 50, 7);
  REQUIRE(a.size() == 50);
  std::vector<std::string> ia, ib;
  for (const auto& s : a) ia.push_back(s.submission_id);
  for (const auto& s : b) ib.push_back(s.submission_id);
  CHECK(ia == ib);
  CHECK(std::set<std::string>(ia.begin(), ia.end()).size() == 50);
  const auto c = sample_submissions(cands, 50, 8);
  std::vector<std::string> ic;
  for (const auto& s : c) ic.push_back(s.submission_id);
  CHECK(ic != ia);
}

TEST_CASE("sample_submissions inclusion frequencies are uniform") {
  const auto cands = make_candidates(100);
  std::vector<int> hits(100, 0);
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    for (const auto& s : sample_submissions(cands, 50, static_cast<std::uint64_t>(t) * 7919 + 3))
      ++hits[std::stoul(s.submission_id.substr(1))];
  }
  for (int h : hits) {
    const double freq = static_cast<double>(h) / trials;
    CHECK(std::abs(freq - 0.5) <= 0.02);
  }
}

TEST_CASE("timestamps parse and format in UTC") {
  const auto t = parse_timestamp("1970-01-02T00:00:01.5Z");
  CHECK(t.epoch_ms == 86401500);
  CHECK(format_timestamp(t) == "1970-01-02T00:00:01.500Z");
  CHECK(parse_timestamp("2019-02-01 10:00:00") < parse_timestamp("2019-02-01T10:00:00.001Z"));
  CHECK_THROWS_AS(parse_timestamp("yesterday"), DataError);
  CHECK_THROWS_AS(parse_timestamp("2019-02-30T00:00:00Z"), DataError);
}

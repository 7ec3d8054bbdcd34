#include <random>

#include "core/errors.hpp"
#include "core/line_diff.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace dpage;

namespace {

std::vector<std::string> side(const std::vector<DiffLine>& script, LineOp skip) {
  std::vector<std::string> out;
  for (const auto& l : script) {
    if (l.op != skip) out.push_back(l.text);
  }
  return out;
}

std::size_t keeps(const std::vector<DiffLine>& script) {
  std::size_t n = 0;
  for (const auto& l : script) n += l.op == LineOp::keep;
  return n;
}

}  // namespace

TEST_CASE("split and join follow the trailing-newline rule") {
  CHECK(split_lines("a\nb").lines == std::vector<std::string>{"a", "b"});
  CHECK_FALSE(split_lines("a\nb").eof_newline);
  CHECK(split_lines("a\nb\n").lines == std::vector<std::string>{"a", "b"});
  CHECK(split_lines("a\nb\n").eof_newline);
  CHECK(split_lines("").lines.empty());
  CHECK(split_lines("\n").lines == std::vector<std::string>{""});
  for (const std::string text : {"", "a", "a\n", "\n\n", "a\n\nb", "x\ny\n"}) {
    const auto s = split_lines(text);
    CHECK(join_lines(s.lines, s.eof_newline) == text);
  }
}

TEST_CASE("diff of a one-line edit") {
  const std::vector<std::string> a{"total = 0", "for n in xs:", "print(total)"};
  const std::vector<std::string> b{"total = 0", "for n in ys:", "print(total)"};
  const auto d = diff_lines(a, b);
  REQUIRE(d.size() == 4);
  CHECK(d[0] == DiffLine{LineOp::keep, "total = 0"});
  CHECK(d[1].op == LineOp::del);
  CHECK(d[2].op == LineOp::add);
  CHECK(d[3] == DiffLine{LineOp::keep, "print(total)"});
}

TEST_CASE("compute_diff omits unchanged files and marks deletions") {
  CodeSnapshot a{{{"keep.py", "x\n"}, {"gone.py", "y\n"}, {"edit.py", "1\n2\n"}}};
  CodeSnapshot b{{{"keep.py", "x\n"}, {"edit.py", "1\n3"}, {"new.py", ""}}};
  const auto diffs = compute_diff(a, b);
  std::map<std::string, FileDiff> by_file;
  for (const auto& d : diffs) by_file[d.file] = d;
  CHECK_FALSE(by_file.contains("keep.py"));
  CHECK(by_file.at("gone.py").deleted);
  CHECK_FALSE(by_file.at("edit.py").eof_newline);
  CHECK(by_file.at("new.py").lines.empty());
  CHECK(apply_diff(a, diffs) == b);
}

TEST_CASE("apply_diff reports the mismatching file and line") {
  const CodeSnapshot base{{{"main.py", "a\nb\n"}}};
  const std::vector<FileDiff> diff{{"main.py", {{LineOp::keep, "a"}, {LineOp::del, "c"}}, false, true}};
  try {
    apply_diff(base, diff);
    FAIL("expected a context mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::context_mismatch);
    CHECK(std::string(e.what()).find("main.py") != std::string::npos);
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
  const std::vector<FileDiff> missing{{"other.py", {{LineOp::keep, "a"}}, false, true}};
  CHECK_THROWS_AS(apply_diff(base, missing), Error);
  const std::vector<FileDiff> short_diff{{"main.py", {{LineOp::keep, "a"}}, false, true}};
  CHECK_THROWS_AS(apply_diff(base, short_diff), Error);
}

TEST_CASE("diff_lines scripts are valid and minimal") {
  std::mt19937 rng(7);
  for (int i = 0; i < 3000; ++i) {
    const auto a = testing::random_lines(rng, i % 3 == 0 ? 30 : 8);
    const auto b = i % 2 ? testing::mutate_lines(rng, a) : testing::random_lines(rng, 8);
    const auto d = diff_lines(a, b);
    REQUIRE(side(d, LineOp::add) == a);
    REQUIRE(side(d, LineOp::del) == b);
    const std::size_t best = a.size() <= 8 && b.size() <= 8 ? testing::lcs_exhaustive(a, b) : testing::lcs_table(a, b);
    REQUIRE(keeps(d) == best);
  }
}

TEST_CASE("the two LCS oracles agree") {
  std::mt19937 rng(11);
  for (int i = 0; i < 500; ++i) {
    const auto a = testing::random_lines(rng, 8);
    const auto b = testing::random_lines(rng, 8);
    REQUIRE(testing::lcs_exhaustive(a, b) == testing::lcs_table(a, b));
  }
}

TEST_CASE("snapshot round-trip through compute_diff and apply_diff") {
  std::mt19937 rng(3);
  for (int i = 0; i < 1000; ++i) {
    const auto a = testing::random_snapshot(rng);
    const auto b = i % 2 ? testing::mutate_snapshot(rng, a) : testing::random_snapshot(rng);
    REQUIRE(apply_diff(a, compute_diff(a, b)) == b);
  }
}

TEST_CASE("large inputs stay fast") {
  std::vector<std::string> a, b;
  for (int i = 0; i < 20000; ++i) a.push_back("line " + std::to_string(i));
  b = a;
  b.erase(b.begin() + 100, b.begin() + 200);
  b.insert(b.begin() + 15000, "inserted");
  const auto d = diff_lines(a, b);
  CHECK(keeps(d) == a.size() - 100);
}

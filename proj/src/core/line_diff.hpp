#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dpage {

enum class LineOp { keep, add, del };

const char* to_string(LineOp op);
LineOp line_op_from_string(std::string_view s);

struct DiffLine {
  LineOp op = LineOp::keep;
  std::string text;

  bool operator==(const DiffLine&) const = default;
};

// Change to one file relative to the parent cell's snapshot. `eof_newline`
// describes the resulting file; base trailing-newline state is not consulted.
struct FileDiff {
  std::string file;
  std::vector<DiffLine> lines;
  bool deleted = false;
  bool eof_newline = true;

  bool operator==(const FileDiff&) const = default;
};

struct CodeSnapshot {
  std::map<std::string, std::string> files;

  bool empty() const { return files.empty(); }
  bool operator==(const CodeSnapshot&) const = default;
};

struct SplitText {
  std::vector<std::string> lines;
  bool eof_newline = false;
};

// "a\nb" -> {[a, b], false}; "a\nb\n" -> {[a, b], true}; "" -> {[], false}.
SplitText split_lines(std::string_view text);
std::string join_lines(std::span<const std::string> lines, bool eof_newline);

// Shortest edit script between two line sequences (Myers, linear space).
// Keep lines form a longest common subsequence.
std::vector<DiffLine> diff_lines(std::span<const std::string> old_lines,
                                 std::span<const std::string> new_lines);

// Throws Error(context_mismatch) naming the file and line when the keep/del
// lines of a diff disagree with the base.
CodeSnapshot apply_diff(const CodeSnapshot& base, std::span<const FileDiff> diffs);

// Files identical in both snapshots are omitted from the result.
std::vector<FileDiff> compute_diff(const CodeSnapshot& old_snapshot,
                                   const CodeSnapshot& new_snapshot);

std::size_t line_count(std::string_view text);

}  // namespace dpage

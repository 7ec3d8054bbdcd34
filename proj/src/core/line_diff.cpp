#include "core/line_diff.hpp"

#include <optional>
#include <unordered_map>

#include "core/errors.hpp"

namespace dpage {

const char* to_string(LineOp op) {
  switch (op) {
    case LineOp::keep: return "keep";
    case LineOp::add: return "add";
    case LineOp::del: return "del";
  }
  return "keep";
}

LineOp line_op_from_string(std::string_view s) {
  if (s == "keep") return LineOp::keep;
  if (s == "add") return LineOp::add;
  if (s == "del") return LineOp::del;
  throw Error(ErrorCode::parse, "unknown diff op '" + std::string(s) + "'");
}

SplitText split_lines(std::string_view text) {
  SplitText out;
  if (text.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      out.lines.emplace_back(text.substr(start));
      break;
    }
    out.lines.emplace_back(text.substr(start, nl - start));
    start = nl + 1;
    if (start == text.size()) {
      out.eof_newline = true;
      break;
    }
  }
  return out;
}

std::string join_lines(std::span<const std::string> lines, bool eof_newline) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i > 0) out.push_back('\n');
    out += lines[i];
  }
  if (eof_newline && !lines.empty()) out.push_back('\n');
  return out;
}

std::size_t line_count(std::string_view text) { return split_lines(text).lines.size(); }

namespace {

// Linear-space Myers: find the middle snake of a box, recurse on both halves.
class MyersSolver {
 public:
  MyersSolver(std::span<const int> a, std::span<const int> b) : a_(a), b_(b) {}

  struct Point {
    long x;
    long y;
  };

  std::vector<Point> path() {
    auto p = find_path(0, 0, static_cast<long>(a_.size()), static_cast<long>(b_.size()));
    return p ? std::move(*p) : std::vector<Point>{};
  }

 private:
  struct Box {
    long left, top, right, bottom;
    long width() const { return right - left; }
    long height() const { return bottom - top; }
    long size() const { return width() + height(); }
    long delta() const { return width() - height(); }
  };

  // Diagonal-indexed array with negative indices.
  struct Frontier {
    explicit Frontier(long max) : offset(max + 1), v(static_cast<std::size_t>(2 * max + 3), 0) {}
    long& operator[](long k) { return v[static_cast<std::size_t>(k + offset)]; }
    long offset;
    std::vector<long> v;
  };

  using Snake = std::pair<Point, Point>;

  std::optional<std::vector<Point>> find_path(long left, long top, long right, long bottom) {
    const Box box{left, top, right, bottom};
    const auto snake = midpair(box);
    if (!snake) return std::nullopt;
    const auto [start, finish] = *snake;
    auto head = find_path(box.left, box.top, start.x, start.y);
    auto tail = find_path(finish.x, finish.y, box.right, box.bottom);
    std::vector<Point> out = head ? std::move(*head) : std::vector<Point>{start};
    if (tail) {
      out.insert(out.end(), tail->begin(), tail->end());
    } else {
      out.push_back(finish);
    }
    return out;
  }

  std::optional<Snake> midpair(const Box& box) {
    if (box.size() == 0) return std::nullopt;
    const long max = (box.size() + 1) / 2;
    Frontier vf(max);
    Frontier vb(max);
    vf[1] = box.left;
    vb[1] = box.bottom;
    for (long d = 0; d <= max; ++d) {
      if (auto s = forwards(box, vf, vb, d)) return s;
      if (auto s = backward(box, vf, vb, d)) return s;
    }
    return std::nullopt;
  }

  std::optional<Snake> forwards(const Box& box, Frontier& vf, Frontier& vb, long d) {
    for (long k = d; k >= -d; k -= 2) {
      const long c = k - box.delta();
      long px;
      long x;
      if (k == -d || (k != d && vf[k - 1] < vf[k + 1])) {
        px = x = vf[k + 1];
      } else {
        px = vf[k - 1];
        x = px + 1;
      }
      long y = box.top + (x - box.left) - k;
      const long py = (d == 0 || x != px) ? y : y - 1;
      while (x < box.right && y < box.bottom && a_[x] == b_[y]) {
        ++x;
        ++y;
      }
      vf[k] = x;
      if ((box.delta() & 1) != 0 && c >= -(d - 1) && c <= d - 1 && y >= vb[c]) {
        return Snake{{px, py}, {x, y}};
      }
    }
    return std::nullopt;
  }

  std::optional<Snake> backward(const Box& box, Frontier& vf, Frontier& vb, long d) {
    for (long c = d; c >= -d; c -= 2) {
      const long k = c + box.delta();
      long py;
      long y;
      if (c == -d || (c != d && vb[c - 1] > vb[c + 1])) {
        py = y = vb[c + 1];
      } else {
        py = vb[c - 1];
        y = py - 1;
      }
      long x = box.left + (y - box.top) + k;
      const long px = (d == 0 || y != py) ? x : x + 1;
      while (x > box.left && y > box.top && a_[x - 1] == b_[y - 1]) {
        --x;
        --y;
      }
      vb[c] = y;
      if ((box.delta() & 1) == 0 && k >= -d && k <= d && x <= vf[k]) {
        return Snake{{x, y}, {px, py}};
      }
    }
    return std::nullopt;
  }

  std::span<const int> a_;
  std::span<const int> b_;
};

}  // namespace

std::vector<DiffLine> diff_lines(std::span<const std::string> old_lines,
                                 std::span<const std::string> new_lines) {
  std::vector<DiffLine> out;
  std::size_t prefix = 0;
  while (prefix < old_lines.size() && prefix < new_lines.size() &&
         old_lines[prefix] == new_lines[prefix]) {
    ++prefix;
  }
  std::size_t suffix = 0;
  while (suffix < old_lines.size() - prefix && suffix < new_lines.size() - prefix &&
         old_lines[old_lines.size() - 1 - suffix] == new_lines[new_lines.size() - 1 - suffix]) {
    ++suffix;
  }
  for (std::size_t i = 0; i < prefix; ++i) out.push_back({LineOp::keep, old_lines[i]});

  const auto a_lines = old_lines.subspan(prefix, old_lines.size() - prefix - suffix);
  const auto b_lines = new_lines.subspan(prefix, new_lines.size() - prefix - suffix);

  // Intern lines so the solver compares integers.
  std::unordered_map<std::string_view, int> ids;
  auto intern = [&](std::span<const std::string> lines) {
    std::vector<int> v;
    v.reserve(lines.size());
    for (const auto& l : lines) {
      v.push_back(ids.try_emplace(l, static_cast<int>(ids.size())).first->second);
    }
    return v;
  };
  const std::vector<int> a = intern(a_lines);
  const std::vector<int> b = intern(b_lines);

  const auto points = MyersSolver(a, b).path();
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    long x = points[i].x;
    long y = points[i].y;
    const long x2 = points[i + 1].x;
    const long y2 = points[i + 1].y;
    auto walk_diagonal = [&] {
      while (x < x2 && y < y2 && a[x] == b[y]) {
        out.push_back({LineOp::keep, a_lines[x]});
        ++x;
        ++y;
      }
    };
    walk_diagonal();
    const long diff = (x2 - x) - (y2 - y);
    if (diff == -1) {
      out.push_back({LineOp::add, b_lines[y]});
      ++y;
    } else if (diff == 1) {
      out.push_back({LineOp::del, a_lines[x]});
      ++x;
    }
    walk_diagonal();
  }

  for (std::size_t i = old_lines.size() - suffix; i < old_lines.size(); ++i) {
    out.push_back({LineOp::keep, old_lines[i]});
  }
  return out;
}

CodeSnapshot apply_diff(const CodeSnapshot& base, std::span<const FileDiff> diffs) {
  CodeSnapshot result = base;
  for (const FileDiff& fd : diffs) {
    if (fd.file.empty()) throw Error(ErrorCode::invalid_argument, "file diff with empty filename");
    auto it = result.files.find(fd.file);
    if (fd.deleted) {
      if (!fd.lines.empty()) {
        throw Error(ErrorCode::invalid_argument, "deleted file diff for '" + fd.file + "' carries lines");
      }
      if (it == result.files.end()) {
        throw Error(ErrorCode::context_mismatch, "cannot delete absent file '" + fd.file + "'");
      }
      result.files.erase(it);
      continue;
    }

    std::vector<std::string> base_lines;
    if (it != result.files.end()) base_lines = split_lines(it->second).lines;

    std::vector<std::string> out;
    std::size_t pos = 0;
    for (const DiffLine& line : fd.lines) {
      if (line.op == LineOp::add) {
        out.push_back(line.text);
        continue;
      }
      if (it == result.files.end()) {
        throw Error(ErrorCode::context_mismatch,
                    "diff for absent file '" + fd.file + "' contains keep/del lines");
      }
      if (pos >= base_lines.size() || base_lines[pos] != line.text) {
        throw Error(ErrorCode::context_mismatch, "context mismatch in '" + fd.file + "' at line " +
                                                     std::to_string(pos + 1));
      }
      if (line.op == LineOp::keep) out.push_back(line.text);
      ++pos;
    }
    if (pos != base_lines.size()) {
      throw Error(ErrorCode::context_mismatch, "diff for '" + fd.file + "' ends at line " +
                                                   std::to_string(pos + 1) + " of " +
                                                   std::to_string(base_lines.size()));
    }
    result.files[fd.file] = join_lines(out, fd.eof_newline);
  }
  return result;
}

std::vector<FileDiff> compute_diff(const CodeSnapshot& old_snapshot,
                                   const CodeSnapshot& new_snapshot) {
  std::vector<FileDiff> out;
  auto old_it = old_snapshot.files.begin();
  auto new_it = new_snapshot.files.begin();
  while (old_it != old_snapshot.files.end() || new_it != new_snapshot.files.end()) {
    const bool take_old = new_it == new_snapshot.files.end() ||
                          (old_it != old_snapshot.files.end() && old_it->first < new_it->first);
    const bool take_new = old_it == old_snapshot.files.end() ||
                          (new_it != new_snapshot.files.end() && new_it->first < old_it->first);
    if (take_old) {
      out.push_back(FileDiff{old_it->first, {}, true, false});
      ++old_it;
    } else if (take_new) {
      const SplitText s = split_lines(new_it->second);
      FileDiff fd{new_it->first, {}, false, s.eof_newline};
      for (const auto& l : s.lines) fd.lines.push_back({LineOp::add, l});
      out.push_back(std::move(fd));
      ++new_it;
    } else {
      if (old_it->second != new_it->second) {
        const SplitText a = split_lines(old_it->second);
        const SplitText b = split_lines(new_it->second);
        out.push_back(FileDiff{new_it->first, diff_lines(a.lines, b.lines), false, b.eof_newline});
      }
      ++old_it;
      ++new_it;
    }
  }
  return out;
}

}  // namespace dpage

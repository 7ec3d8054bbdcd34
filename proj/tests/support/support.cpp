#include "support.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "core/encoding.hpp"

namespace testing {

namespace fs = std::filesystem;

fs::path fixture_path(const std::string& name) { return fs::path(DPAGE_FIXTURE_DIR) / name; }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

dpage::Page load_fixture(const std::string& name) { return dpage::load_page(read_file(fixture_path(name))); }

TempDir::TempDir() : path_(fs::temp_directory_path() / ("dpage-test-" + dpage::random_hex(8))) {
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

namespace {

const std::vector<std::string> kVocabulary = {
    "", "x = 1", "y = 2", "print(x)", "    return x", "}", "{", "for i in range(3):", "  pass", "# note",
};

std::size_t pick(std::mt19937& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

bool coin(std::mt19937& rng, double p) { return std::bernoulli_distribution(p)(rng); }

}  // namespace

std::vector<std::string> random_lines(std::mt19937& rng, std::size_t max_len) {
  const std::size_t n = pick(rng, max_len + 1);
  // Narrow vocabularies make long runs of equal lines.
  const std::size_t vocab = 1 + pick(rng, kVocabulary.size());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(kVocabulary[pick(rng, vocab)]);
  return out;
}

std::vector<std::string> mutate_lines(std::mt19937& rng, const std::vector<std::string>& base) {
  std::vector<std::string> out;
  for (const auto& line : base) {
    const std::size_t r = pick(rng, 10);
    if (r == 0) continue;
    if (r == 1) out.push_back(kVocabulary[pick(rng, kVocabulary.size())]);
    if (r == 2) {
      out.push_back(kVocabulary[pick(rng, kVocabulary.size())]);
      continue;
    }
    out.push_back(line);
  }
  if (coin(rng, 0.3)) out.push_back(kVocabulary[pick(rng, kVocabulary.size())]);
  if (coin(rng, 0.1)) out.clear();
  return out;
}

namespace {

std::string to_text(const std::vector<std::string>& lines, std::mt19937& rng) {
  if (lines.empty()) return "";
  return dpage::join_lines(lines, coin(rng, 0.7));
}

}  // namespace

std::string random_text(std::mt19937& rng, std::size_t max_lines) { return to_text(random_lines(rng, max_lines), rng); }

std::string mutate_text(std::mt19937& rng, const std::string& base) {
  return to_text(mutate_lines(rng, dpage::split_lines(base).lines), rng);
}

dpage::CodeSnapshot random_snapshot(std::mt19937& rng) {
  static const std::vector<std::string> names = {"main.py", "util.py", "README.md", "src/app.js"};
  dpage::CodeSnapshot s;
  for (const auto& n : names) {
    if (coin(rng, 0.4)) s.files[n] = random_text(rng, 8);
  }
  return s;
}

dpage::CodeSnapshot mutate_snapshot(std::mt19937& rng, const dpage::CodeSnapshot& base) {
  dpage::CodeSnapshot s;
  for (const auto& [name, text] : base.files) {
    const std::size_t r = pick(rng, 6);
    if (r == 0) continue;  // file removed
    s.files[name] = r <= 2 ? mutate_text(rng, text) : text;
  }
  if (coin(rng, 0.3)) s.files["new" + std::to_string(pick(rng, 3)) + ".py"] = random_text(rng, 6);
  return s;
}

std::size_t lcs_exhaustive(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& large = a.size() <= b.size() ? b : a;
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << small.size()); ++mask) {
    const auto count = static_cast<std::size_t>(__builtin_popcount(mask));
    if (count <= best) continue;
    std::size_t j = 0;
    bool ok = true;
    for (std::size_t i = 0; i < small.size() && ok; ++i) {
      if (!(mask & (1u << i))) continue;
      while (j < large.size() && large[j] != small[i]) ++j;
      if (j == large.size()) ok = false;
      else ++j;
    }
    if (ok) best = count;
  }
  return best;
}

std::size_t lcs_table(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
    }
  }
  return t[a.size()][b.size()];
}

NavigationOracle navigation_oracle(const std::map<std::string, std::string>& parent_of, const std::string& root,
                                   const std::string& target, const std::string& current) {
  auto path_to = [&](std::string id) {
    std::vector<std::string> path{id};
    while (id != root) {
      id = parent_of.at(id);
      path.push_back(id);
    }
    std::reverse(path.begin(), path.end());
    return path;
  };
  const auto main = path_to(target);
  const auto mine = path_to(current);
  NavigationOracle out;
  for (std::size_t depth = 0; depth < mine.size(); ++depth) {
    if (depth < main.size() && mine[depth] == main[depth]) continue;
    out.divergence = mine[depth];
    out.back_to_main = depth < main.size() ? main[depth] : main.back();
    break;
  }
  return out;
}

}  // namespace testing

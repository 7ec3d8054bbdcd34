#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "core/line_diff.hpp"
#include "core/page_model.hpp"

namespace testing {

std::filesystem::path fixture_path(const std::string& name);
std::string read_file(const std::filesystem::path& path);
dpage::Page load_fixture(const std::string& name);

// Fresh, empty directory under the system temp dir; removed by the destructor.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// ---- generators ----

// Lines drawn from a small vocabulary so duplicates are frequent.
std::vector<std::string> random_lines(std::mt19937& rng, std::size_t max_len);
// A mutation of `base`: random deletions, insertions and replacements.
std::vector<std::string> mutate_lines(std::mt19937& rng, const std::vector<std::string>& base);
// File text, sometimes empty, sometimes without a trailing newline.
std::string random_text(std::mt19937& rng, std::size_t max_lines);
std::string mutate_text(std::mt19937& rng, const std::string& base);
dpage::CodeSnapshot random_snapshot(std::mt19937& rng);
dpage::CodeSnapshot mutate_snapshot(std::mt19937& rng, const dpage::CodeSnapshot& base);

// ---- oracles ----

// Longest common subsequence length by exhaustively trying every subsequence
// of the shorter side. Only for small inputs.
std::size_t lcs_exhaustive(const std::vector<std::string>& a, const std::vector<std::string>& b);
// Textbook O(nm) dynamic program.
std::size_t lcs_table(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Target-path cell at the divergence depth, computed from the definitions by
// walking parent links only.
struct NavigationOracle {
  std::optional<std::string> divergence;
  std::optional<std::string> back_to_main;
};
NavigationOracle navigation_oracle(const std::map<std::string, std::string>& parent_of,
                                   const std::string& root, const std::string& target,
                                   const std::string& current);

}  // namespace testing

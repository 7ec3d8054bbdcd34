#include <random>

#include "core/code_state.hpp"
#include "core/errors.hpp"
#include "doctest.h"
#include "edit_oracle.hpp"
#include "support.hpp"

using namespace dpage;

TEST_CASE("fixture snapshots") {
  const Page page = testing::load_fixture("fig3.dpage");
  const std::string base = "total = 0\nfor n in [1, 2, 3]:\n    total += n\nprint(total)\n";
  CHECK(snapshot_at(page, "1a").files.at("main.py") == base);
  CHECK(snapshot_at(page, "3b").files.at("main.py") == base);
  CHECK(snapshot_at(page, "5b").files.at("main.py") ==
        "total = 0\nfor n in range(1, 4):\n    total += n\nprint(f\"total = {total}\")\n");
  const auto all = all_snapshots(page);
  CHECK(all.size() == page.cells.size());
  for (const auto& [id, snap] : all) CHECK(snapshot_at(page, id) == snap);
}

TEST_CASE("rederive_all needs every cell") {
  const Page page = testing::load_fixture("fig3.dpage");
  auto snaps = all_snapshots(page);
  CHECK(rederive_all(page, snaps) == page);
  snaps.erase("4c");
  CHECK_THROWS_AS(rederive_all(page, snaps), Error);
}

TEST_CASE("random edit sequences preserve snapshots") {
  std::mt19937 rng(101);
  for (int i = 0; i < 60; ++i) {
    const auto failure = testing::run_edit_sequence(rng, 30, 25);
    INFO(failure.value_or(""));
    REQUIRE_FALSE(failure.has_value());
  }
}

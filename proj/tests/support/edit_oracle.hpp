#pragma once

#include <optional>
#include <random>
#include <string>

namespace testing {

// Runs one random author edit sequence (add/edit/move/delete/set_code) on a
// random tree of at most `max_cells` cells, comparing every surviving cell's
// reconstructed snapshot with an independently materialized copy after each
// step. Returns a description of the first divergence, if any.
std::optional<std::string> run_edit_sequence(std::mt19937& rng, std::size_t max_cells, int steps);

}  // namespace testing

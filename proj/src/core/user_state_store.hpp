#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "core/navigation.hpp"

namespace dpage {

inline constexpr std::string_view kStateExtension = ".dstate";

// $XDG_DATA_HOME/dpage/state, falling back to ~/.local/share/dpage/state.
std::filesystem::path default_state_dir();

// <dir>/<key>.dstate; keys are page ids (or session ids in multi-user mode).
std::filesystem::path state_path(const std::filesystem::path& dir, std::string_view key);

// Atomic: temp file + fsync + rename. Key defaults to state.page_id.
void save_state(const UserState& state, const std::filesystem::path& dir, std::string_view key = {});

// Absent when no state was ever committed. A corrupt file is moved aside to
// "<key>.dstate.corrupt[-N]" and Error(corrupt_state) is thrown naming it.
std::optional<UserState> load_state(std::string_view key, const std::filesystem::path& dir);

namespace detail {
// The two phases of save_state, exposed for fault-injection tests.
std::filesystem::path write_temp(const UserState& state, const std::filesystem::path& dir, std::string_view key);
void commit(const std::filesystem::path& temp, const std::filesystem::path& final_path);
}  // namespace detail

}  // namespace dpage

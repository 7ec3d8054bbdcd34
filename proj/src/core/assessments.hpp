#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stop_token>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "core/directive_parser.hpp"
#include "json.hpp"

namespace dpage {

enum class AnswerStatus { unanswered, correct, incorrect, revealed, skipped };

const char* to_string(AnswerStatus status);
AnswerStatus answer_status_from_string(std::string_view s);

using SelectedOptions = std::vector<std::size_t>;  // sorted, unique
using LastAnswer = std::variant<std::monostate, SelectedOptions, std::string>;

struct AnswerRecord {
  std::string directive_id;
  int attempts = 0;
  LastAnswer last_answer;
  AnswerStatus status = AnswerStatus::unanswered;

  bool operator==(const AnswerRecord&) const = default;
};

nlohmann::json answer_to_json(const AnswerRecord& record);
AnswerRecord answer_from_json(const nlohmann::json& doc);

struct ChoiceGrade {
  bool correct = false;
  std::vector<std::pair<std::size_t, std::string>> feedback;  // (option index, text)
};

// correct iff the selection equals the set of correct options.
ChoiceGrade answer_multiple_choice(const MultipleChoiceSpec& spec, const std::set<std::size_t>& selected);

// Grades and records one submission (attempts += 1).
AnswerRecord record_choice(AnswerRecord record, const std::set<std::size_t>& selected,
                           const ChoiceGrade& grade);

struct LanguageRunner {
  std::vector<std::string> command;  // argv template; "{file}" is the submission path
  int timeout_ms = 10000;
  bool enabled = false;
};

struct RunnerConfig {
  std::map<std::string, LanguageRunner> languages;
};

RunnerConfig runner_config_from_json(const nlohmann::json& doc);

struct RunResult {
  int exit_status = -1;
  bool timed_out = false;
  bool cancelled = false;
  std::string stdout_text;
  std::string stderr_text;
  std::optional<bool> tests_passed;
  long duration_ms = 0;
};

nlohmann::json run_result_to_json(const RunResult& result);

// Runs `code` followed by the question's tests through the configured runner.
// Throws Error(runner) when disabled, unsupported, or the command cannot be launched;
// a timeout is reported in the result.
RunResult submit_code_answer(const CodeQuestionSpec& spec, std::string_view code,
                             const RunnerConfig& runner, std::stop_token stop = {});

AnswerRecord record_code_submission(AnswerRecord record, std::string code);
AnswerRecord record_code_result(AnswerRecord record, const RunResult& result);

// Throws Error(not_found) when the question has no stored solution.
std::string reveal_answer(const CodeQuestionSpec& spec);
std::string reveal_answer(const MultipleChoiceSpec& spec);

AnswerRecord mark_revealed(AnswerRecord record);
AnswerRecord skip(AnswerRecord record);

}  // namespace dpage

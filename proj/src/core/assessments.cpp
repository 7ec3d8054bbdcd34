#include "core/assessments.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sched.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "core/encoding.hpp"
#include "core/errors.hpp"

namespace dpage {

using nlohmann::json;

const char* to_string(AnswerStatus status) {
  switch (status) {
    case AnswerStatus::unanswered: return "unanswered";
    case AnswerStatus::correct: return "correct";
    case AnswerStatus::incorrect: return "incorrect";
    case AnswerStatus::revealed: return "revealed";
    case AnswerStatus::skipped: return "skipped";
  }
  return "unanswered";
}

AnswerStatus answer_status_from_string(std::string_view s) {
  if (s == "unanswered") return AnswerStatus::unanswered;
  if (s == "correct") return AnswerStatus::correct;
  if (s == "incorrect") return AnswerStatus::incorrect;
  if (s == "revealed") return AnswerStatus::revealed;
  if (s == "skipped") return AnswerStatus::skipped;
  throw Error(ErrorCode::parse, "unknown answer status '" + std::string(s) + "'");
}

json answer_to_json(const AnswerRecord& record) {
  json last = nullptr;
  if (const auto* sel = std::get_if<SelectedOptions>(&record.last_answer)) {
    last = json{{"selected", *sel}};
  } else if (const auto* code = std::get_if<std::string>(&record.last_answer)) {
    last = json{{"code", *code}};
  }
  return json{{"directiveId", record.directive_id},
              {"attempts", record.attempts},
              {"lastAnswer", std::move(last)},
              {"status", to_string(record.status)}};
}

AnswerRecord answer_from_json(const json& doc) {
  try {
    AnswerRecord r;
    r.directive_id = doc.at("directiveId").get<std::string>();
    r.attempts = doc.at("attempts").get<int>();
    r.status = answer_status_from_string(doc.at("status").get<std::string>());
    const json& last = doc.at("lastAnswer");
    if (last.is_object() && last.contains("selected")) {
      r.last_answer = last.at("selected").get<SelectedOptions>();
    } else if (last.is_object() && last.contains("code")) {
      r.last_answer = last.at("code").get<std::string>();
    } else if (!last.is_null()) {
      throw Error(ErrorCode::parse, "unrecognized lastAnswer");
    }
    if (r.attempts < 0) throw Error(ErrorCode::parse, "negative attempt count");
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("malformed answer record: ") + e.what());
  }
}

ChoiceGrade answer_multiple_choice(const MultipleChoiceSpec& spec,
                                   const std::set<std::size_t>& selected) {
  ChoiceGrade grade;
  std::set<std::size_t> expected;
  for (std::size_t i = 0; i < spec.options.size(); ++i) {
    if (spec.options[i].correct) expected.insert(i);
  }
  for (std::size_t i : selected) {
    if (i >= spec.options.size()) {
      throw Error(ErrorCode::invalid_argument, "option index " + std::to_string(i) + " out of range");
    }
  }
  grade.correct = selected == expected;
  for (std::size_t i : selected) {
    const auto& opt = spec.options[i];
    if (!opt.correct && opt.feedback) grade.feedback.emplace_back(i, *opt.feedback);
  }
  return grade;
}

namespace {

// correct and revealed are sticky; everything else may move to the graded outcome.
AnswerStatus graded_transition(AnswerStatus current, bool correct) {
  if (current == AnswerStatus::correct || current == AnswerStatus::revealed) return current;
  return correct ? AnswerStatus::correct : AnswerStatus::incorrect;
}

}  // namespace

AnswerRecord record_choice(AnswerRecord record, const std::set<std::size_t>& selected,
                           const ChoiceGrade& grade) {
  record.attempts += 1;
  record.last_answer = SelectedOptions(selected.begin(), selected.end());
  record.status = graded_transition(record.status, grade.correct);
  return record;
}

AnswerRecord record_code_submission(AnswerRecord record, std::string code) {
  record.attempts += 1;
  record.last_answer = std::move(code);
  return record;
}

AnswerRecord record_code_result(AnswerRecord record, const RunResult& result) {
  if (result.tests_passed) record.status = graded_transition(record.status, *result.tests_passed);
  return record;
}

std::string reveal_answer(const CodeQuestionSpec& spec) {
  if (!spec.solution) throw Error(ErrorCode::not_found, "code question has no stored solution");
  return *spec.solution;
}

std::string reveal_answer(const MultipleChoiceSpec& spec) {
  std::string out;
  for (const auto& o : spec.options) {
    if (!o.correct) continue;
    if (!out.empty()) out += ", ";
    out += o.label;
  }
  return out;
}

AnswerRecord mark_revealed(AnswerRecord record) {
  record.status = AnswerStatus::revealed;
  return record;
}

AnswerRecord skip(AnswerRecord record) {
  if (record.status != AnswerStatus::correct && record.status != AnswerStatus::revealed) {
    record.status = AnswerStatus::skipped;
  }
  return record;
}

RunnerConfig runner_config_from_json(const json& doc) {
  RunnerConfig cfg;
  if (doc.is_null()) return cfg;
  try {
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      LanguageRunner r;
      r.command = it->at("command").get<std::vector<std::string>>();
      r.timeout_ms = it->value("timeoutMs", 10000);
      r.enabled = it->value("enabled", false);
      if (r.command.empty()) throw Error(ErrorCode::invalid_argument, "runner '" + it.key() + "' has no command");
      if (r.timeout_ms <= 0) throw Error(ErrorCode::invalid_argument, "runner '" + it.key() + "' timeout must be positive");
      cfg.languages.emplace(it.key(), std::move(r));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_argument, std::string("malformed runner config: ") + e.what());
  }
  return cfg;
}

json run_result_to_json(const RunResult& result) {
  json out{{"exitStatus", result.exit_status}, {"timedOut", result.timed_out},
           {"cancelled", result.cancelled},    {"stdout", result.stdout_text},
           {"stderr", result.stderr_text},     {"durationMs", result.duration_ms}};
  out["testsPassed"] = result.tests_passed ? json(*result.tests_passed) : json(nullptr);
  return out;
}

namespace {

constexpr std::size_t kMaxCapture = 1 << 20;

class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() / ("dpage-run-" + random_hex(8));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

struct Pipe {
  int fd[2] = {-1, -1};
  Pipe() {
    if (pipe2(fd, O_CLOEXEC) != 0) throw Error(ErrorCode::runner, "pipe failed");
  }
  ~Pipe() {
    for (int f : fd) {
      if (f >= 0) close(f);
    }
  }
  void close_end(int i) {
    if (fd[i] >= 0) close(fd[i]);
    fd[i] = -1;
  }
};

std::string substitute(std::string arg, const std::string& file, const std::string& dir) {
  auto replace = [&](std::string_view key, const std::string& value) {
    for (std::size_t pos = arg.find(key); pos != std::string::npos; pos = arg.find(key, pos + value.size())) {
      arg.replace(pos, key.size(), value);
    }
  };
  replace("{file}", file);
  replace("{dir}", dir);
  return arg;
}

}  // namespace

RunResult submit_code_answer(const CodeQuestionSpec& spec, std::string_view code,
                             const RunnerConfig& runner, std::stop_token stop) {
  const auto it = runner.languages.find(spec.language);
  if (it == runner.languages.end()) {
    throw Error(ErrorCode::runner, "no runner configured for language '" + spec.language + "'");
  }
  const LanguageRunner& cfg = it->second;
  if (!cfg.enabled) throw Error(ErrorCode::runner, "code runner for '" + spec.language + "' is disabled");

  TempDir dir;
  const auto file = dir.path() / "submission";
  {
    std::ofstream out(file, std::ios::binary);
    out << code;
    if (spec.tests) out << "\n" << *spec.tests << "\n";
    if (!out) throw Error(ErrorCode::runner, "cannot write submission file");
  }

  std::vector<std::string> argv_storage;
  bool has_file = false;
  for (const auto& a : cfg.command) {
    has_file = has_file || a.find("{file}") != std::string::npos;
    argv_storage.push_back(substitute(a, file.string(), dir.path().string()));
  }
  if (!has_file) argv_storage.push_back(file.string());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());
  argv.push_back(nullptr);

  Pipe out_pipe;
  Pipe err_pipe;
  Pipe exec_status;  // carries errno if exec fails
  const auto started = std::chrono::steady_clock::now();
  const pid_t pid = fork();
  if (pid < 0) throw Error(ErrorCode::runner, "fork failed");
  if (pid == 0) {
    setpgid(0, 0);
    // Best effort: a private network namespace needs CAP_SYS_ADMIN.
    unshare(CLONE_NEWNET);
    const int devnull = open("/dev/null", O_RDONLY);
    if (devnull >= 0) dup2(devnull, STDIN_FILENO);
    dup2(out_pipe.fd[1], STDOUT_FILENO);
    dup2(err_pipe.fd[1], STDERR_FILENO);
    if (chdir(dir.path().c_str()) != 0) _exit(127);
    execvp(argv[0], argv.data());
    const int err = errno;
    ssize_t ignored = write(exec_status.fd[1], &err, sizeof err);
    (void)ignored;
    _exit(127);
  }
  out_pipe.close_end(1);
  err_pipe.close_end(1);
  exec_status.close_end(1);

  int exec_errno = 0;
  if (read(exec_status.fd[0], &exec_errno, sizeof exec_errno) == static_cast<ssize_t>(sizeof exec_errno)) {
    waitpid(pid, nullptr, 0);
    throw Error(ErrorCode::runner, "cannot launch '" + argv_storage.front() + "': " + std::strerror(exec_errno));
  }

  RunResult result;
  const auto deadline = started + std::chrono::milliseconds(cfg.timeout_ms);
  pollfd fds[2] = {{out_pipe.fd[0], POLLIN, 0}, {err_pipe.fd[0], POLLIN, 0}};
  std::string* sinks[2] = {&result.stdout_text, &result.stderr_text};
  int open_fds = 2;
  bool killed = false;
  int status = 0;
  bool reaped = false;
  while (true) {
    if (open_fds == 0) {
      // Output closed; wait for exit, still honoring the deadline.
      const pid_t w = waitpid(pid, &status, WNOHANG);
      if (w == pid) {
        reaped = true;
        break;
      }
    }
    const auto now = std::chrono::steady_clock::now();
    if (!killed && (now >= deadline || stop.stop_requested())) {
      kill(-pid, SIGKILL);
      kill(pid, SIGKILL);
      killed = true;
      result.timed_out = !stop.stop_requested();
      result.cancelled = stop.stop_requested();
    }
    if (killed && open_fds == 0) break;
    const int wait_ms = 20;
    if (open_fds > 0) {
      const int n = poll(fds, 2, wait_ms);
      if (n < 0 && errno != EINTR) break;
      for (int i = 0; i < 2; ++i) {
        if (fds[i].fd < 0 || (fds[i].revents & (POLLIN | POLLHUP | POLLERR)) == 0) continue;
        char buf[4096];
        const ssize_t got = read(fds[i].fd, buf, sizeof buf);
        if (got > 0) {
          if (sinks[i]->size() < kMaxCapture) {
            sinks[i]->append(buf, static_cast<std::size_t>(std::min<ssize_t>(got, kMaxCapture - sinks[i]->size())));
          }
        } else {
          fds[i].fd = -1;
          --open_fds;
        }
      }
    } else {
      usleep(wait_ms * 1000);
    }
  }
  if (!reaped) waitpid(pid, &status, 0);

  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - started).count();
  result.duration_ms = killed && result.timed_out ? std::min<long>(elapsed, cfg.timeout_ms) : elapsed;
  if (WIFEXITED(status)) {
    result.exit_status = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.exit_status = 128 + WTERMSIG(status);
  }
  if (spec.tests) result.tests_passed = !killed && result.exit_status == 0;
  return result;
}

}  // namespace dpage

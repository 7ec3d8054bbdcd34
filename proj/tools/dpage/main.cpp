#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "capi.hpp"
#include "json.hpp"
#include "server.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Exit statuses: 0 ok, 1 invalid page, 2 usage/IO/other failure.
constexpr int kInvalid = 1;
constexpr int kFailure = 2;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cli::ApiError(DPAGE_E_IO, "cannot open " + path, "null");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void print_report(const json& report, std::ostream& out) {
  for (const auto& [key, label] : {std::pair{"errors", "error"}, std::pair{"warnings", "warning"}}) {
    if (!report.contains(key)) continue;
    for (const auto& f : report[key]) {
      out << label << ": [" << f.value("code", "") << "]";
      if (f.contains("cellId") && f["cellId"].is_string()) out << " " << f["cellId"].get<std::string>() << ":";
      out << " " << f.value("message", "") << "\n";
    }
  }
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  json cfg = json::parse(read_text(path), nullptr, false);
  if (cfg.is_discarded() || !cfg.is_object()) {
    throw cli::ApiError(DPAGE_E_INVALID_ARGUMENT, "config " + path + " is not a JSON object", "null");
  }
  return cfg;
}

int report_failure(const cli::ApiError& e) {
  std::cerr << "error: " << e.what() << "\n";
  if (e.status() == DPAGE_E_VALIDATION) {
    json detail = json::parse(e.detail(), nullptr, false);
    if (!detail.is_discarded()) print_report(detail, std::cerr);
    return kInvalid;
  }
  return kFailure;
}

int cmd_validate(const std::string& page, bool as_json) {
  char* report = nullptr;
  size_t errors = 0;
  cli::check(dpage_validate_file(page.c_str(), &report, &errors));
  const json doc = json::parse(cli::take(report));
  if (as_json) {
    std::cout << doc.dump(2) << "\n";
  } else {
    print_report(doc, std::cout);
    std::cout << page << ": " << (errors == 0 ? "valid" : "invalid") << " (" << doc["errors"].size()
              << " errors, " << doc["warnings"].size() << " warnings)\n";
  }
  return errors == 0 ? 0 : kInvalid;
}

int cmd_new(const std::string& page, const std::string& title, bool force) {
  if (fs::exists(page) && !force) {
    std::cerr << "error: " << page << " already exists (use --force to overwrite)\n";
    return kFailure;
  }
  dpage_page* raw = nullptr;
  cli::check(dpage_page_new(title.c_str(), &raw));
  cli::PagePtr p(raw);
  cli::check(dpage_page_save_file(p.get(), page.c_str()));
  std::cout << "wrote " << page << "\n";
  return 0;
}

int cmd_gen(const std::string& page, const std::string& config_path, const std::string& topic, int turns,
            const std::string& parent, const std::string& out_path, bool confirm) {
  const cli::PagePtr p = cli::load_page_file(page);
  const std::string config = load_config(config_path).dump();
  dpage_page* raw = nullptr;
  char* ids_json = nullptr;
  cli::check(dpage_page_generate(p.get(), parent.empty() ? nullptr : parent.c_str(), topic.c_str(), turns,
                                 config.c_str(), &raw, &ids_json));
  cli::PagePtr next(raw);
  const json ids = json::parse(cli::take(ids_json));

  for (const auto& id : ids) {
    char* cell = nullptr;
    cli::check(dpage_page_cell(next.get(), id.get<std::string>().c_str(), &cell));
    const json c = json::parse(cli::take(cell));
    std::cout << "--- " << id.get<std::string>() << " (" << c.value("personaId", "") << ", unverified)\n"
              << c.value("source", "") << "\n";
  }
  if (!confirm) {
    std::cout << "drafts not written; rerun with --confirm to add " << ids.size() << " cells\n";
    return 0;
  }
  const std::string target = out_path.empty() ? page : out_path;
  cli::check(dpage_page_save_file(next.get(), target.c_str()));
  std::cout << "added " << ids.size() << " draft cells to " << target << "\n";
  return 0;
}

int cmd_serve(const std::string& page, const std::string& config_path, const std::string& state_dir,
              bool multi_user, const cli::ServeOptions& options) {
  cli::PagePtr p;
  try {
    p = cli::load_page_file(page);
  } catch (const cli::ApiError&) {
    std::cerr << "refusing to serve " << page << "\n";
    throw;
  }
  json config = load_config(config_path);
  if (!state_dir.empty()) config["stateDir"] = state_dir;
  if (multi_user) config["multiUser"] = true;

  dpage_service* raw = nullptr;
  cli::check(dpage_service_create(p.get(), config.dump().c_str(), &raw));
  cli::ServicePtr service(raw);

  char* info = nullptr;
  cli::check(dpage_page_info(p.get(), &info));
  const std::string page_id = json::parse(cli::take(info)).at("id").get<std::string>();
  std::cout << "serving page " << page_id << " from " << page << std::endl;
  return cli::serve(service.get(), page_id, options);
}

int cmd_export(const std::string& page, const std::string& out_dir) {
  const cli::PagePtr p = cli::load_page_file(page);
  cli::check(dpage_page_export_html(p.get(), out_dir.c_str()));
  std::cout << "exported " << page << " to " << (fs::path(out_dir) / "index.html").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Author, check and serve dialog-based tutorial pages"};
  app.set_version_flag("--version", dpage_version());
  app.require_subcommand(1);

  std::string page, config, state_dir, title = "Untitled tutorial", topic, parent, out;
  int turns = 4;
  bool confirm = false, force = false, as_json = false, multi_user = false;
  cli::ServeOptions serve_options;
  std::string ui_dir;

  auto* validate = app.add_subcommand("validate", "Check a page and print its validation report");
  validate->add_option("page,--page", page, "Page file")->required();
  validate->add_flag("--json", as_json, "Print the report as JSON");

  auto* create = app.add_subcommand("new", "Write a skeleton page");
  create->add_option("page,--page", page, "Output page file")->required();
  create->add_option("--title", title, "Page title");
  create->add_flag("--force", force, "Overwrite an existing file");

  auto* gen = app.add_subcommand("gen", "Draft a multi-turn dialog with the configured LLM");
  gen->add_option("page,--page", page, "Page file")->required();
  gen->add_option("--config", config, "JSON config with an \"llm\" section")->required();
  gen->add_option("--topic", topic, "What the dialog should cover")->required();
  gen->add_option("--turns", turns, "Number of messages")->check(CLI::Range(1, 64));
  gen->add_option("--parent", parent, "Cell to attach the drafts under (default: root)");
  gen->add_option("--out", out, "Write the result here instead of over the page");
  gen->add_flag("--confirm", confirm, "Write the drafts; without it they are only printed");

  auto* serve = app.add_subcommand("serve", "Serve the reader API for a page");
  serve->add_option("page,--page", page, "Page file")->required();
  serve->add_option("--config", config, "JSON service config");
  serve->add_option("--state-dir", state_dir, "Directory for saved reader progress");
  serve->add_flag("--multi-user", multi_user, "Keep progress per session instead of per page");
  serve->add_option("--port", serve_options.port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));
  serve->add_option("--host", serve_options.host, "Address to bind");
  serve->add_option("--ui-dir", ui_dir, "Directory of reader UI assets served at /");

  auto* exp = app.add_subcommand("export", "Render the main thread as a static web page");
  exp->add_option("page,--page", page, "Page file")->required();
  exp->add_option("--out", out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(page, as_json);
    if (create->parsed()) return cmd_new(page, title, force);
    if (gen->parsed()) return cmd_gen(page, config, topic, turns, parent, out, confirm);
    if (serve->parsed()) {
      if (!ui_dir.empty()) serve_options.ui_dir = ui_dir;
      return cmd_serve(page, config, state_dir, multi_user, serve_options);
    }
    if (exp->parsed()) return cmd_export(page, out);
  } catch (const cli::ApiError& e) {
    return report_failure(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

#pragma once

#include <optional>
#include <string>

#include "dpage/dpage.h"

namespace cli {

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::optional<std::string> ui_dir;
};

// Serves the reader API for `service` (page `page_id`) until SIGINT/SIGTERM.
int serve(dpage_service* service, const std::string& page_id, const ServeOptions& options);

}  // namespace cli

#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "dpage/dpage.h"

namespace cli {

// Failure from the library, carrying its status and JSON detail.
class ApiError : public std::runtime_error {
 public:
  ApiError(dpage_status status, std::string message, std::string detail)
      : std::runtime_error(std::move(message)), status_(status), detail_(std::move(detail)) {}
  dpage_status status() const { return status_; }
  const std::string& detail() const { return detail_; }

 private:
  dpage_status status_;
  std::string detail_;
};

inline void check(dpage_status status) {
  if (status != DPAGE_OK) throw ApiError(status, dpage_last_error_message(), dpage_last_error_detail());
}

// Takes ownership of a library-allocated string.
inline std::string take(char* s, size_t len) {
  std::string out(s, len);
  dpage_free(s);
  return out;
}

inline std::string take(char* s) {
  std::string out(s ? s : "");
  dpage_free(s);
  return out;
}

struct PageDeleter {
  void operator()(dpage_page* p) const { dpage_page_free(p); }
};
struct ServiceDeleter {
  void operator()(dpage_service* s) const { dpage_service_free(s); }
};
using PagePtr = std::unique_ptr<dpage_page, PageDeleter>;
using ServicePtr = std::unique_ptr<dpage_service, ServiceDeleter>;

inline PagePtr load_page_file(const std::string& path) {
  dpage_page* p = nullptr;
  check(dpage_page_load_file(path.c_str(), &p));
  return PagePtr(p);
}

}  // namespace cli

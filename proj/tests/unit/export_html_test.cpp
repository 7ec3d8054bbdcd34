#include <regex>

#include "core/export_html.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace dpage;

namespace {

std::vector<std::string> section_ids(const std::string& html) {
  static const std::regex re(R"re(<section class="cell" data-cell-id="([^"]+)")re");
  std::vector<std::string> out;
  for (auto it = std::sregex_iterator(html.begin(), html.end(), re); it != std::sregex_iterator(); ++it) {
    out.push_back((*it)[1]);
  }
  return out;
}

}  // namespace

TEST_CASE("static export holds exactly the main thread") {
  const Page page = testing::load_fixture("fig3.dpage");
  const std::string html = render_static_html(page);
  CHECK(section_ids(html) == target_path(page));
  CHECK(html.find("In JavaScript") == std::string::npos);  // 4b is off the main thread
  CHECK(html.find("<details class=\"answer\"><summary>Show answer") != std::string::npos);
  CHECK(html.find("Not quite. That adds to 10") != std::string::npos);
  CHECK(html.find("<details class=\"answer\" open") == std::string::npos);
  CHECK(html.find("class=\"code\"") != std::string::npos);
}

TEST_CASE("single-cell page") {
  const Page page = new_page("Solo");
  CHECK(section_ids(render_static_html(page)).size() == 1);
}

TEST_CASE("media is copied byte-exact") {
  testing::TempDir dir;
  const Page page = testing::load_fixture("media.dpage");
  export_static(page, dir.path());
  const std::string html = testing::read_file(dir.path() / "index.html");
  CHECK(html.find("src=\"media/logo.png\"") != std::string::npos);
  for (const auto& [name, bytes] : page.media) {
    const std::string copy = testing::read_file(dir.path() / "media" / name);
    CHECK(std::vector<std::uint8_t>(copy.begin(), copy.end()) == bytes);
  }
}

TEST_CASE("markdown subset and escaping") {
  CHECK(markdown_to_html("# Title") == "<h1>Title</h1>\n");
  CHECK(markdown_to_html("a <b> & `x<y`") == "<p>a &lt;b&gt; &amp; <code>x&lt;y</code></p>\n");
  CHECK(markdown_to_html("- one\n- two") == "<ul>\n<li>one</li>\n<li>two</li>\n</ul>\n");
  CHECK(markdown_to_html("```py\nif a<b:\n```") == "<pre><code class=\"language-py\">if a&lt;b:\n</code></pre>\n");
  CHECK(markdown_to_html("**bold** *it*") == "<p><strong>bold</strong> <em>it</em></p>\n");
}

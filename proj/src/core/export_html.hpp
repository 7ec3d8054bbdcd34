#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

#include "core/page_model.hpp"

namespace dpage {

std::string html_escape(std::string_view text);

// Small Markdown subset: ATX headings, fenced code, lists, paragraphs, and
// inline code/emphasis/links/images. `resolve_src` rewrites image targets.
std::string markdown_to_html(std::string_view markdown,
                             const std::function<std::string(std::string_view)>& resolve_src = {});

// Linear document of the target path. Quiz answers sit in collapsed <details>.
std::string render_static_html(const Page& page);

// Writes <out_dir>/index.html and <out_dir>/media/<name> for every asset.
void export_static(const Page& page, const std::filesystem::path& out_dir);

}  // namespace dpage

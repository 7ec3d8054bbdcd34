#include "core/export_html.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "core/code_state.hpp"
#include "core/directive_parser.hpp"
#include "core/errors.hpp"

namespace dpage {

namespace fs = std::filesystem;

std::string html_escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

namespace {

using Resolver = std::function<std::string(std::string_view)>;

std::string render_inline(std::string_view s, const Resolver& resolve) {
  std::string out;
  std::size_t i = 0;
  auto emphasis = [&](std::string_view marker, const char* tag) {
    if (s.substr(i, marker.size()) != marker) return false;
    const auto close = s.find(marker, i + marker.size());
    if (close == std::string_view::npos || close == i + marker.size()) return false;
    out += std::string("<") + tag + ">";
    out += render_inline(s.substr(i + marker.size(), close - i - marker.size()), resolve);
    out += std::string("</") + tag + ">";
    i = close + marker.size();
    return true;
  };
  while (i < s.size()) {
    const char c = s[i];
    if (c == '`') {
      const auto close = s.find('`', i + 1);
      if (close != std::string_view::npos) {
        out += "<code>" + html_escape(s.substr(i + 1, close - i - 1)) + "</code>";
        i = close + 1;
        continue;
      }
    }
    if (c == '*' && (emphasis("**", "strong") || emphasis("*", "em"))) continue;
    const bool image = c == '!' && i + 1 < s.size() && s[i + 1] == '[';
    if (c == '[' || image) {
      const std::size_t text_begin = i + (image ? 2 : 1);
      const auto text_end = s.find("](", text_begin);
      const auto url_end = text_end == std::string_view::npos ? text_end : s.find(')', text_end + 2);
      if (url_end != std::string_view::npos) {
        const auto label = s.substr(text_begin, text_end - text_begin);
        const auto url = s.substr(text_end + 2, url_end - text_end - 2);
        if (image) {
          const std::string src = resolve ? resolve(url) : std::string(url);
          out += "<img src=\"" + html_escape(src) + "\" alt=\"" + html_escape(label) + "\">";
        } else {
          out += "<a href=\"" + html_escape(url) + "\">" + render_inline(label, resolve) + "</a>";
        }
        i = url_end + 1;
        continue;
      }
    }
    out += html_escape(std::string_view(&s[i], 1));
    ++i;
  }
  return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    pos = nl + 1;
  }
  return out;
}

bool blank(std::string_view s) { return s.find_first_not_of(" \t") == std::string_view::npos; }

}  // namespace

std::string markdown_to_html(std::string_view markdown, const Resolver& resolve_src) {
  std::ostringstream out;
  const auto lines = lines_of(markdown);
  std::string paragraph;
  std::string list_tag;
  auto flush_paragraph = [&] {
    if (!paragraph.empty()) out << "<p>" << render_inline(paragraph, resolve_src) << "</p>\n";
    paragraph.clear();
  };
  auto close_list = [&] {
    if (!list_tag.empty()) out << "</" << list_tag << ">\n";
    list_tag.clear();
  };
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string_view line = lines[i];
    if (line.starts_with("```") || line.starts_with("~~~")) {
      flush_paragraph();
      close_list();
      const std::string_view fence = line.substr(0, 3);
      const std::string lang(line.substr(3));
      out << "<pre><code" << (blank(lang) ? "" : " class=\"language-" + html_escape(lang) + "\"") << ">";
      for (++i; i < lines.size() && !lines[i].starts_with(fence); ++i) out << html_escape(lines[i]) << "\n";
      out << "</code></pre>\n";
      continue;
    }
    if (blank(line)) {
      flush_paragraph();
      close_list();
      continue;
    }
    std::size_t hashes = 0;
    while (hashes < line.size() && line[hashes] == '#') ++hashes;
    if (hashes >= 1 && hashes <= 6 && hashes < line.size() && line[hashes] == ' ') {
      flush_paragraph();
      close_list();
      out << "<h" << hashes << ">" << render_inline(line.substr(hashes + 1), resolve_src) << "</h" << hashes
          << ">\n";
      continue;
    }
    std::string_view item;
    std::string tag;
    if (line.starts_with("- ") || line.starts_with("* ")) {
      tag = "ul";
      item = line.substr(2);
    } else {
      std::size_t d = 0;
      while (d < line.size() && std::isdigit(static_cast<unsigned char>(line[d]))) ++d;
      if (d > 0 && line.substr(d).starts_with(". ")) {
        tag = "ol";
        item = line.substr(d + 2);
      }
    }
    if (!tag.empty()) {
      flush_paragraph();
      if (list_tag != tag) {
        close_list();
        list_tag = tag;
        out << "<" << tag << ">\n";
      }
      out << "<li>" << render_inline(item, resolve_src) << "</li>\n";
      continue;
    }
    close_list();
    if (!paragraph.empty()) paragraph.push_back('\n');
    paragraph += line;
  }
  flush_paragraph();
  close_list();
  return out.str();
}

namespace {

std::string render_directive(const Directive& d, const Resolver& resolve) {
  std::ostringstream out;
  out << "<div class=\"directive " << html_escape(d.type) << "\" data-directive-id=\"" << html_escape(d.id)
      << "\">\n";
  if (const auto* mc = std::get_if<MultipleChoiceSpec>(&d.spec)) {
    out << markdown_to_html(mc->prompt, resolve) << "<ol class=\"options\">\n";
    for (const auto& o : mc->options) out << "<li>" << render_inline(o.label, resolve) << "</li>\n";
    out << "</ol>\n<details class=\"answer\"><summary>Show answer</summary>\n";
    for (const auto& o : mc->options) {
      if (o.correct) {
        out << "<p class=\"correct\">Correct: " << render_inline(o.label, resolve) << "</p>\n";
      } else if (o.feedback) {
        out << "<p class=\"feedback\">" << render_inline(o.label, resolve) << ": " << html_escape(*o.feedback)
            << "</p>\n";
      }
    }
    out << "</details>\n";
  } else if (const auto* cq = std::get_if<CodeQuestionSpec>(&d.spec)) {
    out << markdown_to_html(cq->prompt, resolve);
    out << "<pre><code class=\"language-" << html_escape(cq->language) << "\">" << html_escape(cq->starter)
        << "</code></pre>\n";
    if (cq->solution || cq->tests) {
      out << "<details class=\"answer\"><summary>Show answer</summary>\n";
      if (cq->solution) out << "<pre><code>" << html_escape(*cq->solution) << "</code></pre>\n";
      if (cq->tests) out << "<p>Tests:</p>\n<pre><code>" << html_escape(*cq->tests) << "</code></pre>\n";
      out << "</details>\n";
    }
  } else {
    out << "<pre>" << html_escape(d.body) << "</pre>\n";
  }
  out << "</div>\n";
  return out.str();
}

std::string render_code(const Cell& cell, const CodeSnapshot& snap) {
  std::ostringstream out;
  out << "<div class=\"code\">\n";
  for (const auto& [file, text] : snap.files) {
    out << "<figure class=\"file\"><figcaption>" << html_escape(file) << "</figcaption>\n<pre>";
    const FileDiff* diff = nullptr;
    for (const auto& d : cell.code_diffs) {
      if (d.file == file) diff = &d;
    }
    if (diff) {
      for (const auto& l : diff->lines) {
        out << "<span class=\"line " << to_string(l.op) << "\">" << html_escape(l.text) << "</span>\n";
      }
    } else {
      for (const auto& l : split_lines(text).lines) out << "<span class=\"line\">" << html_escape(l) << "</span>\n";
    }
    out << "</pre></figure>\n";
  }
  for (const auto& d : cell.code_diffs) {
    if (d.deleted) out << "<p class=\"deleted-file\">Removed " << html_escape(d.file) << "</p>\n";
  }
  out << "</div>\n";
  return out.str();
}

bool safe_media_name(std::string_view name) {
  return !name.empty() && name != "." && name != ".." && name.find_first_of("/\\") == std::string_view::npos;
}

}  // namespace

std::string render_static_html(const Page& page) {
  const Resolver resolve = [&](std::string_view src) {
    if (page.media.contains(std::string(src))) return "media/" + std::string(src);
    return std::string(src);
  };
  const auto snaps = all_snapshots(page);
  std::ostringstream out;
  out << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>" << html_escape(page.title)
      << "</title>\n<style>\n"
      << "body{font-family:sans-serif;max-width:48rem;margin:2rem auto;line-height:1.5}\n"
      << ".speaker{font-weight:bold}.line.add{background:#e6ffec}.line.del{background:#ffebe9;"
         "text-decoration:line-through}\n"
      << ".line{display:block}.directive{border:1px solid #ccc;padding:.5rem 1rem;margin:1rem 0}\n"
      << "</style>\n</head>\n<body>\n<h1>" << html_escape(page.title) << "</h1>\n";
  for (const auto& id : target_path(page)) {
    const Cell& cell = page.cell(id);
    const Persona* persona = page.find_persona(cell.persona_id);
    out << "<section class=\"cell\" data-cell-id=\"" << html_escape(id) << "\">\n<div class=\"speaker\">"
        << html_escape(persona ? persona->name : cell.persona_id) << "</div>\n";
    const ScanResult scan = scan_message(id, cell.source);
    for (const auto& seg : scan.segments) {
      if (seg.kind == SegmentKind::markdown) {
        out << markdown_to_html(seg.text, resolve);
      } else {
        out << render_directive(scan.directives.at(*seg.directive_index), resolve);
      }
    }
    if (!cell.code_diffs.empty()) out << render_code(cell, snaps.at(id));
    out << "</section>\n";
  }
  out << "</body>\n</html>\n";
  return out.str();
}

void export_static(const Page& page, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create " + out_dir.string() + ": " + ec.message());
  auto write = [](const fs::path& path, std::string_view bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error(ErrorCode::io, "cannot write " + path.string());
  };
  write(out_dir / "index.html", render_static_html(page));
  if (page.media.empty()) return;
  fs::create_directories(out_dir / "media", ec);
  if (ec) throw Error(ErrorCode::io, "cannot create media directory: " + ec.message());
  for (const auto& [name, bytes] : page.media) {
    if (!safe_media_name(name)) throw Error(ErrorCode::invalid_argument, "unsafe media filename '" + name + "'");
    write(out_dir / "media" / name,
          std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  }
}

}  // namespace dpage

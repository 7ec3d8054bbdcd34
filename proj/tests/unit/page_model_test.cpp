#include "core/code_state.hpp"
#include "core/errors.hpp"
#include "core/page_model.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace dpage;

TEST_CASE("fixtures round-trip and serialize deterministically") {
  for (const std::string name : {"fig3.dpage", "media.dpage"}) {
    CAPTURE(name);
    const Page page = testing::load_fixture(name);
    const std::string once = save_page(page);
    const Page again = load_page(once);
    CHECK(again == page);
    CHECK(save_page(again) == once);
    CHECK(save_page(page) == once);
    CHECK(content_hash(page) == content_hash(again));
  }
}

TEST_CASE("media survives byte-exact") {
  const Page page = testing::load_fixture("media.dpage");
  const auto& logo = page.media.at("logo.png");
  REQUIRE(logo.size() == 16);
  CHECK(logo[0] == 0x89);
  CHECK(logo[1] == 'P');
  const auto& all = page.media.at("bytes.bin");
  REQUIRE(all.size() == 256);
  for (int i = 0; i < 256; ++i) CHECK(all[static_cast<std::size_t>(i)] == i);
  CHECK(load_page(save_page(page)).media == page.media);
}

TEST_CASE("unknown fields are preserved") {
  auto doc = nlohmann::json::parse(testing::read_file(testing::fixture_path("fig3.dpage")));
  doc["authorNotes"] = {{"draft", true}};
  doc["cells"]["2a"]["color"] = "red";
  const Page page = load_page(doc.dump());
  const auto back = nlohmann::json::parse(save_page(page));
  CHECK(back["authorNotes"]["draft"] == true);
  CHECK(back["cells"]["2a"]["color"] == "red");
}

TEST_CASE("dangling child is named in the report") {
  const std::string bytes = testing::read_file(testing::fixture_path("invalid_dangling.dpage"));
  try {
    load_page(bytes);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.report().has("dangling-child"));
    CHECK(e.report().to_text().find("2a->9z") != std::string::npos);
  }
  CHECK(validate(decode_page(bytes)).has("dangling-child"));
}

TEST_CASE("structural violations") {
  Page page = testing::load_fixture("fig3.dpage");
  SUBCASE("second parent") {
    page.cells.at("3b").child_ids.push_back("4a");
    CHECK(validate(page).has("multiple-parents"));
  }
  SUBCASE("unreachable target") {
    page.cells.at("4c").child_ids.clear();
    const auto r = validate(page);
    CHECK((r.has("orphan") || r.has("unreachable-target")));
  }
  SUBCASE("missing root") {
    page.root_id = "zz";
    CHECK(validate(page).has("missing-root"));
  }
  SUBCASE("duplicate personas") {
    page.personas.push_back(page.personas.front());
    CHECK(validate(page).has("duplicate-persona"));
  }
  SUBCASE("dangling persona") {
    page.cells.at("2a").persona_id = "nobody";
    CHECK(validate(page).has("dangling-persona"));
  }
  SUBCASE("diff against a missing line") {
    page.cells.at("3a").code_diffs[0].lines[0].text = "total = 1";
    CHECK(validate(page).has("diff-context"));
  }
  SUBCASE("unsupported version") {
    page.version = 2;
    CHECK(validate(page).has("unsupported-version"));
  }
  SUBCASE("verified flag without ai content is fine, unverified human content is not") {
    page.cells.at("2a").verified = false;
    CHECK(validate(page).has("verified-flag"));
  }
}

TEST_CASE("warnings do not block loading") {
  Page page = testing::load_fixture("fig3.dpage");
  page.cells.at("1a").pointers.push_back({"main.py", 3, 40});
  page.cells.at("4c").ai_generated = true;
  page.cells.at("4c").verified = false;
  page.cells.at("2a").source += "\n:::multiple-choice\nunclosed\n";
  const auto r = validate(page);
  CHECK(r.ok());
  CHECK(r.has("pointer-range"));
  CHECK(r.has("unverified-target-path"));
  bool directive_warning = false;
  for (const auto& w : r.warnings) directive_warning |= w.code.starts_with("directive-");
  CHECK(directive_warning);
  CHECK_NOTHROW(load_page(save_page(page)));
}

TEST_CASE("tree queries on the fixture") {
  const Page page = testing::load_fixture("fig3.dpage");
  CHECK(target_path(page) == std::vector<std::string>{"1a", "2a", "3b", "4c", "5d"});
  CHECK(ancestors(page, "5b") == std::vector<std::string>{"1a", "2a", "3a", "4b", "5b"});
  CHECK(in_subtree(page, "3a", "5c"));
  CHECK_FALSE(in_subtree(page, "3b", "5c"));
  CHECK(parent_map(page).at("4c") == "3b");
}

TEST_CASE("author mutations keep snapshots") {
  const Page page = testing::load_fixture("fig3.dpage");
  const auto before = all_snapshots(page);

  SUBCASE("add") {
    auto [next, id] = add_cell(page, "4b", {"ed", "More.", false});
    CHECK(next.cells.at("4b").child_ids.back() == id);
    CHECK(snapshot_at(next, id) == before.at("4b"));
    CHECK(validate(next).ok());
  }
  SUBCASE("move keeps the moved subtree's code") {
    const Page next = move_cell(page, "4b", "3b", 0);
    CHECK(next.cells.at("3b").child_ids.front() == "4b");
    for (const auto& id : {"4b", "5b", "5c", "4c", "5d"}) CHECK(snapshot_at(next, id) == before.at(id));
    CHECK_THROWS_AS(move_cell(page, "3a", "5b", 0), Error);
    CHECK_THROWS_AS(move_cell(page, "1a", "2a", 0), Error);
  }
  SUBCASE("delete splices children in place") {
    const Page next = delete_cell(page, "3a");
    CHECK(next.cells.at("2a").child_ids == std::vector<std::string>{"4a", "4b", "3b"});
    for (const auto& id : {"4a", "4b", "5a", "5b", "5c"}) CHECK(snapshot_at(next, id) == before.at(id));
    CHECK_THROWS_AS(delete_cell(page, "1a"), Error);
    CHECK_THROWS_AS(delete_cell(page, "5d"), Error);
  }
  SUBCASE("edit source leaves code alone") {
    const Page next = edit_cell_source(page, "3a", "changed");
    CHECK(next.cells.at("3a").source == "changed");
    CHECK(all_snapshots(next) == before);
    Page drafted = page;
    drafted.cells.at("3a").ai_generated = true;
    CHECK(edit_cell_source(drafted, "3a", "again").cells.at("3a").verified);
    CHECK_FALSE(edit_cell_source(drafted, "3a", "again", EditOrigin::llm).cells.at("3a").verified);
    CHECK(edit_cell_source(page, "3a", "again", EditOrigin::llm).cells.at("3a").verified);
  }
  SUBCASE("set_code changes one cell only") {
    CodeSnapshot desired = before.at("3a");
    desired.files["extra.py"] = "x = 1\n";
    const CodeEdit edit = set_code(page, "3a", desired);
    CHECK(snapshot_at(edit.page, "3a") == desired);
    for (const auto& [id, snap] : before) {
      if (id != "3a") CHECK(snapshot_at(edit.page, id) == snap);
    }
  }
  SUBCASE("set_code that shortens a file flags pointers") {
    const CodeEdit edit = set_code(page, "1a", CodeSnapshot{{{"main.py", "total = 0\n"}}});
    REQUIRE(edit.pointer_warnings.size() == 1);
    CHECK(edit.pointer_warnings[0].code == "pointer-range");
  }
}

TEST_CASE("new_page validates") {
  const Page page = new_page("Hello");
  CHECK(validate(page).empty());
  CHECK(page.root_id == page.target_id);
  CHECK(next_cell_id(page) != page.root_id);
  CHECK(load_page(save_page(page)) == page);
}

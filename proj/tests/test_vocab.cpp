#include <catch2/catch_amalgamated.hpp>

#include "advtext/vocab.hpp"
#include "test_util.hpp"

using namespace advtext;

TEST_CASE("tokenize_text lowercases and isolates punctuation", "[vocab]") {
  CHECK(tokenize_text("Google, Inc.") == std::vector<std::string>({"google", ",", "inc", "."}));
  CHECK(tokenize_text("  spaced   out  ") == std::vector<std::string>({"spaced", "out"}));
  CHECK(tokenize_text("") == std::vector<std::string>{});
  CHECK(tokenize_text("a-b") == std::vector<std::string>({"a", "-", "b"}));
}

TEST_CASE("build ranks tokens by frequency then lexicographically", "[vocab]") {
  Vocabulary v = Vocabulary::build({"a b", "b c"}, 10);
  CHECK(v.size() == 7);
  CHECK(v.id("b") == 4);
  CHECK(v.id("a") == 5);
  CHECK(v.id("c") == 6);
  CHECK(v.token(Vocabulary::kPad) == "<pad>");
  CHECK(v.token(Vocabulary::kStart) == "<start>");
  CHECK(v.token(Vocabulary::kEos) == "<eos>");
  CHECK(v.token(Vocabulary::kUnk) == "<unk>");
}

TEST_CASE("build enforces the size floor and truncates to max_size", "[vocab]") {
  CHECK_THROWS_AS(Vocabulary::build({"a b c"}, 4), ConfigError);
  Vocabulary v = Vocabulary::build({"x x x y y z"}, 6);
  CHECK(v.size() == 6);
  CHECK(v.contains("x"));
  CHECK(v.contains("y"));
  CHECK_FALSE(v.contains("z"));
  CHECK_THROWS_AS(Vocabulary::build({"   "}, 10), ParseError);
}

TEST_CASE("encode appends eos and maps unknowns", "[vocab]") {
  Vocabulary v = Vocabulary::build({"a b", "b c"}, 10);
  CHECK(v.encode("b a", 16) == std::vector<int>({4, 5, Vocabulary::kEos}));
  CHECK(v.encode("", 16) == std::vector<int>({Vocabulary::kEos}));
  CHECK(v.encode("zzz", 16) == std::vector<int>({Vocabulary::kUnk, Vocabulary::kEos}));
}

TEST_CASE("encode truncates to max_seq_len including eos", "[vocab]") {
  Vocabulary v = Vocabulary::build({"a b", "b c"}, 10);
  const std::vector<int> ids = v.encode("a b c a b c a b c", 5);
  CHECK(ids.size() == 5);
  CHECK(ids.back() == Vocabulary::kEos);
}

TEST_CASE("decode joins tokens and drops structural specials", "[vocab]") {
  Vocabulary v = Vocabulary::build({"a b", "b c"}, 10);
  CHECK(v.decode({Vocabulary::kStart, 4, 5, Vocabulary::kEos, Vocabulary::kPad}) == "b a");
  CHECK(v.decode({Vocabulary::kUnk}) == "<unk>");
  CHECK(v.decode({}) == "");
  CHECK_THROWS_AS(v.decode({99}), ConfigError);
}

TEST_CASE("id lookups fall back to unk and token validates range", "[vocab]") {
  Vocabulary v = Vocabulary::build({"a b", "b c"}, 10);
  CHECK(v.id("missing") == Vocabulary::kUnk);
  CHECK_THROWS_AS(v.token(-1), ConfigError);
  CHECK_THROWS_AS(v.token(v.size()), ConfigError);
}

TEST_CASE("save and load round-trip the id assignment", "[vocab]") {
  testutil::TempDir dir;
  Vocabulary v = Vocabulary::build({"delta echo", "echo foxtrot"}, 20);
  const std::string path = dir.file("vocab.txt");
  v.save(path);
  Vocabulary loaded = Vocabulary::load(path);
  CHECK(loaded.size() == v.size());
  for (int i = 0; i < v.size(); ++i) CHECK(loaded.token(i) == v.token(i));
}

TEST_CASE("load rejects files without the special-token header", "[vocab]") {
  testutil::TempDir dir;
  const std::string path = dir.file("bad.txt");
  testutil::write_file(path, "<pad>\n<start>\n<eos>\n");
  CHECK_THROWS_AS(Vocabulary::load(path), ParseError);
  testutil::write_file(path, "<pad>\n<start>\n<unk>\n<eos>\nword\n");
  CHECK_THROWS_AS(Vocabulary::load(path), ParseError);
  CHECK_THROWS_AS(Vocabulary::load(dir.file("nonexistent.txt")), ConfigError);
}

TEST_CASE("load tolerates CRLF line endings", "[vocab]") {
  testutil::TempDir dir;
  const std::string path = dir.file("crlf.txt");
  testutil::write_file(path, "<pad>\r\n<start>\r\n<eos>\r\n<unk>\r\nword\r\n");
  Vocabulary v = Vocabulary::load(path);
  CHECK(v.size() == 5);
  CHECK(v.id("word") == 4);
}

#include <doctest.h>

#include "support.hpp"
#include "thinkmt/core/error.hpp"
#include "thinkmt/core/hash.hpp"
#include "thinkmt/core/jsonl.hpp"
#include "thinkmt/core/prompts.hpp"
#include "thinkmt/core/resources.hpp"
#include "thinkmt/core/text.hpp"

using namespace thinkmt;
using testsupport::record;

TEST_SUITE("core") {

TEST_CASE("io prompt reproduces the completion block for the mice example") {
  const auto r = record("m", testsupport::kMiceSource, "x", {"English", "Hausa", "eng_Latn", "hau_Latn"});
  CHECK(build_io_prompt(r) == testsupport::golden("io_prompt_mice.txt"));
  CHECK(text::ends_with(build_io_prompt(r), "Hausa: "));
}

TEST_CASE("instruct prompt reproduces the chat block for the mice example") {
  const auto r = record("m", testsupport::kMiceSource, "x", testsupport::en_xh());
  CHECK(build_instruct_prompt(r) == testsupport::golden("instruct_prompt_mice.txt"));
}

TEST_CASE("io demo appends the target to the open block") {
  const auto r = record("d", "Hello.", "Bonjour.");
  CHECK(build_io_demo(r) == "Translate this from English to French:\nEnglish: Hello.\nFrench: Bonjour.");
}

TEST_CASE("multi-line sources are inserted verbatim") {
  const auto r = record("m", "line one\nline two", "x");
  CHECK(build_io_prompt(r) == "Translate this from English to French:\nEnglish: line one\nline two\nFrench: ");
}

TEST_CASE("cot target layout") {
  CHECK(format_cot_target("step one\nstep two", "Molo") ==
        "<think>\nstep one\nstep two\n</think>\n\nFinal Translation\nMolo");
}

TEST_CASE("cot target round-trips") {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"a", "b"},
      {"multi\nline\n\ntrace", "Ndiyabulela kakhulu."},
      {"trace with Final Translation inside", "y"},
      {"  padded  ", "  target with spaces  "},
      {"\nleading newline", "t"},
  };
  for (const auto& [trace, target] : cases) {
    const auto parsed = parse_cot_target(format_cot_target(trace, target));
    REQUIRE(parsed.has_value());
    CHECK(parsed->trace == trace);
    CHECK(parsed->target == std::string(text::trim(target)));
  }
}

TEST_CASE("cot target rejects degenerate parts") {
  CHECK_THROWS_AS(format_cot_target("", "y"), InvalidArgument);
  CHECK_THROWS_AS(format_cot_target("t", "   "), InvalidArgument);
  CHECK_THROWS_AS(format_cot_target("a </think> b", "y"), InvalidArgument);
  CHECK_THROWS_AS(format_cot_target("t", "y <think>"), InvalidArgument);
}

TEST_CASE("cot parser needs both markers") {
  CHECK_FALSE(parse_cot_target("just a translation").has_value());
  CHECK_FALSE(parse_cot_target("<think>\nabc").has_value());
  CHECK_FALSE(parse_cot_target("<think>\nabc\n</think>\nno marker here").has_value());
  CHECK(parse_cot_target("<think>\nabc\n</think>\n\nFinal Translation\nxyz")->target == "xyz");
}

TEST_CASE("training example validation follows the mode") {
  TrainingExample io{"1", "p", "plain", TrainingMode::io, {}};
  CHECK_NOTHROW(io.validate());
  io.completion = "<think>\nx\n</think>";
  CHECK_THROWS_AS(io.validate(), InvalidArgument);

  TrainingExample cot{"2", "p", format_cot_target("t", "y"), TrainingMode::cot, {}};
  CHECK_NOTHROW(cot.validate());
  cot.completion = "y";
  CHECK_THROWS_AS(cot.validate(), InvalidArgument);
}

TEST_CASE("datasets reject duplicate ids") {
  ParallelDataset d;
  d.records = {record("a", "x", "y"), record("a", "z", "w")};
  CHECK_THROWS_AS(d.validate(), InvalidArgument);
}

TEST_CASE("jsonl round trip with manifest") {
  testsupport::TempDir dir;
  TrainingDataset d;
  d.records.push_back({"r1", "prompt é", format_cot_target("t", "y"), TrainingMode::cot, {{"k", "v"}}});
  d.records.push_back({"r2", "prompt 2", "y2", TrainingMode::io, {}});
  d.manifest["condition"] = "test";
  const auto path = dir / "train.jsonl";
  write_dataset(path, d);
  const auto back = read_training_dataset(path);
  CHECK(back.records == d.records);
  CHECK(back.manifest["condition"] == "test");
  CHECK(back.manifest["records"] == 2);
  CHECK(back.manifest["content_sha256"] == sha256_hex(read_file(path)));
}

TEST_CASE("malformed jsonl reports the line") {
  testsupport::TempDir dir;
  const auto path = dir / "bad.jsonl";
  write_file_atomic(path, "{\"a\":1}\n\n{oops}\n");
  try {
    read_jsonl(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("sha256 of known input") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("unicode whitespace helpers") {
  CHECK(text::trim("  x 　") == "x");
  CHECK(text::split_whitespace("a b\tc  d").size() == 4);
  CHECK(text::strip_wrapping_quotes("“Bonjour”") == "Bonjour");
  CHECK(text::strip_wrapping_quotes("\"a\" and \"b") == "\"a\" and \"b");
  CHECK(text::length("né") == 2);
}

TEST_CASE("template rendering") {
  CHECK(resources::render("{a} and {b}", {{"a", "1"}, {"b", "{a}"}}) == "1 and {a}");
  CHECK(resources::render("keep {} as is", {}) == "keep {} as is");
  CHECK_THROWS_AS(resources::render("{missing}", {}), InvalidArgument);
  CHECK_THROWS_AS(resources::get("nope.txt"), InvalidArgument);
}

}  // TEST_SUITE

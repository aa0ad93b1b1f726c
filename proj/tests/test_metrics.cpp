#include <doctest.h>

#include <chrono>
#include <numeric>
#include <random>

#include "support.hpp"
#include "thinkmt/core/error.hpp"
#include "thinkmt/core/prompts.hpp"
#include "thinkmt/metrics/bleu.hpp"
#include "thinkmt/metrics/bootstrap.hpp"
#include "thinkmt/metrics/chrf.hpp"
#include "thinkmt/metrics/rewards.hpp"
#include "thinkmt/metrics/tokenize.hpp"

using namespace thinkmt;
using namespace thinkmt::metrics;

namespace {

struct Corpus {
  std::vector<std::string> hyps;
  std::vector<std::string> refs;
  Json expected;
};

Corpus load(const std::string& name) {
  const auto j = testsupport::fixture(name);
  return {j.at("hypotheses").get<std::vector<std::string>>(), j.at("references").get<std::vector<std::string>>(), j};
}

BleuConfig bleu_cfg(TokenizerKind tok, Smoothing smooth = Smoothing::exp, bool eff = false) {
  BleuConfig c;
  c.tokenizer = tok;
  c.smoothing = smooth;
  c.effective_order = eff;
  return c;
}

void check_corpus_parity(const Corpus& c) {
  const auto& e = c.expected.at("corpus");
  CHECK(std::abs(corpus_bleu(c.hyps, c.refs) - e.at("bleu_13a").get<double>()) < 1e-4);
  CHECK(std::abs(corpus_bleu(c.hyps, c.refs, bleu_cfg(TokenizerKind::character)) - e.at("bleu_char").get<double>()) < 1e-4);
  CHECK(std::abs(corpus_bleu(c.hyps, c.refs, bleu_cfg(TokenizerKind::thirteen_a, Smoothing::none)) -
                 e.at("bleu_13a_none").get<double>()) < 1e-4);
  CHECK(std::abs(corpus_bleu(c.hyps, c.refs, bleu_cfg(TokenizerKind::thirteen_a, Smoothing::exp, true)) -
                 e.at("bleu_13a_eff").get<double>()) < 1e-4);
  CHECK(std::abs(corpus_chrfpp(c.hyps, c.refs) - e.at("chrfpp").get<double>()) < 1e-4);
  ChrfConfig plain;
  plain.word_order = 0;
  CHECK(std::abs(corpus_chrfpp(c.hyps, c.refs, plain) - e.at("chrf").get<double>()) < 1e-4);
}

void check_sentence_parity(const Corpus& c) {
  const auto& sent = c.expected.at("sentence");
  int bad_bleu = 0, bad_chrf = 0;
  for (std::size_t i = 0; i < c.hyps.size(); ++i) {
    if (std::abs(sentence_bleu(c.hyps[i], c.refs[i]) - sent[i].at("bleu").get<double>()) >= 1e-4) {
      ++bad_bleu;
      MESSAGE("BLEU mismatch at " << i << ": " << c.hyps[i] << " ||| " << c.refs[i]);
    }
    if (std::abs(sentence_chrfpp(c.hyps[i], c.refs[i]) - sent[i].at("chrfpp").get<double>()) >= 1e-4) {
      ++bad_chrf;
      MESSAGE("chrF++ mismatch at " << i << ": " << c.hyps[i] << " ||| " << c.refs[i]);
    }
  }
  CHECK(bad_bleu == 0);
  CHECK(bad_chrf == 0);
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("corpus scores match the reference on the 100-pair sample") { check_corpus_parity(load("en_fr_100.json")); }

TEST_CASE("corpus scores match the reference on 500 fuzzed pairs") { check_corpus_parity(load("fuzz_500.json")); }

TEST_CASE("sentence scores match the reference on the 100-pair sample") {
  check_sentence_parity(load("en_fr_100.json"));
}

TEST_CASE("sentence scores match the reference on 500 fuzzed pairs") { check_sentence_parity(load("fuzz_500.json")); }

TEST_CASE("signatures carry the reported settings") {
  CHECK(Bleu().signature() == "nrefs:1|case:mixed|eff:no|tok:13a|smooth:exp|version:thinkmt-1.0.0");
  CHECK(Chrf().signature() == "nrefs:1|case:mixed|eff:yes|nc:6|nw:2|space:no|version:thinkmt-1.0.0");
  const auto sig = testsupport::fixture("en_fr_100.json").at("signatures");
  const auto strip_version = [](std::string s) { return s.substr(0, s.rfind("|version:")); };
  CHECK(strip_version(Bleu().signature()) == strip_version(sig.at("bleu").get<std::string>()));
  CHECK(strip_version(Chrf().signature()) == strip_version(sig.at("chrfpp").get<std::string>()));
}

TEST_CASE("trivial BLEU and chrF++ cases") {
  const std::vector<std::string> refs = {"The cat sat on the mat.", "A second sentence here."};
  CHECK(corpus_bleu(refs, refs) == doctest::Approx(100.0));
  CHECK(corpus_chrfpp(refs, refs) == doctest::Approx(100.0));
  const std::vector<std::string> empty = {"", ""};
  CHECK(corpus_bleu(empty, refs) == 0.0);
  CHECK(corpus_chrfpp(std::vector<std::string>{"aaaa"}, std::vector<std::string>{"zzzz"}) == 0.0);
}

TEST_CASE("corpus metrics reject mismatched or empty input") {
  const std::vector<std::string> one = {"a"};
  const std::vector<std::string> two = {"a", "b"};
  const std::vector<std::string> none;
  CHECK_THROWS_AS(corpus_bleu(one, two), InvalidArgument);
  CHECK_THROWS_AS(corpus_chrfpp(none, none), InvalidArgument);
}

TEST_CASE("corpus scores ignore segment order") {
  auto c = load("en_fr_100.json");
  const double before = corpus_bleu(c.hyps, c.refs);
  const double chrf_before = corpus_chrfpp(c.hyps, c.refs);
  std::mt19937 rng(3);
  std::vector<std::size_t> perm(c.hyps.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::string> h, r;
  for (auto i : perm) {
    h.push_back(c.hyps[i]);
    r.push_back(c.refs[i]);
  }
  CHECK(corpus_bleu(h, r) == doctest::Approx(before).epsilon(1e-12));
  CHECK(corpus_chrfpp(h, r) == doctest::Approx(chrf_before).epsilon(1e-12));
}

TEST_CASE("13a tokenizer details") {
  Tokenizer13a tok;
  CHECK(tok.tokenize("Hello, world!") == "Hello , world !");
  CHECK(tok.tokenize("It costs $1,000.50.") == "It costs $ 1,000.50 .");
  CHECK(tok.tokenize("&quot;quoted&quot;") == "\" quoted \"");
  CHECK(tok.tokenize("e-mail") == "e-mail");
  CHECK(tok.tokenize("end-\nof-line") == "endof-line");
}

TEST_CASE("rewards") {
  CHECK(reward_translation("Le chat dort.", "Le chat dort.") == doctest::Approx(1.0));
  CHECK(reward_translation("", "Le chat dort.") == 0.0);
  CHECK(reward_translation("   ", "Le chat dort.") == 0.0);
  const auto c = load("en_fr_100.json");
  for (std::size_t i = 0; i < 10; ++i) {
    const auto& s = c.expected.at("sentence")[i];
    const double expected = (s.at("bleu").get<double>() / 100.0 + s.at("chrfpp").get<double>() / 100.0) / 2.0;
    CHECK(reward_translation(c.hyps[i], c.refs[i]) == doctest::Approx(expected).epsilon(1e-9));
  }
  CHECK(reward_format(format_cot_target("t", "y")) == 1.0);
  CHECK(reward_format("bare translation") == 0.0);
  CHECK(reward_format("<think>\nnever closed") == 0.0);
}

TEST_CASE("reward_format agrees with the parser on random strings") {
  std::mt19937 rng(11);
  const std::vector<std::string> parts = {"<think>", "</think>", "\n", "Final Translation", "abc", " ", "\n\n"};
  for (int i = 0; i < 2000; ++i) {
    std::string s;
    const int n = static_cast<int>(rng() % 8);
    for (int k = 0; k < n; ++k) s += parts[rng() % parts.size()];
    CHECK((reward_format(s) == 1.0) == parse_cot_target(s).has_value());
  }
}

}  // TEST_SUITE

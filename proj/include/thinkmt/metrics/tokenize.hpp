#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>

namespace thinkmt::metrics {

/// BLEU pre-tokenizer.
class Tokenizer {
public:
  virtual ~Tokenizer() = default;
  /// Returns space-separated tokens.
  virtual std::string tokenize(std::string_view line) const = 0;
  /// Short name printed in the metric signature (`tok:...`).
  virtual std::string signature() const = 0;
};

/// The mteval-v13a tokenizer as used by sacreBLEU's `13a` mode.
class Tokenizer13a final : public Tokenizer {
public:
  std::string tokenize(std::string_view line) const override;
  std::string signature() const override { return "13a"; }
};

/// One token per non-whitespace code point.
class TokenizerChar final : public Tokenizer {
public:
  std::string tokenize(std::string_view line) const override;
  std::string signature() const override { return "char"; }
};

/// Unigram segmentation from a SentencePiece vocabulary export
/// (`piece<TAB>log-prob` per line, as written by spm_export_vocab).
/// Whitespace is collapsed and marked with U+2581; no other normalization
/// is applied.
class TokenizerSpmVocab final : public Tokenizer {
public:
  TokenizerSpmVocab(const std::filesystem::path& vocab_file, std::string signature);

  std::string tokenize(std::string_view line) const override;
  std::string signature() const override { return signature_; }

private:
  std::unordered_map<std::string, double> pieces_;
  std::size_t max_piece_chars_ = 1;
  double unknown_score_ = -20.0;
  std::string signature_;
};

/// The 13a regular-expression stage applied to an already padded line.
std::string regexp_tokenize(std::string_view line);

}  // namespace thinkmt::metrics

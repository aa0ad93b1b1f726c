#include "thinkmt/metrics/tokenize.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <vector>

#include "thinkmt/core/error.hpp"
#include "thinkmt/core/text.hpp"

namespace thinkmt::metrics {

namespace {

bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }

// [\{-\~\[-\` -\&\(-\+\:-\@\/]
bool is_13a_symbol(char c) noexcept {
  const auto u = static_cast<unsigned char>(c);
  return (u >= '{' && u <= '~') || (u >= '[' && u <= '`') || (u >= ' ' && u <= '&') || (u >= '(' && u <= '+') ||
         (u >= ':' && u <= '@') || u == '/';
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (const auto tok : text::split_whitespace(s)) {
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

}  // namespace

// Each stage emulates Python's re.sub: left-to-right, non-overlapping matches.
// Matching on bytes is equivalent to matching on code points here because
// every literal in the patterns is ASCII and UTF-8 continuation bytes never
// equal an ASCII byte.
std::string regexp_tokenize(std::string_view line) {
  std::string s;
  s.reserve(line.size() * 2);
  for (const char c : line) {
    if (is_13a_symbol(c)) {
      s += ' ';
      s += c;
      s += ' ';
    } else {
      s += c;
    }
  }

  // ([^0-9])([\.,]) -> "\1 \2 "
  {
    std::string out;
    out.reserve(s.size() * 2);
    std::size_t i = 0;
    while (i < s.size()) {
      if (i + 1 < s.size() && !is_digit(s[i]) && (s[i + 1] == '.' || s[i + 1] == ',')) {
        out += s[i];
        out += ' ';
        out += s[i + 1];
        out += ' ';
        i += 2;
      } else {
        out += s[i++];
      }
    }
    s = std::move(out);
  }

  // ([\.,])([^0-9]) -> " \1 \2"
  {
    std::string out;
    out.reserve(s.size() * 2);
    std::size_t i = 0;
    while (i < s.size()) {
      if (i + 1 < s.size() && (s[i] == '.' || s[i] == ',') && !is_digit(s[i + 1])) {
        out += ' ';
        out += s[i];
        out += ' ';
        out += s[i + 1];
        i += 2;
      } else {
        out += s[i++];
      }
    }
    s = std::move(out);
  }

  // ([0-9])(-) -> "\1 \2 "
  {
    std::string out;
    out.reserve(s.size() * 2);
    std::size_t i = 0;
    while (i < s.size()) {
      if (i + 1 < s.size() && is_digit(s[i]) && s[i + 1] == '-') {
        out += s[i];
        out += ' ';
        out += '-';
        out += ' ';
        i += 2;
      } else {
        out += s[i++];
      }
    }
    s = std::move(out);
  }

  return collapse_whitespace(s);
}

std::string Tokenizer13a::tokenize(std::string_view input) const {
  std::string line(input);
  line = text::replace_all(std::move(line), "<skipped>", "");
  line = text::replace_all(std::move(line), "-\n", "");
  line = text::replace_all(std::move(line), "\n", " ");
  if (line.find('&') != std::string::npos) {
    line = text::replace_all(std::move(line), "&quot;", "\"");
    line = text::replace_all(std::move(line), "&amp;", "&");
    line = text::replace_all(std::move(line), "&lt;", "<");
    line = text::replace_all(std::move(line), "&gt;", ">");
  }
  return regexp_tokenize(" " + line + " ");
}

std::string TokenizerChar::tokenize(std::string_view line) const {
  std::string out;
  out.reserve(line.size() * 2);
  for (const auto& cp : text::decode_utf8(line)) {
    if (!out.empty()) out += ' ';
    out.append(line.substr(cp.offset, cp.length));
  }
  return out;
}

TokenizerSpmVocab::TokenizerSpmVocab(const std::filesystem::path& vocab_file, std::string signature)
    : signature_(std::move(signature)) {
  std::ifstream in(vocab_file);
  if (!in) throw InvalidArgument("cannot open tokenizer vocabulary " + vocab_file.string());
  std::string line;
  double min_score = 0.0;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) continue;
    const auto piece = line.substr(0, tab);
    double score = 0.0;
    try {
      score = std::stod(line.substr(tab + 1));
    } catch (const std::exception&) {
      continue;
    }
    // Control pieces such as <unk>, <s> never match text.
    if (piece.size() > 2 && piece.front() == '<' && piece.back() == '>') continue;
    pieces_[piece] = score;
    min_score = std::min(min_score, score);
    max_piece_chars_ = std::max(max_piece_chars_, text::length(piece));
  }
  if (pieces_.empty()) throw InvalidArgument("tokenizer vocabulary " + vocab_file.string() + " has no pieces");
  unknown_score_ = min_score - 10.0;
}

std::string TokenizerSpmVocab::tokenize(std::string_view line) const {
  static constexpr std::string_view kSpace = "\xE2\x96\x81";  // U+2581
  const auto words = text::split_whitespace(line);
  if (words.empty()) return {};
  std::string normalized;
  for (const auto w : words) {
    normalized += kSpace;
    normalized += w;
  }

  const auto cps = text::decode_utf8(normalized);
  const std::size_t n = cps.size();
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  std::vector<double> best(n + 1, kNegInf);
  std::vector<std::size_t> back(n + 1, 0);
  best[0] = 0.0;
  for (std::size_t end = 1; end <= n; ++end) {
    const std::size_t lo = end > max_piece_chars_ ? end - max_piece_chars_ : 0;
    for (std::size_t start = lo; start < end; ++start) {
      if (best[start] == kNegInf) continue;
      const auto byte_begin = cps[start].offset;
      const auto byte_end = cps[end - 1].offset + cps[end - 1].length;
      const auto piece = normalized.substr(byte_begin, byte_end - byte_begin);
      double score;
      if (const auto it = pieces_.find(piece); it != pieces_.end()) {
        score = it->second;
      } else if (end - start == 1) {
        score = unknown_score_;
      } else {
        continue;
      }
      if (best[start] + score > best[end]) {
        best[end] = best[start] + score;
        back[end] = start;
      }
    }
  }

  std::vector<std::string> tokens;
  for (std::size_t end = n; end > 0; end = back[end]) {
    const auto start = back[end];
    const auto byte_begin = cps[start].offset;
    const auto byte_end = cps[end - 1].offset + cps[end - 1].length;
    tokens.push_back(normalized.substr(byte_begin, byte_end - byte_begin));
  }
  std::reverse(tokens.begin(), tokens.end());
  return text::join(tokens, " ");
}

}  // namespace thinkmt::metrics

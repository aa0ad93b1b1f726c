#include "thinkmt/gateway/synthetic.hpp"

#include <algorithm>
#include <cctype>

#include "thinkmt/core/prompts.hpp"
#include "thinkmt/core/text.hpp"
#include "thinkmt/gateway/backends.hpp"

namespace thinkmt::gateway {

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t salt = 0) {
  std::uint64_t h = 1469598103934665603ULL ^ (salt * 0x9E3779B97F4A7C15ULL);
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

bool is_word_byte(unsigned char c) { return std::isalpha(c) || c >= 0x80; }

std::string pseudo_word(std::string_view word, std::uint64_t salt) {
  std::size_t b = 0, e = word.size();
  while (b < e && !is_word_byte(static_cast<unsigned char>(word[b]))) ++b;
  while (e > b && !is_word_byte(static_cast<unsigned char>(word[e - 1]))) --e;
  if (b == e) return std::string(word);
  const std::string_view core = word.substr(b, e - b);
  static constexpr std::string_view consonants = "bdfgklmnprstvz";
  static constexpr std::string_view vowels = "aeiou";
  std::uint64_t h = fnv1a(text::to_lower_ascii(core), salt);
  const std::size_t syllables = std::max<std::size_t>(1, (text::length(core) + 2) / 3);
  std::string out;
  for (std::size_t i = 0; i < syllables; ++i) {
    out += consonants[h % consonants.size()];
    h /= consonants.size();
    out += vowels[h % vowels.size()];
    h /= vowels.size();
    if (h == 0) h = fnv1a(out, salt);
  }
  if (std::isupper(static_cast<unsigned char>(core.front()))) out.front() = static_cast<char>(std::toupper(out.front()));
  return std::string(word.substr(0, b)) + out + std::string(word.substr(e));
}

/// Text following `marker` up to the next blank line.
std::optional<std::string> section(std::string_view text, std::string_view marker) {
  const auto pos = text.rfind(marker);
  if (pos == std::string_view::npos) return std::nullopt;
  auto rest = text.substr(pos + marker.size());
  const auto end = rest.find("\n\n");
  return std::string(text::trim(rest.substr(0, end)));
}

std::optional<std::string> between(std::string_view text, std::string_view open, std::string_view close) {
  const auto a = text.find(open);
  if (a == std::string_view::npos) return std::nullopt;
  const auto b = text.find(close, a + open.size());
  if (b == std::string_view::npos) return std::nullopt;
  return std::string(text::trim(text.substr(a + open.size(), b - a - open.size())));
}

/// Source sentence quoted in a step prompt, under any of the labels used.
std::string step_source(std::string_view prompt) {
  for (std::string_view label : {" sentence:\n", " source:\n", " text:\n"}) {
    if (auto s = section(prompt, label)) return *s;
  }
  if (auto s = between(prompt, "Input: ", "\n")) return *s;
  if (auto s = between(prompt, "Input sentence: ", "\n")) return *s;
  if (auto q = translation_query(prompt)) return *q;
  return std::string(text::trim(prompt));
}

std::vector<std::string> words_of(std::string_view s) {
  std::vector<std::string> out;
  for (auto w : text::split_whitespace(s)) out.emplace_back(w);
  return out;
}

std::string strip_punct(std::string_view w) {
  std::size_t b = 0, e = w.size();
  while (b < e && !is_word_byte(static_cast<unsigned char>(w[b]))) ++b;
  while (e > b && !is_word_byte(static_cast<unsigned char>(w[e - 1]))) --e;
  return std::string(w.substr(b, e - b));
}

std::vector<std::string> longest_words(std::string_view s, std::size_t n) {
  std::vector<std::string> words;
  for (const auto& w : words_of(s)) {
    auto core = strip_punct(w);
    if (!core.empty() && std::find(words.begin(), words.end(), core) == words.end()) words.push_back(core);
  }
  std::stable_sort(words.begin(), words.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
  if (words.size() > n) words.resize(n);
  return words;
}

std::string numbered(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += '\n';
    out += std::to_string(i + 1) + ". " + items[i];
  }
  return out;
}

std::string lower_first(std::string s) {
  if (!s.empty()) s.front() = static_cast<char>(std::tolower(static_cast<unsigned char>(s.front())));
  return s;
}

int count_in(std::string_view prompt) {
  for (std::string_view marker : {"at most ", "Write "}) {
    const auto p = prompt.find(marker);
    if (p == std::string_view::npos) continue;
    const auto rest = prompt.substr(p + marker.size());
    std::size_t n = 0;
    while (n < rest.size() && std::isdigit(static_cast<unsigned char>(rest[n]))) ++n;
    if (n) return std::stoi(std::string(rest.substr(0, n)));
  }
  return 5;
}

}  // namespace

std::optional<std::string> translation_query(std::string_view prompt) {
  // Instruct prompt.
  if (auto p = prompt.rfind("Please write a high-quality "); p != std::string_view::npos) {
    const auto body = prompt.substr(p);
    const auto start = body.find("\n\n");
    const auto end = body.find("\n\nPlease provide only the translation");
    if (start != std::string_view::npos && end != std::string_view::npos && end > start)
      return std::string(text::trim(body.substr(start + 2, end - start - 2)));
  }
  // `Src: text\nTgt:` at the end of the prompt.
  const auto trimmed = text::rtrim(prompt);
  const auto last_nl = trimmed.rfind('\n');
  if (last_nl == std::string_view::npos) return std::nullopt;
  const auto tail = trimmed.substr(last_nl + 1);
  if (tail.empty() || tail.back() != ':' || tail.find(' ') != std::string_view::npos) return std::nullopt;
  const auto head = trimmed.substr(0, last_nl);
  const auto prev_nl = head.rfind('\n');
  const auto line = prev_nl == std::string_view::npos ? head : head.substr(prev_nl + 1);
  const auto colon = line.find(": ");
  if (colon == std::string_view::npos) return std::nullopt;
  return std::string(text::trim(line.substr(colon + 2)));
}

std::string SyntheticTeacher::translate(std::string_view source, std::uint64_t variant) const {
  std::string out;
  std::size_t i = 0;
  for (auto w : text::split_whitespace(source)) {
    std::uint64_t salt = opts_.seed;
    if (variant != 0 && fnv1a(std::to_string(i), variant) % 4 == 0) salt += variant;
    if (!out.empty()) out += ' ';
    out += pseudo_word(w, salt);
    ++i;
  }
  return out;
}

std::uint64_t SyntheticTeacher::sampling_salt(const BackendRequest& request) const {
  if (request.params.temperature <= 0.0) return 0;
  const std::string key = std::to_string(request.params.temperature) + "|" +
                          std::to_string(request.params.seed.value_or(0)) + "|" + prompt_text(request.prompt);
  return 1 + fnv1a(key) % 7;
}

std::string SyntheticTeacher::answer(const BackendRequest& request) const {
  const std::string full = prompt_text(request.prompt);
  const std::string last = last_user_text(request.prompt);
  const std::uint64_t salt = sampling_salt(request);

  if (last.find("<think></think> tags") != std::string::npos && last.find("<Thinking Chain Guide>") == std::string::npos) {
    // Format reminder after a malformed elicitation reply.
    const auto src = between(full, "<Source Sentence>", "</Source Sentence>").value_or("");
    return "<think>\nI restate the source sentence: " + src + "\n</think>";
  }
  if (last.find("<Thinking Chain Guide>") != std::string::npos) {
    const auto src = between(last, "<Source Sentence>", "</Source Sentence>").value_or("");
    const auto tgt = between(last, "<Target Sentence>", "</Target Sentence>").value_or("");
    const auto key = longest_words(src, 1);
    return "<think>\n1. I read the source sentence and identify its core elements: " + src +
           "\n2. I note that \"" + (key.empty() ? src : key.front()) +
           "\" carries most of the meaning and needs care.\n3. I map each element onto the target language, keeping "
           "the order natural.\n4. I check that the result reads fluently: " +
           tgt + "\n</think>";
  }
  if (last.find("Divide the following") != std::string::npos) {
    const auto words = words_of(step_source(last));
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(count_in(last)), words.size());
    std::vector<std::string> chunks;
    for (std::size_t c = 0; c < n; ++c) {
      const std::size_t b = c * words.size() / n, e = (c + 1) * words.size() / n;
      chunks.push_back(text::join(std::vector<std::string>(words.begin() + static_cast<std::ptrdiff_t>(b),
                                                           words.begin() + static_cast<std::ptrdiff_t>(e)),
                                  " "));
    }
    return numbered(chunks);
  }
  if (last.find("paraphrases of the following") != std::string::npos) {
    const auto src = lower_first(step_source(last));
    static const char* lead[] = {"In other words, ", "Put differently, ", "That is to say, ", "To put it another way, ",
                                 "Simply put, ", "Said plainly, ", "Stated otherwise, "};
    std::vector<std::string> items;
    for (int i = 0; i < count_in(last); ++i) items.push_back(lead[i % 7] + src);
    return numbered(items);
  }
  if (last.find("same syntax as the following") != std::string::npos) {
    const auto src = step_source(last);
    std::vector<std::string> items;
    for (int i = 0; i < count_in(last); ++i) {
      std::string s;
      for (const auto& w : words_of(src)) {
        if (!s.empty()) s += ' ';
        s += strip_punct(w).size() > 3 ? pseudo_word(w, 1000 + static_cast<std::uint64_t>(i)) : w;
      }
      items.push_back(s);
    }
    return numbered(items);
  }
  if (last.find("difficult to translate") != std::string::npos) {
    auto items = longest_words(step_source(last), static_cast<std::size_t>(std::max(1, count_in(last) - 3)));
    for (auto& w : items) w = "\"" + w + "\"";
    return numbered(items);
  }
  if (last.find("related to but different from the input sentence") != std::string::npos) {
    const auto src = between(last, "Input sentence: ", "\n").value_or("");
    const std::string related = "Another example: " + lower_first(src);
    const auto src_lang = between(last, "a sentence in ", " related").value_or("Source");
    const auto tgt_lang = between(last, "translate it into ", ".").value_or("Target");
    return src_lang + ": " + related + "\n" + tgt_lang + ": " + translate(related, 0);
  }
  if (last.find("extract the keywords") != std::string::npos) {
    std::string out;
    for (const auto& w : longest_words(step_source(last), 3)) {
      if (!out.empty()) out += ", ";
      out += w + "=" + pseudo_word(w, opts_.seed);
    }
    return out;
  }
  if (last.find("describe the topics") != std::string::npos) {
    const auto key = longest_words(step_source(last), 2);
    return "General news" + (key.empty() ? std::string() : ", " + text::join(key, ", "));
  }
  if (last.find("pre-drafting research") != std::string::npos) {
    const auto src = step_source(last);
    const auto key = longest_words(src, 1);
    return "The text has " + std::to_string(words_of(src).size()) + " words. The expression \"" +
           (key.empty() ? src : key.front()) +
           "\" may be hard to render; I will keep its meaning and choose a natural equivalent.";
  }
  if (last.find("MQM annotations:") != std::string::npos && last.find("MQM annotations of the draft") == std::string::npos) {
    const auto draft = section(last, " translation:\n").value_or("");
    if (fnv1a(draft) % 3 == 0) return "no-error";
    const auto words = words_of(draft);
    return "minor/fluency: awkward wording of \"" + (words.empty() ? draft : words.back()) + "\"";
  }

  const std::string source = step_source(full);
  if (auto hit = opts_.oracle.find(source); hit != opts_.oracle.end()) return hit->second;
  if (last.find("stage: Drafting") != std::string::npos) return translate(source, 1 + salt);
  if (last.find("Post-editing with local refinement") != std::string::npos) return translate(source, 2 + salt);
  if (last.find("Proofread the refined") != std::string::npos) return translate(source, 3 + salt);
  if (last.find("MQM annotations of the draft") != std::string::npos) return translate(source, 4 + salt);
  if (last.find("Current ") != std::string::npos && last.find("Improve the translation") != std::string::npos) {
    const auto current = section(last, " translation:\n").value_or("");
    return translate(source, 5 + fnv1a(current) % 3 + salt);
  }
  if (last.find("Keyword Pairs: ") != std::string::npos) return translate(source, 6 + salt);
  if (last.find("Topics: ") != std::string::npos) return translate(source, 7 + salt);
  if (last.find("sentence pairs: ") != std::string::npos) return translate(source, 8 + salt);
  return translate(source, salt);
}

std::string SyntheticTeacher::reply(const BackendRequest& request) const {
  std::string out = answer(request);
  const bool raw_prompt = !request.prompt.is_chat();
  if (raw_prompt && opts_.cot_completions) {
    const std::string q = translation_query(request.prompt.text).value_or("");
    return format_cot_target("I translate the sentence word by word: " + q, out);
  }
  if (request.params.thinking == ThinkingMode::on) {
    return std::string(kThinkOpen) + "\nThe request asks for a translation. I go through the sentence and pick the "
                                     "best wording.\n" +
           std::string(kThinkClose) + "\n\n" + out;
  }
  return out;
}

}  // namespace thinkmt::gateway

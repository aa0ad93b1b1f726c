#include "thinkmt/metrics/rewards.hpp"

#include <algorithm>

#include "thinkmt/core/prompts.hpp"
#include "thinkmt/core/text.hpp"
#include "thinkmt/metrics/bleu.hpp"
#include "thinkmt/metrics/chrf.hpp"

namespace thinkmt::metrics {

double reward_translation(std::string_view hyp, std::string_view ref) {
  if (text::trim(hyp).empty()) return 0.0;
  const double bleu = sentence_bleu(hyp, ref) / 100.0;
  const double chrf = sentence_chrfpp(hyp, ref) / 100.0;
  return std::clamp((bleu + chrf) / 2.0, 0.0, 1.0);
}

double reward_format(std::string_view completion) { return parse_cot_target(completion) ? 1.0 : 0.0; }

}  // namespace thinkmt::metrics

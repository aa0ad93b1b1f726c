#pragma once

#include <string_view>

namespace thinkmt::metrics {

/// Translation reward in [0, 1]: mean of sentence BLEU / 100 and sentence
/// chrF++ / 100 against the reference. An empty hypothesis scores 0.
double reward_translation(std::string_view hyp, std::string_view ref);

/// 1 when the completion parses as a thinking target, else 0.
double reward_format(std::string_view completion);

}  // namespace thinkmt::metrics

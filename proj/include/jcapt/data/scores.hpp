#pragma once

namespace jcapt::data {

// Published score ranges: phones 0–2, words and utterances 0–10.
enum class ScoreLevel { phone, word, utterance };

inline constexpr double score_range(ScoreLevel level) { return level == ScoreLevel::phone ? 2.0 : 10.0; }
inline double normalize(double raw, ScoreLevel level) { return raw / score_range(level); }
inline double denormalize(double norm, ScoreLevel level) { return norm * score_range(level); }

}  // namespace jcapt::data

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "commdrop/errors.hpp"

namespace commdrop {

// Returned by extract_answer when the text contains no answer; score() maps
// it to 0.
inline constexpr const char* kNoAnswer = "[no-answer]";

enum class AnswerKind { MultipleChoice, Numeric, ExactText };

struct TaskKindSpec {
    AnswerKind kind = AnswerKind::MultipleChoice;
    std::string letters = "ABCD"; // admissible answer letters for multiple choice
    double numeric_tolerance = 1e-6;
};

struct TaskInstance {
    std::string id;
    std::string question;
    std::string answer; // gold
};

// Pulls the answer out of free-form agent text:
//   multiple_choice: the last standalone letter from `letters` (bounded by
//                    non-alphanumeric characters);
//   numeric:         the last decimal number;
//   exact_text:      the trimmed content.
// Returns kNoAnswer when nothing matches. Idempotent: re-extracting an
// extracted answer returns it unchanged.
std::string extract_answer(const std::string& content, const TaskKindSpec& kind);

// 1.0 for a correct extracted answer, 0.0 otherwise (kNoAnswer scores 0).
// Letters compare case-insensitively; numerics within tolerance; exact text
// after whitespace normalization.
double score(const std::string& extracted, const std::string& gold, const TaskKindSpec& kind);

// Loads {id, question, answer} records, one JSON object per line. Blank lines
// are skipped. Throws SchemaError naming the 1-based line number on any
// malformed or incomplete line.
std::vector<TaskInstance> load_jsonl_dataset(const std::string& path);

// Seed-shuffles and splits into (train, eval); train gets the first
// `train_count` instances. The two sides are disjoint and cover the input.
std::pair<std::vector<TaskInstance>, std::vector<TaskInstance>>
split_train_eval(std::vector<TaskInstance> instances, int train_count, uint64_t seed);

} // namespace commdrop

#include "commdrop/task.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>

#include "commdrop/rng.hpp"

using nlohmann::json;

namespace commdrop {

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string normalize_whitespace(const std::string& s) {
    std::string out;
    bool in_space = false;
    for (char c : trim(s)) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            in_space = true;
        } else {
            if (in_space && !out.empty()) out.push_back(' ');
            in_space = false;
            out.push_back(c);
        }
    }
    return out;
}

// Deliberately capital-only: a lowercase "a" is usually the article, not an
// answer.
std::string last_choice_letter(const std::string& text, const std::string& letters) {
    for (size_t k = text.size(); k-- > 0;) {
        char c = text[k];
        if (letters.find(c) == std::string::npos) continue;
        bool left_ok = k == 0 || !is_word_char(text[k - 1]);
        bool right_ok = k + 1 == text.size() || !is_word_char(text[k + 1]);
        if (left_ok && right_ok) return std::string(1, c);
    }
    return kNoAnswer;
}

std::string last_number(const std::string& text) {
    // Scan for the last maximal decimal token: optional sign, digits,
    // optional fractional part.
    size_t best_begin = std::string::npos, best_end = 0;
    size_t i = 0;
    while (i < text.size()) {
        if (std::isdigit(static_cast<unsigned char>(text[i]))) {
            size_t begin = i;
            while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
            if (i < text.size() && text[i] == '.' && i + 1 < text.size() &&
                std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
                ++i;
                while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
            }
            if (begin > 0 && (text[begin - 1] == '-') &&
                (begin == 1 || !is_word_char(text[begin - 2])))
                --begin;
            best_begin = begin;
            best_end = i;
        } else {
            ++i;
        }
    }
    if (best_begin == std::string::npos) return kNoAnswer;
    return text.substr(best_begin, best_end - best_begin);
}

} // namespace

std::string extract_answer(const std::string& content, const TaskKindSpec& kind) {
    if (content == kNoAnswer) return kNoAnswer;
    switch (kind.kind) {
    case AnswerKind::MultipleChoice:
        return last_choice_letter(content, kind.letters);
    case AnswerKind::Numeric:
        return last_number(content);
    case AnswerKind::ExactText: {
        std::string t = trim(content);
        return t.empty() ? kNoAnswer : t;
    }
    }
    return kNoAnswer;
}

double score(const std::string& extracted, const std::string& gold, const TaskKindSpec& kind) {
    if (extracted == kNoAnswer) return 0.0;
    switch (kind.kind) {
    case AnswerKind::MultipleChoice: {
        if (extracted.size() != 1 || gold.empty()) return 0.0;
        char a = char(std::toupper(static_cast<unsigned char>(extracted[0])));
        char g = char(std::toupper(static_cast<unsigned char>(trim(gold)[0])));
        return a == g ? 1.0 : 0.0;
    }
    case AnswerKind::Numeric: {
        char* end = nullptr;
        double a = std::strtod(extracted.c_str(), &end);
        if (end == extracted.c_str()) return 0.0;
        std::string g = trim(gold);
        end = nullptr;
        double b = std::strtod(g.c_str(), &end);
        if (end == g.c_str()) return 0.0;
        return std::fabs(a - b) <= kind.numeric_tolerance ? 1.0 : 0.0;
    }
    case AnswerKind::ExactText:
        return normalize_whitespace(extracted) == normalize_whitespace(gold) ? 1.0 : 0.0;
    }
    return 0.0;
}

std::vector<TaskInstance> load_jsonl_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open dataset '" + path + "'");
    std::vector<TaskInstance> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw SchemaError("dataset line " + std::to_string(line_no) +
                              ": invalid JSON: " + e.what());
        }
        if (!j.is_object())
            throw SchemaError("dataset line " + std::to_string(line_no) + ": expected an object");
        TaskInstance inst;
        for (const char* field : {"id", "question", "answer"}) {
            if (!j.contains(field) || !j[field].is_string())
                throw SchemaError("dataset line " + std::to_string(line_no) +
                                  ": missing string field '" + field + "'");
        }
        inst.id = j["id"].get<std::string>();
        inst.question = j["question"].get<std::string>();
        inst.answer = j["answer"].get<std::string>();
        out.push_back(std::move(inst));
    }
    return out;
}

std::pair<std::vector<TaskInstance>, std::vector<TaskInstance>>
split_train_eval(std::vector<TaskInstance> instances, int train_count, uint64_t seed) {
    if (train_count < 0 || train_count > int(instances.size()))
        throw ConfigError("train_count must lie in [0, dataset size]");
    Rng rng(derive_seed(seed, {hash_str("split")}));
    rng.shuffle(instances);
    std::vector<TaskInstance> train(instances.begin(), instances.begin() + train_count);
    std::vector<TaskInstance> eval(instances.begin() + train_count, instances.end());
    return {std::move(train), std::move(eval)};
}

} // namespace commdrop

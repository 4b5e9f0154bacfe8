#include "intent/data.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "intent/error.hpp"
#include "json.hpp"

namespace intent {

using nlohmann::json;

std::optional<std::size_t> label_index(std::string_view label) {
    const auto it = std::find(kLabels.begin(), kLabels.end(), label);
    if (it == kLabels.end())
        return std::nullopt;
    return static_cast<std::size_t>(it - kLabels.begin());
}

std::vector<std::string> reference_labels() { return {kLabels.begin(), kLabels.end()}; }

std::string_view split_name(Split split) {
    switch (split) {
    case Split::Train:
        return "train";
    case Split::Dev:
        return "dev";
    case Split::Test:
        return "test";
    }
    return "?";
}

std::filesystem::path split_path(const std::filesystem::path &corpus_dir, Split split) {
    return corpus_dir / (std::string(split_name(split)) + ".jsonl");
}

namespace {

Utterance parse_record(const std::string &line, const std::string &where) {
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::parse_error &e) {
        throw DataError(where + ": malformed JSON: " + e.what());
    }
    if (!obj.is_object())
        throw DataError(where + ": expected a JSON object");
    for (const auto &[key, value] : obj.items()) {
        if (key != "id" && key != "text" && key != "label")
            throw DataError(where + ": unexpected key '" + key + "'");
    }
    if (!obj.contains("id") || !obj["id"].is_number_integer())
        throw DataError(where + ": missing or non-integer 'id'");
    if (!obj.contains("text") || !obj["text"].is_string())
        throw DataError(where + ": missing or non-string 'text'");
    if (!obj.contains("label") || !obj["label"].is_string())
        throw DataError(where + ": missing or non-string 'label'");

    Utterance u;
    u.id = obj["id"].get<std::int64_t>();
    u.text = obj["text"].get<std::string>();
    u.label = obj["label"].get<std::string>();
    if (u.text.empty())
        throw DataError(where + ": empty 'text'");
    if (!label_index(u.label))
        throw DataError(where + ": unknown label '" + u.label + "'");
    return u;
}

bool is_blank(const std::string &line) {
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

} // namespace

std::vector<Utterance> load_corpus(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open corpus file " + path.string());
    std::vector<Utterance> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (is_blank(line))
            continue;
        records.push_back(parse_record(line, path.string() + ":" + std::to_string(lineno)));
    }
    return records;
}

std::vector<Utterance> load_split(const std::filesystem::path &corpus_dir, Split split) {
    return load_corpus(split_path(corpus_dir, split));
}

void save_corpus(const std::filesystem::path &path, const std::vector<Utterance> &records) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw DataError("cannot write corpus file " + path.string());
    for (const auto &u : records)
        out << json{{"id", u.id}, {"text", u.text}, {"label", u.label}}.dump() << '\n';
}

std::vector<std::string> tokenize(std::string_view text) {
    static constexpr std::string_view kReplacement = "\xEF\xBF\xBD";
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto lead = static_cast<unsigned char>(text[i]);
        std::size_t len = 0;
        if (lead < 0x80)
            len = 1;
        else if ((lead & 0xE0) == 0xC0 && lead >= 0xC2)
            len = 2;
        else if ((lead & 0xF0) == 0xE0)
            len = 3;
        else if ((lead & 0xF8) == 0xF0 && lead <= 0xF4)
            len = 4;
        bool valid = len > 0 && i + len <= text.size();
        for (std::size_t j = 1; valid && j < len; ++j)
            valid = (static_cast<unsigned char>(text[i + j]) & 0xC0) == 0x80;
        if (valid) {
            tokens.emplace_back(text.substr(i, len));
            i += len;
        } else {
            tokens.emplace_back(kReplacement);
            ++i;
        }
    }
    return tokens;
}

Vocab::Vocab() {
    add(std::string(kPadToken));
    add(std::string(kUnkToken));
}

void Vocab::add(std::string token) {
    const auto [it, inserted] = index_.emplace(token, static_cast<std::int32_t>(tokens_.size()));
    if (!inserted)
        throw DataError("vocab: duplicate token '" + token + "'");
    tokens_.push_back(std::move(token));
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
    if (tokens.size() < 2 || tokens[0] != kPadToken || tokens[1] != kUnkToken)
        throw DataError("vocab: reserved <pad>/<unk> entries missing");
    Vocab v;
    for (std::size_t i = 2; i < tokens.size(); ++i)
        v.add(std::move(tokens[i]));
    return v;
}

std::int32_t Vocab::index_of(std::string_view token) const {
    const auto it = index_.find(std::string(token));
    return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const { return index_.count(std::string(token)) != 0; }

Vocab build_vocab(const std::vector<Utterance> &train, std::size_t min_count) {
    if (train.empty())
        throw InvalidArgument("build_vocab: empty training set");
    if (min_count < 1)
        throw InvalidArgument("build_vocab: min_count must be >= 1");
    // std::map iterates in byte order, which equals code point order for
    // valid UTF-8; stable_sort then keeps that as the tie-break.
    std::map<std::string, std::size_t> counts;
    for (const auto &u : train)
        for (auto &t : tokenize(u.text))
            ++counts[std::move(t)];
    std::vector<std::pair<std::string, std::size_t>> ranked;
    for (auto &[token, count] : counts)
        if (count >= min_count)
            ranked.emplace_back(token, count);
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto &a, const auto &b) { return a.second > b.second; });

    std::vector<std::string> tokens{std::string(Vocab::kPadToken), std::string(Vocab::kUnkToken)};
    for (auto &[token, count] : ranked)
        tokens.push_back(std::move(token));
    return Vocab::from_tokens(std::move(tokens));
}

Encoded encode(std::string_view text, const Vocab &vocab, std::size_t max_len) {
    if (text.empty())
        throw InvalidArgument("encode: empty text");
    if (max_len < kMinSequence)
        throw InvalidArgument("encode: max_len must be >= 3");
    const auto tokens = tokenize(text);
    Encoded out;
    out.indices.assign(max_len, Vocab::kPad);
    const std::size_t n = std::min(tokens.size(), max_len);
    for (std::size_t i = 0; i < n; ++i)
        out.indices[i] = vocab.index_of(tokens[i]);
    out.true_len = std::max(n, kMinSequence);
    return out;
}

std::string decode(const Encoded &encoded, const Vocab &vocab) {
    std::string out;
    for (std::size_t i = 0; i < encoded.true_len && i < encoded.indices.size(); ++i)
        if (encoded.indices[i] != Vocab::kPad)
            out += vocab.token(static_cast<std::size_t>(encoded.indices[i]));
    return out;
}

std::size_t CorpusStats::total(Split split) const {
    const auto &row = counts[static_cast<std::size_t>(split)];
    std::size_t sum = 0;
    for (auto c : row)
        sum += c;
    return sum;
}

std::size_t CorpusStats::label_total(std::size_t label) const {
    return counts[0][label] + counts[1][label] + counts[2][label];
}

std::size_t CorpusStats::grand_total() const { return total(Split::Train) + total(Split::Dev) + total(Split::Test); }

CorpusStats compute_stats(const std::vector<Utterance> &train, const std::vector<Utterance> &dev,
                          const std::vector<Utterance> &test) {
    CorpusStats stats;
    const std::vector<Utterance> *splits[] = {&train, &dev, &test};
    for (std::size_t s = 0; s < 3; ++s)
        for (const auto &u : *splits[s]) {
            const auto idx = label_index(u.label);
            if (!idx)
                throw DataError("compute_stats: unknown label '" + u.label + "'");
            ++stats.counts[s][*idx];
        }
    return stats;
}

const CorpusStats &reference_stats() {
    static const CorpusStats stats = [] {
        CorpusStats s;
        s.counts[0] = {36, 24, 24, 456, 24, 30, 269, 18, 24, 107, 62, 55, 24, 68, 24, 63,
                       66, 58, 24, 402, 24, 34, 29,  71, 63, 70, 61,  71, 182, 66, 54};
        s.counts[1] = {18, 8,  8,  114, 10, 10, 88, 6,  8,  36, 21, 19, 8,  23, 8,  21,
                       22, 19, 8,  34,  8,  11, 9,  24, 21, 23, 21, 23, 60, 22, 18};
        s.counts[2] = {18, 8,  8,  50, 8,  10, 90, 6,  8,  36, 21, 18, 8,  24, 8,  21,
                       22, 19, 8,  34, 8,  11, 10, 24, 21, 23, 20, 24, 61, 22, 18};
        return s;
    }();
    return stats;
}

std::optional<std::string> first_mismatch(const CorpusStats &actual, const CorpusStats &expected) {
    for (std::size_t label = 0; label < kLabels.size(); ++label)
        for (std::size_t s = 0; s < 3; ++s)
            if (actual.counts[s][label] != expected.counts[s][label])
                return std::string(kLabels[label]) + "/" + std::string(split_name(static_cast<Split>(s))) +
                       ": expected " + std::to_string(expected.counts[s][label]) + ", got " +
                       std::to_string(actual.counts[s][label]);
    return std::nullopt;
}

} // namespace intent

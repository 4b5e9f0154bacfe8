#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace intent {

// The closed 31-label intent taxonomy, in canonical (alphabetical) order.
// A label's position in this list is its class index everywhere.
inline constexpr std::array<std::string_view, 31> kLabels = {
    "app",     "bus",     "calc",     "chat",      "cinemas", "contacts",    "cookbook",  "datetime",
    "email",   "epg",     "flight",   "health",    "lottery", "map",         "match",     "message",
    "music",   "news",    "novel",    "poetry",    "radio",   "riddle",      "schedule",  "stock",
    "telephone", "train", "translation", "tvchannel", "video", "weather",    "website"};

std::optional<std::size_t> label_index(std::string_view label);
std::vector<std::string> reference_labels();

enum class Split { Train, Dev, Test };

std::string_view split_name(Split split);
std::filesystem::path split_path(const std::filesystem::path &corpus_dir, Split split);

struct Utterance {
    std::int64_t id = 0;
    std::string text;
    std::string label;

    bool operator==(const Utterance &) const = default;
};

// Parses a JSON Lines corpus file. Each non-blank line must be an object with
// exactly the keys `id` (integer), `text` (non-empty string) and `label`
// (one of kLabels). Errors name the file and 1-based line number.
std::vector<Utterance> load_corpus(const std::filesystem::path &path);
std::vector<Utterance> load_split(const std::filesystem::path &corpus_dir, Split split);

void save_corpus(const std::filesystem::path &path, const std::vector<Utterance> &records);

// Splits UTF-8 text into one token per code point. Invalid bytes become
// U+FFFD so every token is valid UTF-8.
std::vector<std::string> tokenize(std::string_view text);

// Index 0 is PAD and 1 is UNK; the remaining indices map one-to-one to
// tokens.
class Vocab {
  public:
    static constexpr std::int32_t kPad = 0;
    static constexpr std::int32_t kUnk = 1;
    static constexpr std::string_view kPadToken = "<pad>";
    static constexpr std::string_view kUnkToken = "<unk>";

    Vocab();
    // `tokens` are in index order and must start with the two reserved
    // entries; used when restoring a vocabulary from a model file.
    static Vocab from_tokens(std::vector<std::string> tokens);

    std::size_t size() const { return tokens_.size(); }
    std::int32_t index_of(std::string_view token) const;
    bool contains(std::string_view token) const;
    const std::string &token(std::size_t index) const { return tokens_.at(index); }
    const std::vector<std::string> &tokens() const { return tokens_; }

    bool operator==(const Vocab &other) const { return tokens_ == other.tokens_; }

  private:
    void add(std::string token);

    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::int32_t> index_;
};

// Tokens seen at least `min_count` times, ordered by descending frequency and
// then by code point.
Vocab build_vocab(const std::vector<Utterance> &train, std::size_t min_count = 1);

struct Encoded {
    std::vector<std::int32_t> indices; // length max_len
    std::size_t true_len = 0;          // min(tokens, max_len), at least 3
};

inline constexpr std::size_t kMinSequence = 3;

Encoded encode(std::string_view text, const Vocab &vocab, std::size_t max_len);
inline Encoded encode(const Utterance &u, const Vocab &vocab, std::size_t max_len) {
    return encode(u.text, vocab, max_len);
}

// Inverse of encode over the first true_len positions, skipping PAD.
std::string decode(const Encoded &encoded, const Vocab &vocab);

struct CorpusStats {
    // counts[split][label index]
    std::array<std::array<std::size_t, kLabels.size()>, 3> counts{};

    std::size_t total(Split split) const;
    std::size_t label_total(std::size_t label) const;
    std::size_t grand_total() const;

    bool operator==(const CorpusStats &) const = default;
};

CorpusStats compute_stats(const std::vector<Utterance> &train, const std::vector<Utterance> &dev,
                          const std::vector<Utterance> &test);

// Per-label train/dev/test counts of the released SMP2017-ECDT corpus.
const CorpusStats &reference_stats();

// Describes the first cell (in label order, then train/dev/test) where
// `actual` differs from `expected`, or nullopt when all cells agree.
std::optional<std::string> first_mismatch(const CorpusStats &actual, const CorpusStats &expected);

} // namespace intent

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "intent/data.hpp"

namespace intent::testing {

// A CJK code point as UTF-8, offset from U+4E00; keeps generated text
// multi-byte so tokenization is exercised.
std::string cjk(std::size_t offset);

// `classes` labels (the first ones of kLabels), `per_class` utterances each.
// Every class owns four tokens no other class uses; utterances are 4-10
// tokens drawn from the owning class only.
std::vector<Utterance> separable_corpus(std::size_t classes, std::size_t per_class, std::uint64_t seed);

// `count` utterances over `classes` labels. Each position is, with
// probability `noise`, one of twelve label-neutral tokens; otherwise one of
// the class's three indicative tokens.
std::vector<Utterance> noisy_corpus(std::size_t count, std::size_t classes, double noise, std::uint64_t seed);

struct SplitCorpus {
    std::vector<Utterance> train, dev, test;
};

// Per-label split sizes exactly as in the reference statistics table.
SplitCorpus reference_shaped_corpus(std::uint64_t seed);

void write_corpus_dir(const std::filesystem::path &dir, const SplitCorpus &corpus);

// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string &tag);

} // namespace intent::testing

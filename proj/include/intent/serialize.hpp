#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "intent/baseline.hpp"
#include "intent/model.hpp"
#include "intent/tensor.hpp"
#include "json.hpp"

namespace intent {

// Model container layout (all integers little-endian):
//
//   magic        8 bytes  "INTENTNN"
//   header_len   u64
//   header       header_len bytes of UTF-8 JSON
//   block_count  u64
//   block_count times:
//     name_len   u64, then name bytes
//     rank       u64, then rank x u64 dims
//     values     prod(dims) x f32 (IEEE-754 binary32)
//   checksum     u64 FNV-1a 64 over every preceding byte
//
// The header carries format_version, model_kind ("hybrid" or
// "naive_bayes"), the dimensions, max_len, the label list and the vocab
// tokens in index order.

inline constexpr std::string_view kModelMagic = "INTENTNN";
inline constexpr int kFormatVersion = 1;

struct NamedBlock {
    std::string name;
    Shape shape;
    std::vector<float> values;
};

struct Container {
    nlohmann::json header;
    std::vector<NamedBlock> blocks;
};

std::uint64_t fnv1a64(std::string_view bytes);

std::string encode_container(const Container &container);
// Throws DataError on bad magic, truncation, trailing bytes or checksum
// mismatch.
Container decode_container(std::string_view bytes);

std::string serialize_model(const HybridModel<float> &model);
std::string serialize_model(const NBModel &model);
HybridModel<float> deserialize_hybrid(std::string_view bytes);
NBModel deserialize_nb(std::string_view bytes);

std::string read_file(const std::filesystem::path &path);
void write_file(const std::filesystem::path &path, std::string_view bytes);

} // namespace intent

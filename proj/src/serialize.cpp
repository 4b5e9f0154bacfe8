#include "intent/serialize.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <numeric>

#include "intent/error.hpp"

namespace intent {

using nlohmann::json;

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

void put_u64(std::string &out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string &out, float f) {
    const auto v = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
  public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::string_view take(std::size_t n) {
        if (n > bytes_.size() - pos_)
            throw DataError("model file truncated");
        auto out = bytes_.substr(pos_, n);
        pos_ += n;
        return out;
    }
    std::uint64_t u64() {
        const auto b = take(8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i)
            v = (v << 8) | static_cast<unsigned char>(b[static_cast<std::size_t>(i)]);
        return v;
    }
    float f32() {
        const auto b = take(4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i)
            v = (v << 8) | static_cast<unsigned char>(b[static_cast<std::size_t>(i)]);
        return std::bit_cast<float>(v);
    }
    std::size_t remaining() const { return bytes_.size() - pos_; }

  private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

template <typename T>
NamedBlock to_block(const std::string &name, const Tensor<T> &t) {
    NamedBlock b{name, t.shape(), {}};
    b.values.reserve(t.size());
    for (const T v : t.values())
        b.values.push_back(static_cast<float>(v));
    return b;
}

json base_header(std::string_view kind, const Vocab &vocab, const std::vector<std::string> &labels) {
    return {{"format_version", kFormatVersion},
            {"model_kind", kind},
            {"V", vocab.size()},
            {"C", labels.size()},
            {"labels", labels},
            {"vocab", vocab.tokens()}};
}

template <typename Header>
void check_kind(const Header &header, std::string_view kind) {
    if (header.value("format_version", -1) != kFormatVersion)
        throw DataError("unsupported model format_version");
    if (header.value("model_kind", std::string()) != kind)
        throw DataError("model file holds a '" + header.value("model_kind", std::string("?")) + "' model, expected '" +
                        std::string(kind) + "'");
}

const NamedBlock &block_named(const Container &c, const std::string &name) {
    for (const auto &b : c.blocks)
        if (b.name == name)
            return b;
    throw DataError("model file has no block '" + name + "'");
}

template <typename T>
void load_block(const Container &c, const std::string &name, Tensor<T> &dst) {
    const auto &b = block_named(c, name);
    if (b.shape != dst.shape())
        throw DataError("block '" + name + "' has shape " + shape_string(b.shape) + ", expected " +
                        shape_string(dst.shape()));
    for (std::size_t i = 0; i < b.values.size(); ++i)
        dst[i] = static_cast<T>(b.values[i]);
}

} // namespace

std::string encode_container(const Container &c) {
    std::string out(kModelMagic);
    const std::string header = c.header.dump();
    put_u64(out, header.size());
    out += header;
    put_u64(out, c.blocks.size());
    for (const auto &b : c.blocks) {
        const std::size_t volume =
            std::accumulate(b.shape.begin(), b.shape.end(), std::size_t{1}, std::multiplies<>());
        if (volume != b.values.size())
            throw ShapeError("block '" + b.name + "' shape does not match its values");
        put_u64(out, b.name.size());
        out += b.name;
        put_u64(out, b.shape.size());
        for (auto d : b.shape)
            put_u64(out, d);
        for (float v : b.values)
            put_f32(out, v);
    }
    put_u64(out, fnv1a64(out));
    return out;
}

Container decode_container(std::string_view bytes) {
    if (bytes.size() < kModelMagic.size() + 8 || bytes.substr(0, kModelMagic.size()) != kModelMagic)
        throw DataError("not a model file (bad magic)");
    const auto payload = bytes.substr(0, bytes.size() - 8);
    Reader tail(bytes.substr(bytes.size() - 8));
    if (tail.u64() != fnv1a64(payload))
        throw DataError("model file checksum mismatch");

    Reader r(payload);
    r.take(kModelMagic.size());
    Container c;
    const auto header_len = r.u64();
    try {
        c.header = json::parse(r.take(header_len));
    } catch (const json::parse_error &e) {
        throw DataError(std::string("model header is not valid JSON: ") + e.what());
    }
    const auto count = r.u64();
    for (std::uint64_t i = 0; i < count; ++i) {
        NamedBlock b;
        b.name = std::string(r.take(r.u64()));
        const auto rank = r.u64();
        if (rank < 1 || rank > 3)
            throw DataError("block '" + b.name + "' has unsupported rank");
        std::size_t volume = 1;
        for (std::uint64_t d = 0; d < rank; ++d) {
            b.shape.push_back(r.u64());
            volume *= b.shape.back();
        }
        if (volume > r.remaining() / 4)
            throw DataError("model file truncated");
        b.values.resize(volume);
        for (auto &v : b.values)
            v = r.f32();
        c.blocks.push_back(std::move(b));
    }
    if (r.remaining() != 0)
        throw DataError("model file has trailing bytes");
    return c;
}

std::string serialize_model(const HybridModel<float> &model) {
    model.validate();
    const auto d = model.dims();
    Container c;
    c.header = base_header("hybrid", model.vocab, model.labels);
    c.header["k"] = d.embed;
    c.header["H"] = d.hidden;
    c.header["F"] = d.filters;
    c.header["max_len"] = model.max_len;
    c.header["dropout"] = model.dropout;
    model.params.for_each([&](const std::string &name, const Tensor<float> &t) { c.blocks.push_back(to_block(name, t)); });
    return encode_container(c);
}

HybridModel<float> deserialize_hybrid(std::string_view bytes) {
    const Container c = decode_container(bytes);
    const auto &h = c.header;
    check_kind(h, "hybrid");
    HybridModel<float> m;
    try {
        m.vocab = Vocab::from_tokens(h.at("vocab").get<std::vector<std::string>>());
        m.labels = h.at("labels").get<std::vector<std::string>>();
        m.max_len = h.at("max_len").get<std::size_t>();
        m.dropout = h.at("dropout").get<double>();
        const ModelDims dims{h.at("V").get<std::size_t>(), h.at("k").get<std::size_t>(), h.at("H").get<std::size_t>(),
                             h.at("F").get<std::size_t>(), h.at("C").get<std::size_t>()};
        m.params = HybridParams<float>::zeros(dims);
    } catch (const json::exception &e) {
        throw DataError(std::string("model header: ") + e.what());
    } catch (const InvalidArgument &e) {
        throw DataError(std::string("model header: ") + e.what());
    }
    m.params.for_each([&](const std::string &name, Tensor<float> &t) { load_block(c, name, t); });
    m.validate();
    return m;
}

std::string serialize_model(const NBModel &model) {
    Container c;
    c.header = base_header("naive_bayes", model.vocab, model.labels);
    c.header["alpha"] = 1.0;
    // Counts are integers, exact in binary32 well past any corpus size here,
    // so the log tables rebuild bit-identically on load.
    c.blocks.push_back(to_block("doc_counts", Tensor<double>({model.doc_counts.size()}, model.doc_counts)));
    c.blocks.push_back(to_block("token_counts", model.token_counts));
    return encode_container(c);
}

NBModel deserialize_nb(std::string_view bytes) {
    const Container c = decode_container(bytes);
    const auto &h = c.header;
    check_kind(h, "naive_bayes");
    NBModel m;
    try {
        m.vocab = Vocab::from_tokens(h.at("vocab").get<std::vector<std::string>>());
        m.labels = h.at("labels").get<std::vector<std::string>>();
    } catch (const json::exception &e) {
        throw DataError(std::string("model header: ") + e.what());
    }
    if (m.labels.empty())
        throw DataError("naive bayes model has no classes");
    Tensor<double> docs({m.labels.size()});
    m.token_counts = Tensor<double>({m.labels.size(), m.vocab.size()});
    load_block(c, "doc_counts", docs);
    load_block(c, "token_counts", m.token_counts);
    m.doc_counts.assign(docs.values().begin(), docs.values().end());
    m.finalize();
    return m;
}

std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path &path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw DataError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw DataError("short write to " + path.string());
}

} // namespace intent

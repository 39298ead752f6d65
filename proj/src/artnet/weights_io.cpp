#include "artdream/artnet/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace artdream::artnet {

namespace {

constexpr std::uint8_t kMagic[4] = {'A', 'R', 'T', 'N'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    float f32() {
        const std::uint32_t bits = u32("tensor payload");
        return std::bit_cast<float>(bits);
    }

    void need(std::size_t n, const char* what) const {
        if (bytes_.size() - pos_ < n) {
            throw FormatError(std::string("weights file truncated while reading ") + what);
        }
    }

    [[nodiscard]] std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_weights(const Weights<float>& weights) {
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put_u32(out, kWeightsVersion);
    const auto tensors = weights.tensors();
    put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto* t : tensors) {
        put_u32(out, static_cast<std::uint32_t>(t->rank()));
        for (auto e : t->shape()) put_u32(out, static_cast<std::uint32_t>(e));
        for (float v : t->data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

Weights<float> deserialize_weights(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw FormatError("not a weights file (bad magic)");
    }
    Reader r(bytes.subspan(4));
    const auto version = r.u32("version");
    if (version != kWeightsVersion) {
        throw FormatError("unsupported weights version " + std::to_string(version));
    }
    const auto count = r.u32("tensor count");
    if (count < 4 || count % 2 != 0) {
        throw FormatError("weights shape table: expected an even tensor count of at least 4, got " +
                          std::to_string(count));
    }
    std::vector<ndgrid::Tensor> tensors;
    for (std::uint32_t t = 0; t < count; ++t) {
        const auto rank = r.u32("tensor rank");
        const bool classifier = t >= count - 2;
        const std::uint32_t want_rank = (t % 2 == 1) ? 1 : (classifier ? 2 : 4);
        if (rank != want_rank) {
            throw FormatError("weights shape table: tensor " + std::to_string(t) + " has rank " +
                              std::to_string(rank) + ", expected " + std::to_string(want_rank));
        }
        ndgrid::Shape shape;
        std::size_t volume = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            const auto e = r.u32("tensor extent");
            if (e == 0) throw FormatError("weights shape table: zero extent");
            shape.push_back(e);
            volume *= e;
            if (volume > r.remaining() / 4 + 1) throw FormatError("weights file truncated while reading tensor payload");
        }
        r.need(volume * 4, "tensor payload");
        std::vector<float> data(volume);
        for (auto& v : data) v = r.f32();
        try {
            tensors.emplace_back(std::move(shape), std::move(data));
        } catch (const NonFiniteError& e) {
            throw FormatError(std::string("weights payload: ") + e.what());
        }
    }
    if (r.remaining() != 0) throw FormatError("weights file has trailing bytes");

    Weights<float> w;
    for (std::uint32_t t = 0; t + 2 < count; t += 2) {
        const std::size_t pad = tensors[t].dim(2) / 2;
        w.convs.push_back({std::move(tensors[t]), std::move(tensors[t + 1]), 1, pad});
    }
    w.fc_weights = std::move(tensors[count - 2]);
    w.fc_bias = std::move(tensors[count - 1]);
    try {
        (void)Model<float>::from_weights(w);
    } catch (const ValidationError& e) {
        throw FormatError(std::string("weights shape table: ") + e.what());
    }
    return w;
}

void save_weights(const Weights<float>& weights, const std::filesystem::path& path) {
    const auto bytes = serialize_weights(weights);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write weights file " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing weights file " + path.string());
}

Weights<float> load_weights(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open weights file " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_weights(bytes);
}

}  // namespace artdream::artnet

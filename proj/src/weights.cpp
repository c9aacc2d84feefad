#include "lwir/weights.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace lwir {

const Weight& WeightStore::at(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw Error("missing weight '" + name + "'");
    return it->second;
}

Tensor WeightStore::tensor4(const std::string& name, const Shape4& expect) const {
    const Weight& w = at(name);
    if (w.dims.size() != 4 || w.dims[0] != expect.n || w.dims[1] != expect.c ||
        w.dims[2] != expect.h || w.dims[3] != expect.w)
        throw Error("weight '" + name + "' has wrong shape, expected " + expect.str());
    return Tensor(expect, w.data);
}

std::span<const float> WeightStore::vec(const std::string& name, int64_t expect_len) const {
    const Weight& w = at(name);
    if (w.elements() != expect_len)
        throw Error("weight '" + name + "' has " + std::to_string(w.elements()) +
                    " values, expected " + std::to_string(expect_len));
    return {w.data.data(), w.data.size()};
}

uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

uint64_t SplitMix64::next() {
    state += 0x9E3779B97F4A7C15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double u64_to_unit(uint64_t v) {
    return static_cast<double>(v >> 11) * (1.0 / 9007199254740992.0);  // 2^53
}

WeightStore seeded_store(std::span<const WeightSpec> specs, uint64_t seed) {
    WeightStore store;
    store.provenance = {Provenance::Kind::Seeded, "", seed};
    for (const WeightSpec& spec : specs) {
        Weight w;
        w.dims = spec.dims;
        const int64_t count = w.elements();
        w.data.resize(static_cast<size_t>(count));
        switch (spec.init) {
            case WeightInit::One:
                std::fill(w.data.begin(), w.data.end(), 1.0f);
                break;
            case WeightInit::Zero:
                std::fill(w.data.begin(), w.data.end(), 0.0f);
                break;
            case WeightInit::Uniform: {
                SplitMix64 rng{seed ^ fnv1a64(spec.name)};
                const double s = std::sqrt(6.0 / static_cast<double>(spec.fan_in));
                for (int64_t i = 0; i < count; ++i) {
                    const double u = u64_to_unit(rng.next());
                    w.data[static_cast<size_t>(i)] = static_cast<float>((2.0 * u - 1.0) * s);
                }
                break;
            }
        }
        store.put(spec.name, std::move(w));
    }
    return store;
}

namespace {

void put_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& is, const std::string& what) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw Error("weight file: truncated while reading " + what);
    return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
           static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

void put_f32(std::ostream& os, float v) {
    uint32_t u;
    std::memcpy(&u, &v, 4);
    put_u32(os, u);
}

float get_f32(std::istream& is) {
    uint32_t u = get_u32(is, "values");
    float v;
    std::memcpy(&v, &u, 4);
    return v;
}

}  // namespace

void save_weights(const std::string& path, const WeightStore& store) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open '" + path + "' for writing");
    os.write("LWIR", 4);
    put_u32(os, 1);
    for (const auto& [name, w] : store.entries()) {
        put_u32(os, static_cast<uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_u32(os, static_cast<uint32_t>(w.dims.size()));
        for (int64_t d : w.dims) put_u32(os, static_cast<uint32_t>(d));
        for (float v : w.data) put_f32(os, v);
    }
    if (!os) throw Error("write error on '" + path + "'");
}

WeightStore load_weights(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open weight file '" + path + "'");
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "LWIR", 4) != 0)
        throw Error("'" + path + "' is not a LWIR weight file");
    const uint32_t version = get_u32(is, "version");
    if (version != 1)
        throw Error("'" + path + "' has unsupported version " + std::to_string(version));
    WeightStore store;
    store.provenance = {Provenance::Kind::File, path, 0};
    while (true) {
        unsigned char peek[1];
        if (!is.read(reinterpret_cast<char*>(peek), 1)) break;  // clean end of file
        is.putback(static_cast<char>(peek[0]));
        const uint32_t name_len = get_u32(is, "name length");
        std::string name(name_len, '\0');
        if (!is.read(name.data(), name_len)) throw Error("weight file: truncated name");
        const uint32_t rank = get_u32(is, "rank");
        Weight w;
        int64_t count = 1;
        for (uint32_t i = 0; i < rank; ++i) {
            const uint32_t d = get_u32(is, "dims");
            if (d == 0) throw Error("weight '" + name + "': zero dimension");
            w.dims.push_back(static_cast<int64_t>(d));
            count *= d;
        }
        w.data.resize(static_cast<size_t>(count));
        for (int64_t i = 0; i < count; ++i) w.data[static_cast<size_t>(i)] = get_f32(is);
        store.put(name, std::move(w));
    }
    return store;
}

}  // namespace lwir

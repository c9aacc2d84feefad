#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lwir/tensor.hpp"

namespace lwir {

// One named weight array. Conv kernels are rank 4, BN affine vectors rank 1.
struct Weight {
    std::vector<int64_t> dims;
    std::vector<float> data;

    int64_t elements() const {
        int64_t p = 1;
        for (int64_t d : dims) p *= d;
        return p;
    }
};

enum class WeightInit { Uniform, One, Zero };

// What a network node requires from a store: name, shape, and how the seeded
// generator should fill it.
struct WeightSpec {
    std::string name;
    std::vector<int64_t> dims;
    WeightInit init = WeightInit::Uniform;
    int64_t fan_in = 1;
};

// Where a store's values came from.
struct Provenance {
    enum class Kind { Unset, File, Seeded } kind = Kind::Unset;
    std::string path;   // File
    uint64_t seed = 0;  // Seeded
};

class WeightStore {
public:
    bool contains(const std::string& name) const { return entries_.count(name) != 0; }
    const Weight& at(const std::string& name) const;
    void put(const std::string& name, Weight w) { entries_[name] = std::move(w); }
    size_t size() const { return entries_.size(); }
    const std::map<std::string, Weight>& entries() const { return entries_; }

    Provenance provenance;

    // Rank-4 view with shape validation.
    Tensor tensor4(const std::string& name, const Shape4& expect) const;
    // Rank-1 view with length validation.
    std::span<const float> vec(const std::string& name, int64_t expect_len) const;

private:
    std::map<std::string, Weight> entries_;
};

uint64_t fnv1a64(std::string_view s);

struct SplitMix64 {
    uint64_t state = 0;
    uint64_t next();
};

// Top 53 bits of a draw, divided by 2^53.
double u64_to_unit(uint64_t v);

// Fills every spec from a SplitMix64 stream keyed by (seed XOR fnv1a64(name)).
// Uniform draws land in [-s, s) with s = sqrt(6 / fan_in). Identical seeds
// produce bit-identical stores regardless of spec order.
WeightStore seeded_store(std::span<const WeightSpec> specs, uint64_t seed);

// Binary container: magic "LWIR", version u32 = 1, then records of
// name length u32, UTF-8 name, rank u32, dims u32 x rank, raw f32 values.
// All integers and floats little-endian.
void save_weights(const std::string& path, const WeightStore& store);
WeightStore load_weights(const std::string& path);

}  // namespace lwir

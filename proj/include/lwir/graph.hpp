#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lwir/blocks.hpp"
#include "lwir/weights.hpp"

namespace lwir {

enum class OpKind {
    Conv2d,
    DepthwiseSeparable,
    List,
    Gsat,
    Upsample,
    Downsample,
    TransposedConv,
    BilinearResize,
    Relu,
    Bn,
    Concat,
    Add,
    PixelShuffle,
};

const char* op_kind_name(OpKind k);

struct ConvNodeCfg {
    int64_t out_channels = 0;
    int64_t kernel_h = 3;
    int64_t kernel_w = 3;
    int64_t stride = 1;
    int64_t dilation = 1;
    int64_t groups = 1;
    PadMode padding = PadMode::ZeroSame;
    bool bias = false;
    bool operator==(const ConvNodeCfg&) const = default;
};

struct DsNodeCfg {
    int64_t out_channels = 0;
    int64_t stride = 1;
    bool operator==(const DsNodeCfg&) const = default;
};

struct ListNodeCfg {
    int64_t out_channels = 0;
    int64_t compression = 4;
    int64_t branching = 2;
    bool operator==(const ListNodeCfg&) const = default;
};

struct GsatNodeCfg {
    int64_t groups = 8;
    int64_t dilation = 1;
    bool operator==(const GsatNodeCfg&) const = default;
};

struct UpsampleNodeCfg {
    UpsampleMode mode = UpsampleMode::SubpixelNormal;
    int64_t scale = 2;
    int64_t out_channels = 0;
    int64_t kernel = 2;
    int64_t compression = 4;
    int64_t branching = 2;
    bool operator==(const UpsampleNodeCfg&) const = default;
};

struct DownsampleNodeCfg {
    int64_t factor = 2;
    int64_t out_channels = 0;
    int64_t compression = 4;
    int64_t branching = 2;
    bool operator==(const DownsampleNodeCfg&) const = default;
};

struct TconvNodeCfg {
    int64_t out_channels = 0;
    int64_t kernel = 4;
    int64_t stride = 2;
    int64_t pad = -1;  // -1: derive (kernel - stride) / 2
    int64_t effective_pad() const { return pad >= 0 ? pad : (kernel - stride) / 2; }
    bool operator==(const TconvNodeCfg&) const = default;
};

struct ResizeNodeCfg {
    // exactly one of: integer upscale, integer downscale factor, explicit size
    int64_t scale = 0;
    int64_t factor = 0;
    int64_t out_h = 0;
    int64_t out_w = 0;
    bool operator==(const ResizeNodeCfg&) const = default;
};

struct PixelShuffleNodeCfg {
    int64_t factor = 2;
    bool operator==(const PixelShuffleNodeCfg&) const = default;
};

struct EmptyCfg {
    bool operator==(const EmptyCfg&) const = default;
};

using NodeCfg = std::variant<ConvNodeCfg, DsNodeCfg, ListNodeCfg, GsatNodeCfg, UpsampleNodeCfg,
                             DownsampleNodeCfg, TconvNodeCfg, ResizeNodeCfg, PixelShuffleNodeCfg,
                             EmptyCfg>;

struct NodeSpec {
    std::string id;
    OpKind kind = OpKind::Relu;
    std::vector<std::string> inputs;  // node ids, or "input" for the network input
    NodeCfg cfg = EmptyCfg{};
    bool operator==(const NodeSpec&) const = default;
};

struct InputTemplate {
    int64_t channels = 3;
    std::optional<int64_t> height;  // null = resolution polymorphic
    std::optional<int64_t> width;
    bool operator==(const InputTemplate&) const = default;
};

struct NetworkSpec {
    std::string name;
    InputTemplate input;
    std::vector<NodeSpec> nodes;  // topologically ordered by construction
    std::string output;
    bool operator==(const NetworkSpec&) const = default;
};

// Channel/spatial extents flowing along the graph; spatial may be unresolved.
struct ChwShape {
    int64_t c = 0;
    std::optional<int64_t> h;
    std::optional<int64_t> w;
};

// Parses and fully validates a network file. Throws lwir::Error naming the
// offending node on the first violation.
NetworkSpec load_network(const std::string& path);
NetworkSpec parse_network_text(const std::string& json_text);
std::string network_to_json_text(const NetworkSpec& net);
void save_network(const std::string& path, const NetworkSpec& net);

// Validates the graph and returns the output shape of every node (index
// aligned with net.nodes). Resolution overrides the input template when given.
std::vector<ChwShape> propagate_shapes(const NetworkSpec& net,
                                       std::optional<int64_t> height = std::nullopt,
                                       std::optional<int64_t> width = std::nullopt);

// Every weight the network needs, in node order, named "<node id>/<sublayer>".
enum class WeightRole { Kernel, Bias, BnAffine };
struct NodeWeight {
    WeightSpec spec;
    WeightRole role = WeightRole::Kernel;
    std::string node_id;
};
std::vector<NodeWeight> weight_requirements(const NetworkSpec& net);

WeightStore seed_weights(const NetworkSpec& net, uint64_t seed);

// Checks that every required weight is present with the right shape.
void validate_weights(const NetworkSpec& net, const WeightStore& store);

// Observer, when given, sees every node's output as it is computed.
using NodeObserver = std::function<void(const NodeSpec&, const Tensor&)>;
Tensor forward(const NetworkSpec& net, const WeightStore& store, const Tensor& x,
               const NodeObserver& observer = {});

// Shipped network description files. Directory resolution order:
// LWIR_PRESET_DIR environment variable, then the build-time default.
std::string preset_dir();
std::vector<std::string> preset_names();
std::string preset_path(const std::string& name);

}  // namespace lwir

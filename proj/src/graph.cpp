#include "lwir/graph.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace lwir {

using nlohmann::json;

const char* op_kind_name(OpKind k) {
    switch (k) {
        case OpKind::Conv2d: return "conv2d";
        case OpKind::DepthwiseSeparable: return "depthwise_separable";
        case OpKind::List: return "list";
        case OpKind::Gsat: return "gsat";
        case OpKind::Upsample: return "upsample";
        case OpKind::Downsample: return "downsample";
        case OpKind::TransposedConv: return "transposed_conv";
        case OpKind::BilinearResize: return "bilinear_resize";
        case OpKind::Relu: return "relu";
        case OpKind::Bn: return "bn";
        case OpKind::Concat: return "concat";
        case OpKind::Add: return "add";
        case OpKind::PixelShuffle: return "pixel_shuffle";
    }
    return "?";
}

namespace {

OpKind op_kind_from_name(const std::string& s) {
    static const std::unordered_map<std::string, OpKind> table = {
        {"conv2d", OpKind::Conv2d},
        {"depthwise_separable", OpKind::DepthwiseSeparable},
        {"list", OpKind::List},
        {"gsat", OpKind::Gsat},
        {"upsample", OpKind::Upsample},
        {"downsample", OpKind::Downsample},
        {"transposed_conv", OpKind::TransposedConv},
        {"bilinear_resize", OpKind::BilinearResize},
        {"relu", OpKind::Relu},
        {"bn", OpKind::Bn},
        {"concat", OpKind::Concat},
        {"add", OpKind::Add},
        {"pixel_shuffle", OpKind::PixelShuffle},
    };
    auto it = table.find(s);
    if (it == table.end()) throw Error("unknown op '" + s + "'");
    return it->second;
}

int64_t get_int(const json& node, const char* key, int64_t fallback, bool required = false) {
    if (!node.contains(key)) {
        if (required) throw Error(std::string("missing key '") + key + "'");
        return fallback;
    }
    const json& v = node.at(key);
    if (!v.is_number_integer()) throw Error(std::string("key '") + key + "' must be an integer");
    return v.get<int64_t>();
}

void check_keys(const json& node, std::initializer_list<const char*> allowed) {
    static const std::unordered_set<std::string> common = {"id", "op", "in"};
    for (auto it = node.begin(); it != node.end(); ++it) {
        if (common.count(it.key())) continue;
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) { ok = true; break; }
        if (!ok) throw Error("unexpected key '" + it.key() + "'");
    }
}

NodeCfg parse_cfg(OpKind kind, const json& node) {
    switch (kind) {
        case OpKind::Conv2d: {
            check_keys(node, {"out_channels", "kernel", "stride", "dilation", "groups", "padding",
                              "bias"});
            ConvNodeCfg c;
            c.out_channels = get_int(node, "out_channels", 0, true);
            if (node.contains("kernel")) {
                const json& k = node.at("kernel");
                if (k.is_array()) {
                    if (k.size() != 2 || !k[0].is_number_integer() || !k[1].is_number_integer())
                        throw Error("key 'kernel' must be an integer or [kh, kw]");
                    c.kernel_h = k[0].get<int64_t>();
                    c.kernel_w = k[1].get<int64_t>();
                } else if (k.is_number_integer()) {
                    c.kernel_h = c.kernel_w = k.get<int64_t>();
                } else {
                    throw Error("key 'kernel' must be an integer or [kh, kw]");
                }
            }
            c.stride = get_int(node, "stride", 1);
            c.dilation = get_int(node, "dilation", 1);
            c.groups = get_int(node, "groups", 1);
            if (node.contains("padding")) {
                const std::string p = node.at("padding").get<std::string>();
                if (p == "same") c.padding = PadMode::ZeroSame;
                else if (p == "none") c.padding = PadMode::None;
                else throw Error("padding must be 'same' or 'none'");
            }
            if (node.contains("bias")) {
                if (!node.at("bias").is_boolean()) throw Error("key 'bias' must be a boolean");
                c.bias = node.at("bias").get<bool>();
            }
            return c;
        }
        case OpKind::DepthwiseSeparable: {
            check_keys(node, {"out_channels", "stride"});
            DsNodeCfg c;
            c.out_channels = get_int(node, "out_channels", 0, true);
            c.stride = get_int(node, "stride", 1);
            return c;
        }
        case OpKind::List: {
            check_keys(node, {"out_channels", "k", "n_b"});
            ListNodeCfg c;
            c.out_channels = get_int(node, "out_channels", 0, true);
            c.compression = get_int(node, "k", 4);
            c.branching = get_int(node, "n_b", 2);
            return c;
        }
        case OpKind::Gsat: {
            check_keys(node, {"groups", "dilation"});
            GsatNodeCfg c;
            c.groups = get_int(node, "groups", 8);
            c.dilation = get_int(node, "dilation", 1, true);
            return c;
        }
        case OpKind::Upsample: {
            check_keys(node, {"mode", "scale", "out_channels", "kernel", "k", "n_b"});
            UpsampleNodeCfg c;
            const std::string m = node.at("mode").get<std::string>();
            if (m == "subpixel_normal") c.mode = UpsampleMode::SubpixelNormal;
            else if (m == "subpixel_separable") c.mode = UpsampleMode::SubpixelSeparable;
            else if (m == "bilinear_list") c.mode = UpsampleMode::BilinearList;
            else throw Error("unknown upsample mode '" + m + "'");
            c.scale = get_int(node, "scale", 2);
            c.out_channels = get_int(node, "out_channels", 0, true);
            c.kernel = get_int(node, "kernel", 2);
            c.compression = get_int(node, "k", 4);
            c.branching = get_int(node, "n_b", 2);
            return c;
        }
        case OpKind::Downsample: {
            check_keys(node, {"factor", "out_channels", "k", "n_b"});
            DownsampleNodeCfg c;
            c.factor = get_int(node, "factor", 2);
            c.out_channels = get_int(node, "out_channels", 0, true);
            c.compression = get_int(node, "k", 4);
            c.branching = get_int(node, "n_b", 2);
            return c;
        }
        case OpKind::TransposedConv: {
            check_keys(node, {"out_channels", "kernel", "stride", "pad"});
            TconvNodeCfg c;
            c.out_channels = get_int(node, "out_channels", 0, true);
            c.kernel = get_int(node, "kernel", 4);
            c.stride = get_int(node, "stride", 2);
            c.pad = get_int(node, "pad", -1);
            return c;
        }
        case OpKind::BilinearResize: {
            check_keys(node, {"scale", "factor", "height", "width"});
            ResizeNodeCfg c;
            c.scale = get_int(node, "scale", 0);
            c.factor = get_int(node, "factor", 0);
            c.out_h = get_int(node, "height", 0);
            c.out_w = get_int(node, "width", 0);
            return c;
        }
        case OpKind::PixelShuffle: {
            check_keys(node, {"factor"});
            PixelShuffleNodeCfg c;
            c.factor = get_int(node, "factor", 0, true);
            return c;
        }
        case OpKind::Relu:
        case OpKind::Bn:
        case OpKind::Concat:
        case OpKind::Add:
            check_keys(node, {});
            return EmptyCfg{};
    }
    throw Error("unhandled op kind");
}

int64_t ceil_div(int64_t a, int64_t b) { return (a + b - 1) / b; }

std::optional<int64_t> resize_extent(std::optional<int64_t> in, const ResizeNodeCfg& c,
                                     int64_t explicit_out) {
    if (explicit_out > 0) return explicit_out;
    if (!in.has_value()) return std::nullopt;
    if (c.scale > 0) return *in * c.scale;
    return ceil_div(*in, c.factor);
}

}  // namespace

NetworkSpec parse_network_text(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw Error(std::string("network parse error: ") + e.what());
    }
    if (!doc.is_object()) throw Error("network file must contain a JSON object");
    NetworkSpec net;
    try {
        net.name = doc.at("name").get<std::string>();
        const json& in = doc.at("input");
        net.input.channels = in.at("channels").get<int64_t>();
        if (in.contains("height") && !in.at("height").is_null())
            net.input.height = in.at("height").get<int64_t>();
        if (in.contains("width") && !in.at("width").is_null())
            net.input.width = in.at("width").get<int64_t>();
        net.output = doc.at("output").get<std::string>();
        if (!doc.at("nodes").is_array()) throw Error("'nodes' must be an array");
    } catch (const json::exception& e) {
        throw Error(std::string("network file: ") + e.what());
    }
    if (net.input.channels < 1) throw Error("input channels must be >= 1");

    std::unordered_set<std::string> seen;
    for (const json& jn : doc.at("nodes")) {
        NodeSpec node;
        try {
            node.id = jn.at("id").get<std::string>();
        } catch (const json::exception&) {
            throw Error("every node needs a string 'id'");
        }
        if (node.id.empty() || node.id == "input")
            throw Error("node id '" + node.id + "' is reserved or empty");
        if (!seen.insert(node.id).second) throw Error("duplicate node id '" + node.id + "'");
        try {
            node.kind = op_kind_from_name(jn.at("op").get<std::string>());
            if (jn.contains("in")) {
                for (const json& s : jn.at("in")) node.inputs.push_back(s.get<std::string>());
            }
            node.cfg = parse_cfg(node.kind, jn);
        } catch (const Error& e) {
            throw Error("node '" + node.id + "': " + e.what());
        } catch (const json::exception& e) {
            throw Error("node '" + node.id + "': " + e.what());
        }
        net.nodes.push_back(std::move(node));
    }
    propagate_shapes(net);  // full structural validation
    return net;
}

NetworkSpec load_network(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open network file '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    try {
        return parse_network_text(ss.str());
    } catch (const Error& e) {
        throw Error(path + ": " + e.what());
    }
}

std::string network_to_json_text(const NetworkSpec& net) {
    json doc;
    doc["name"] = net.name;
    doc["input"]["channels"] = net.input.channels;
    doc["input"]["height"] = net.input.height ? json(*net.input.height) : json(nullptr);
    doc["input"]["width"] = net.input.width ? json(*net.input.width) : json(nullptr);
    doc["nodes"] = json::array();
    for (const NodeSpec& n : net.nodes) {
        json jn;
        jn["id"] = n.id;
        jn["op"] = op_kind_name(n.kind);
        jn["in"] = n.inputs;
        std::visit(
            [&](const auto& c) {
                using T = std::decay_t<decltype(c)>;
                if constexpr (std::is_same_v<T, ConvNodeCfg>) {
                    jn["out_channels"] = c.out_channels;
                    if (c.kernel_h == c.kernel_w) jn["kernel"] = c.kernel_h;
                    else jn["kernel"] = json::array({c.kernel_h, c.kernel_w});
                    jn["stride"] = c.stride;
                    jn["dilation"] = c.dilation;
                    jn["groups"] = c.groups;
                    jn["padding"] = c.padding == PadMode::ZeroSame ? "same" : "none";
                    if (c.bias) jn["bias"] = true;
                } else if constexpr (std::is_same_v<T, DsNodeCfg>) {
                    jn["out_channels"] = c.out_channels;
                    jn["stride"] = c.stride;
                } else if constexpr (std::is_same_v<T, ListNodeCfg>) {
                    jn["out_channels"] = c.out_channels;
                    jn["k"] = c.compression;
                    jn["n_b"] = c.branching;
                } else if constexpr (std::is_same_v<T, GsatNodeCfg>) {
                    jn["groups"] = c.groups;
                    jn["dilation"] = c.dilation;
                } else if constexpr (std::is_same_v<T, UpsampleNodeCfg>) {
                    switch (c.mode) {
                        case UpsampleMode::SubpixelNormal: jn["mode"] = "subpixel_normal"; break;
                        case UpsampleMode::SubpixelSeparable:
                            jn["mode"] = "subpixel_separable";
                            break;
                        case UpsampleMode::BilinearList: jn["mode"] = "bilinear_list"; break;
                    }
                    jn["scale"] = c.scale;
                    jn["out_channels"] = c.out_channels;
                    if (c.mode != UpsampleMode::BilinearList) jn["kernel"] = c.kernel;
                    if (c.mode == UpsampleMode::BilinearList) {
                        jn["k"] = c.compression;
                        jn["n_b"] = c.branching;
                    }
                } else if constexpr (std::is_same_v<T, DownsampleNodeCfg>) {
                    jn["factor"] = c.factor;
                    jn["out_channels"] = c.out_channels;
                    jn["k"] = c.compression;
                    jn["n_b"] = c.branching;
                } else if constexpr (std::is_same_v<T, TconvNodeCfg>) {
                    jn["out_channels"] = c.out_channels;
                    jn["kernel"] = c.kernel;
                    jn["stride"] = c.stride;
                    if (c.pad >= 0) jn["pad"] = c.pad;
                } else if constexpr (std::is_same_v<T, ResizeNodeCfg>) {
                    if (c.scale > 0) jn["scale"] = c.scale;
                    if (c.factor > 0) jn["factor"] = c.factor;
                    if (c.out_h > 0) jn["height"] = c.out_h;
                    if (c.out_w > 0) jn["width"] = c.out_w;
                } else if constexpr (std::is_same_v<T, PixelShuffleNodeCfg>) {
                    jn["factor"] = c.factor;
                }
            },
            n.cfg);
        doc["nodes"].push_back(std::move(jn));
    }
    doc["output"] = net.output;
    return doc.dump(2) + "\n";
}

void save_network(const std::string& path, const NetworkSpec& net) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open '" + path + "' for writing");
    os << network_to_json_text(net);
    if (!os) throw Error("write error on '" + path + "'");
}

std::vector<ChwShape> propagate_shapes(const NetworkSpec& net, std::optional<int64_t> height,
                                       std::optional<int64_t> width) {
    std::unordered_map<std::string, ChwShape> by_id;
    ChwShape in_shape{net.input.channels, height ? height : net.input.height,
                      width ? width : net.input.width};
    by_id["input"] = in_shape;

    auto lookup = [&](const NodeSpec& n, const std::string& ref) -> const ChwShape& {
        auto it = by_id.find(ref);
        if (it == by_id.end())
            throw Error("node '" + n.id + "': references undefined node '" + ref + "'");
        return it->second;
    };
    auto want_inputs = [&](const NodeSpec& n, size_t count) {
        if (n.inputs.size() != count)
            throw Error("node '" + n.id + "': op " + op_kind_name(n.kind) + " takes " +
                        std::to_string(count) + " input(s), got " +
                        std::to_string(n.inputs.size()));
    };

    std::vector<ChwShape> out;
    out.reserve(net.nodes.size());
    for (const NodeSpec& n : net.nodes) {
        if (n.inputs.empty())
            throw Error("node '" + n.id + "': needs at least one input");
        ChwShape r;
        try {
            switch (n.kind) {
                case OpKind::Conv2d: {
                    want_inputs(n, 1);
                    const ChwShape& s = lookup(n, n.inputs[0]);
                    const auto& c = std::get<ConvNodeCfg>(n.cfg);
                    ConvParams p;
                    p.kernel_h = c.kernel_h;
                    p.kernel_w = c.kernel_w;
                    p.in_channels = s.c;
                    p.out_channels = c.out_channels;
                    p.stride = c.stride;
                    p.dilation = c.dilation;
                    p.groups = c.groups;
                    p.padding = c.padding;
                    p.validate();
                    r.c = c.out_channels;
                    if (s.h) r.h = conv_out_extent(*s.h, c.kernel_h, c.stride, c.dilation, c.padding);
                    if (s.w) r.w = conv_out_extent(*s.w, c.kernel_w, c.stride, c.dilation, c.padding);
                    break;
                }
                case OpKind::DepthwiseSeparable: {
                    want_inputs(n, 1);
                    const ChwShape& s = lookup(n, n.inputs[0]);
                    const auto& c = std::get<DsNodeCfg>(n.cfg);
                    if (c.out_channels < 1) throw Error("out_channels must be >= 1");
                    if (c.stride < 1) throw Error("stride must be >= 1");
                    r.c = c.out_channels;
                    if (s.h) r.h = ceil_div(*s.h, c.stride);
                    if (s.w) r.w = ceil_div(*s.w, c.stride);
                    break;
                }
                case OpKind::List: {
                    want_inputs(n, 1);
                    const ChwShape& s = lookup(n, n.inputs[0]);
                    const auto& c = std::get<ListNodeCfg>(n.cfg);
                    ListConfig lc{s.c, c.out_channels, c.compression, c.branching};
                    lc.validate();
                    r = {c.out_channels, s.h, s.w};
                    break;
                }
                case OpKind::Gsat: {
                    want_inputs(n, 1);
                    const ChwShape& s = lookup(n, n.inputs[0]);
                    const auto& c = std::get<GsatNodeCfg>(n.cfg);
                    GsatConfig gc{s.c, c.groups, c.dilation};
                    gc.validate();
                    r = s;
                    break;
                }
                case OpKind::Upsample: {
                    want_inputs(n, 1);
                    const ChwShape& s = lookup(n, n.inputs[0]);
                    const auto& c = std::get<UpsampleNodeCfg>(n.cfg);
                    UpsampleConfig uc{c.mode, c.scale, s.c, c.out_channels, c.kernel,
                                      c.compression, c.branching};
                    uc.validate();
                    r.c = c.out_channels;
                    if (s.h) r.h = *s.h * c.scale;
                    if (s.w) r.w = *s.w * c.scale;
                    break;
                }
                case OpKind::Downsample: {
                    want_inputs(n, 1);
                    const ChwShape& s = lookup(n, n.inputs[0]);
                    const auto& c = std::get<DownsampleNodeCfg>(n.cfg);
                    if (c.factor < 2) throw Error("factor must be >= 2");
                    ListConfig lc{s.c, c.out_channels, c.compression, c.branching};
                    lc.validate();
                    if (s.h && *s.h < c.factor)
                        throw Error("spatial height " + std::to_string(*s.h) +
                                    " degenerate for factor " + std::to_string(c.factor));
                    if (s.w && *s.w < c.factor)
                        throw Error("spatial width " + std::to_string(*s.w) +
                                    " degenerate for factor " + std::to_string(c.factor));
                    r.c = c.out_channels;
                    if (s.h) r.h = ceil_div(*s.h, c.factor);
                    if (s.w) r.w = ceil_div(*s.w, c.factor);
                    break;
                }
                case OpKind::TransposedConv: {
                    want_inputs(n, 1);
                    const ChwShape& s = lookup(n, n.inputs[0]);
                    const auto& c = std::get<TconvNodeCfg>(n.cfg);
                    if (c.out_channels < 1) throw Error("out_channels must be >= 1");
                    if (c.kernel < 1 || c.stride < 1) throw Error("kernel and stride must be >= 1");
                    if (c.pad < 0 && (c.kernel - c.stride) % 2 != 0)
                        throw Error("unsupported padding combination: kernel " +
                                    std::to_string(c.kernel) + " minus stride " +
                                    std::to_string(c.stride) +
                                    " is odd, specify 'pad' explicitly");
                    const int64_t pad = c.effective_pad();
                    if (pad < 0) throw Error("derived padding is negative");
                    r.c = c.out_channels;
                    if (s.h) {
                        int64_t oh = (*s.h - 1) * c.stride + c.kernel - 2 * pad;
                        if (oh < 1) throw Error("output height degenerate");
                        r.h = oh;
                    }
                    if (s.w) {
                        int64_t ow = (*s.w - 1) * c.stride + c.kernel - 2 * pad;
                        if (ow < 1) throw Error("output width degenerate");
                        r.w = ow;
                    }
                    break;
                }
                case OpKind::BilinearResize: {
                    want_inputs(n, 1);
                    const ChwShape& s = lookup(n, n.inputs[0]);
                    const auto& c = std::get<ResizeNodeCfg>(n.cfg);
                    const bool has_size = c.out_h > 0 || c.out_w > 0;
                    const int ways = (c.scale > 0) + (c.factor > 0) + has_size;
                    if (ways != 1)
                        throw Error("give exactly one of 'scale', 'factor' or 'height'/'width'");
                    if (has_size && (c.out_h < 1 || c.out_w < 1))
                        throw Error("explicit height and width must both be >= 1");
                    if (c.factor == 1 || c.factor < 0 || c.scale < 0)
                        throw Error("scale must be >= 1 and factor >= 2");
                    r.c = s.c;
                    r.h = resize_extent(s.h, c, c.out_h);
                    r.w = resize_extent(s.w, c, c.out_w);
                    break;
                }
                case OpKind::Relu:
                case OpKind::Bn: {
                    want_inputs(n, 1);
                    r = lookup(n, n.inputs[0]);
                    break;
                }
                case OpKind::Concat: {
                    if (n.inputs.empty()) throw Error("concat needs inputs");
                    r = lookup(n, n.inputs[0]);
                    int64_t c_total = 0;
                    for (const std::string& ref : n.inputs) {
                        const ChwShape& s = lookup(n, ref);
                        c_total += s.c;
                        if (s.h && r.h && *s.h != *r.h)
                            throw Error("concat operands disagree on height");
                        if (s.w && r.w && *s.w != *r.w)
                            throw Error("concat operands disagree on width");
                    }
                    r.c = c_total;
                    break;
                }
                case OpKind::Add: {
                    want_inputs(n, 2);
                    const ChwShape& a = lookup(n, n.inputs[0]);
                    const ChwShape& b = lookup(n, n.inputs[1]);
                    if (a.c != b.c)
                        throw Error("add operands have " + std::to_string(a.c) + " vs " +
                                    std::to_string(b.c) + " channels");
                    if (a.h && b.h && *a.h != *b.h) throw Error("add operands disagree on height");
                    if (a.w && b.w && *a.w != *b.w) throw Error("add operands disagree on width");
                    r = a;
                    break;
                }
                case OpKind::PixelShuffle: {
                    want_inputs(n, 1);
                    const ChwShape& s = lookup(n, n.inputs[0]);
                    const auto& c = std::get<PixelShuffleNodeCfg>(n.cfg);
                    if (c.factor < 1) throw Error("factor must be >= 1");
                    if (s.c % (c.factor * c.factor) != 0)
                        throw Error("channels " + std::to_string(s.c) +
                                    " not divisible by factor^2 = " +
                                    std::to_string(c.factor * c.factor));
                    r.c = s.c / (c.factor * c.factor);
                    if (s.h) r.h = *s.h * c.factor;
                    if (s.w) r.w = *s.w * c.factor;
                    break;
                }
            }
        } catch (const Error& e) {
            const std::string what = e.what();
            if (what.rfind("node '", 0) == 0) throw;  // already prefixed
            throw Error("node '" + n.id + "': " + what);
        }
        by_id[n.id] = r;
        out.push_back(r);
    }

    if (net.output != "input") {
        if (!by_id.count(net.output))
            throw Error("output references undefined node '" + net.output + "'");
    }
    return out;
}

namespace {

void push_list_weights(std::vector<NodeWeight>& ws, const std::string& node_id,
                       const std::string& prefix, const ListConfig& lc) {
    const int64_t red = lc.reduced();
    auto add = [&](const std::string& sub, std::vector<int64_t> dims, WeightInit init,
                   int64_t fan_in, WeightRole role) {
        ws.push_back({WeightSpec{node_id + "/" + prefix + sub, std::move(dims), init, fan_in},
                      role, node_id});
    };
    add("reduce_w", {red, lc.in_channels, 1, 1}, WeightInit::Uniform, lc.in_channels,
        WeightRole::Kernel);
    add("reduce_bn_scale", {red}, WeightInit::One, 1, WeightRole::BnAffine);
    add("reduce_bn_shift", {red}, WeightInit::Zero, 1, WeightRole::BnAffine);
    add("branch1_w", {lc.branch1_out(), red, 1, 1}, WeightInit::Uniform, red, WeightRole::Kernel);
    add("dw_w", {red, 1, 3, 3}, WeightInit::Uniform, 9, WeightRole::Kernel);
    add("pw_w", {lc.branch3_out(), red, 1, 1}, WeightInit::Uniform, red, WeightRole::Kernel);
    add("out_bn_scale", {lc.out_channels}, WeightInit::One, 1, WeightRole::BnAffine);
    add("out_bn_shift", {lc.out_channels}, WeightInit::Zero, 1, WeightRole::BnAffine);
}

ListWeights fetch_list_weights(const WeightStore& store, const std::string& node_id,
                               const std::string& prefix, const ListConfig& lc) {
    const int64_t red = lc.reduced();
    auto name = [&](const char* sub) { return node_id + "/" + prefix + sub; };
    ListWeights w;
    w.reduce_w = store.tensor4(name("reduce_w"), {red, lc.in_channels, 1, 1});
    auto rs = store.vec(name("reduce_bn_scale"), red);
    auto rt = store.vec(name("reduce_bn_shift"), red);
    w.reduce_bn.scale.assign(rs.begin(), rs.end());
    w.reduce_bn.shift.assign(rt.begin(), rt.end());
    w.branch1_w = store.tensor4(name("branch1_w"), {lc.branch1_out(), red, 1, 1});
    w.dw_w = store.tensor4(name("dw_w"), {red, 1, 3, 3});
    w.pw_w = store.tensor4(name("pw_w"), {lc.branch3_out(), red, 1, 1});
    auto os = store.vec(name("out_bn_scale"), lc.out_channels);
    auto ot = store.vec(name("out_bn_shift"), lc.out_channels);
    w.out_bn.scale.assign(os.begin(), os.end());
    w.out_bn.shift.assign(ot.begin(), ot.end());
    return w;
}

}  // namespace

std::vector<NodeWeight> weight_requirements(const NetworkSpec& net) {
    std::vector<ChwShape> shapes = propagate_shapes(net);
    std::unordered_map<std::string, int64_t> channels;
    channels["input"] = net.input.channels;
    for (size_t i = 0; i < net.nodes.size(); ++i) channels[net.nodes[i].id] = shapes[i].c;

    std::vector<NodeWeight> ws;
    for (const NodeSpec& n : net.nodes) {
        const int64_t in_c = channels.at(n.inputs.empty() ? "input" : n.inputs[0]);
        auto add = [&](const std::string& sub, std::vector<int64_t> dims, WeightInit init,
                       int64_t fan_in, WeightRole role) {
            ws.push_back({WeightSpec{n.id + "/" + sub, std::move(dims), init, fan_in}, role, n.id});
        };
        switch (n.kind) {
            case OpKind::Conv2d: {
                const auto& c = std::get<ConvNodeCfg>(n.cfg);
                add("w", {c.out_channels, in_c / c.groups, c.kernel_h, c.kernel_w},
                    WeightInit::Uniform, (in_c / c.groups) * c.kernel_h * c.kernel_w,
                    WeightRole::Kernel);
                if (c.bias) add("b", {c.out_channels}, WeightInit::Zero, 1, WeightRole::Bias);
                break;
            }
            case OpKind::DepthwiseSeparable: {
                const auto& c = std::get<DsNodeCfg>(n.cfg);
                add("dw", {in_c, 1, 3, 3}, WeightInit::Uniform, 9, WeightRole::Kernel);
                add("pw", {c.out_channels, in_c, 1, 1}, WeightInit::Uniform, in_c,
                    WeightRole::Kernel);
                break;
            }
            case OpKind::List: {
                const auto& c = std::get<ListNodeCfg>(n.cfg);
                push_list_weights(ws, n.id, "", {in_c, c.out_channels, c.compression, c.branching});
                break;
            }
            case OpKind::Gsat: {
                const auto& c = std::get<GsatNodeCfg>(n.cfg);
                const int64_t per = in_c / c.groups;
                add("dil_w", {in_c, per, 3, 3}, WeightInit::Uniform, per * 9, WeightRole::Kernel);
                add("dil_bn_scale", {in_c}, WeightInit::One, 1, WeightRole::BnAffine);
                add("dil_bn_shift", {in_c}, WeightInit::Zero, 1, WeightRole::BnAffine);
                add("pw_w", {in_c, per, 1, 1}, WeightInit::Uniform, per, WeightRole::Kernel);
                add("pw_bn_scale", {in_c}, WeightInit::One, 1, WeightRole::BnAffine);
                add("pw_bn_shift", {in_c}, WeightInit::Zero, 1, WeightRole::BnAffine);
                break;
            }
            case OpKind::Upsample: {
                const auto& c = std::get<UpsampleNodeCfg>(n.cfg);
                const int64_t conv_out = c.out_channels * c.scale * c.scale;
                if (c.mode == UpsampleMode::SubpixelNormal) {
                    add("w", {conv_out, in_c, c.kernel, c.kernel}, WeightInit::Uniform,
                        in_c * c.kernel * c.kernel, WeightRole::Kernel);
                } else if (c.mode == UpsampleMode::SubpixelSeparable) {
                    add("dw", {in_c, 1, c.kernel, c.kernel}, WeightInit::Uniform,
                        c.kernel * c.kernel, WeightRole::Kernel);
                    add("pw", {conv_out, in_c, 1, 1}, WeightInit::Uniform, in_c,
                        WeightRole::Kernel);
                } else {
                    push_list_weights(ws, n.id, "list_",
                                      {in_c, c.out_channels, c.compression, c.branching});
                }
                break;
            }
            case OpKind::Downsample: {
                const auto& c = std::get<DownsampleNodeCfg>(n.cfg);
                push_list_weights(ws, n.id, "list_",
                                  {in_c, c.out_channels, c.compression, c.branching});
                break;
            }
            case OpKind::TransposedConv: {
                const auto& c = std::get<TconvNodeCfg>(n.cfg);
                add("w", {in_c, c.out_channels, c.kernel, c.kernel}, WeightInit::Uniform,
                    in_c * c.kernel * c.kernel, WeightRole::Kernel);
                break;
            }
            case OpKind::Bn: {
                add("scale", {in_c}, WeightInit::One, 1, WeightRole::BnAffine);
                add("shift", {in_c}, WeightInit::Zero, 1, WeightRole::BnAffine);
                break;
            }
            default:
                break;
        }
    }
    return ws;
}

WeightStore seed_weights(const NetworkSpec& net, uint64_t seed) {
    const std::vector<NodeWeight> reqs = weight_requirements(net);
    std::vector<WeightSpec> specs;
    specs.reserve(reqs.size());
    for (const NodeWeight& r : reqs) specs.push_back(r.spec);
    return seeded_store(specs, seed);
}

void validate_weights(const NetworkSpec& net, const WeightStore& store) {
    const std::vector<NodeWeight> reqs = weight_requirements(net);
    std::unordered_set<std::string> needed;
    for (const NodeWeight& r : reqs) {
        needed.insert(r.spec.name);
        const Weight& w = store.at(r.spec.name);
        if (w.dims != r.spec.dims)
            throw Error("weight '" + r.spec.name + "' has wrong shape");
    }
    for (const auto& [name, w] : store.entries()) {
        (void)w;
        if (!needed.count(name)) throw Error("orphan weight '" + name + "' not used by network");
    }
}

Tensor forward(const NetworkSpec& net, const WeightStore& store, const Tensor& x,
               const NodeObserver& observer) {
    if (x.shape.c != net.input.channels)
        throw Error("forward: input has " + std::to_string(x.shape.c) +
                    " channels, network expects " + std::to_string(net.input.channels));
    if (net.input.height && x.shape.h != *net.input.height)
        throw Error("forward: input height " + std::to_string(x.shape.h) +
                    " does not match template " + std::to_string(*net.input.height));
    if (net.input.width && x.shape.w != *net.input.width)
        throw Error("forward: input width " + std::to_string(x.shape.w) +
                    " does not match template " + std::to_string(*net.input.width));
    propagate_shapes(net, x.shape.h, x.shape.w);

    // last position each value is read, so intermediates can be dropped early
    std::unordered_map<std::string, size_t> last_use;
    last_use[net.output] = net.nodes.size();
    for (size_t i = 0; i < net.nodes.size(); ++i)
        for (const std::string& ref : net.nodes[i].inputs) {
            auto it = last_use.find(ref);
            if (it == last_use.end() || it->second < i) last_use[ref] = i;
        }

    std::unordered_map<std::string, Tensor> values;
    values.emplace("input", x);

    for (size_t i = 0; i < net.nodes.size(); ++i) {
        const NodeSpec& n = net.nodes[i];
        auto value_of = [&](const std::string& ref) -> const Tensor& {
            auto it = values.find(ref);
            if (it == values.end())
                throw Error("internal: node '" + n.id + "' input '" + ref + "' not computed");
            return it->second;
        };
        const Tensor& in0 = value_of(n.inputs[0]);
        Tensor out;
        switch (n.kind) {
            case OpKind::Conv2d: {
                const auto& c = std::get<ConvNodeCfg>(n.cfg);
                ConvParams p;
                p.kernel_h = c.kernel_h;
                p.kernel_w = c.kernel_w;
                p.in_channels = in0.shape.c;
                p.out_channels = c.out_channels;
                p.stride = c.stride;
                p.dilation = c.dilation;
                p.groups = c.groups;
                p.padding = c.padding;
                Tensor w = store.tensor4(n.id + "/w", {c.out_channels, in0.shape.c / c.groups,
                                                       c.kernel_h, c.kernel_w});
                out = conv2d(in0, w, p);
                if (c.bias) {
                    auto b = store.vec(n.id + "/b", c.out_channels);
                    const int64_t plane = out.shape.h * out.shape.w;
                    for (int64_t bb = 0; bb < out.shape.n; ++bb)
                        for (int64_t ch = 0; ch < out.shape.c; ++ch) {
                            float* p2 = out.plane(bb, ch);
                            const float bv = b[static_cast<size_t>(ch)];
                            for (int64_t j = 0; j < plane; ++j) p2[j] += bv;
                        }
                }
                break;
            }
            case OpKind::DepthwiseSeparable: {
                const auto& c = std::get<DsNodeCfg>(n.cfg);
                Tensor dw = store.tensor4(n.id + "/dw", {in0.shape.c, 1, 3, 3});
                Tensor pw = store.tensor4(n.id + "/pw", {c.out_channels, in0.shape.c, 1, 1});
                if (c.stride == 1) {
                    out = depthwise_separable(in0, dw, pw);
                } else {
                    ConvParams pd;
                    pd.kernel_h = pd.kernel_w = 3;
                    pd.in_channels = pd.out_channels = in0.shape.c;
                    pd.groups = in0.shape.c;
                    pd.stride = c.stride;
                    Tensor mid = conv2d(in0, dw, pd);
                    ConvParams pp;
                    pp.kernel_h = pp.kernel_w = 1;
                    pp.in_channels = in0.shape.c;
                    pp.out_channels = c.out_channels;
                    out = conv2d(mid, pw, pp);
                }
                break;
            }
            case OpKind::List: {
                const auto& c = std::get<ListNodeCfg>(n.cfg);
                ListConfig lc{in0.shape.c, c.out_channels, c.compression, c.branching};
                out = list_forward(in0, lc, fetch_list_weights(store, n.id, "", lc));
                break;
            }
            case OpKind::Gsat: {
                const auto& c = std::get<GsatNodeCfg>(n.cfg);
                GsatConfig gc{in0.shape.c, c.groups, c.dilation};
                const int64_t per = in0.shape.c / c.groups;
                GsatWeights w;
                w.dil_w = store.tensor4(n.id + "/dil_w", {in0.shape.c, per, 3, 3});
                auto ds = store.vec(n.id + "/dil_bn_scale", in0.shape.c);
                auto dt = store.vec(n.id + "/dil_bn_shift", in0.shape.c);
                w.dil_bn.scale.assign(ds.begin(), ds.end());
                w.dil_bn.shift.assign(dt.begin(), dt.end());
                w.pw_w = store.tensor4(n.id + "/pw_w", {in0.shape.c, per, 1, 1});
                auto ps = store.vec(n.id + "/pw_bn_scale", in0.shape.c);
                auto pt = store.vec(n.id + "/pw_bn_shift", in0.shape.c);
                w.pw_bn.scale.assign(ps.begin(), ps.end());
                w.pw_bn.shift.assign(pt.begin(), pt.end());
                out = gsat_forward(in0, gc, w);
                break;
            }
            case OpKind::Upsample: {
                const auto& c = std::get<UpsampleNodeCfg>(n.cfg);
                UpsampleConfig uc{c.mode, c.scale, in0.shape.c, c.out_channels, c.kernel,
                                  c.compression, c.branching};
                UpsampleWeights w;
                const int64_t conv_out = c.out_channels * c.scale * c.scale;
                if (c.mode == UpsampleMode::SubpixelNormal) {
                    w.conv_w = store.tensor4(n.id + "/w", {conv_out, in0.shape.c, c.kernel, c.kernel});
                } else if (c.mode == UpsampleMode::SubpixelSeparable) {
                    w.dw_w = store.tensor4(n.id + "/dw", {in0.shape.c, 1, c.kernel, c.kernel});
                    w.pw_w = store.tensor4(n.id + "/pw", {conv_out, in0.shape.c, 1, 1});
                } else {
                    w.list = fetch_list_weights(store, n.id, "list_", uc.list_config());
                }
                out = upsample_forward(in0, uc, w);
                break;
            }
            case OpKind::Downsample: {
                const auto& c = std::get<DownsampleNodeCfg>(n.cfg);
                ListConfig lc{in0.shape.c, c.out_channels, c.compression, c.branching};
                out = downsample_forward(in0, c.factor, lc,
                                         fetch_list_weights(store, n.id, "list_", lc));
                break;
            }
            case OpKind::TransposedConv: {
                const auto& c = std::get<TconvNodeCfg>(n.cfg);
                Tensor w = store.tensor4(n.id + "/w",
                                         {in0.shape.c, c.out_channels, c.kernel, c.kernel});
                out = transposed_conv2d(in0, w, c.stride, c.effective_pad());
                break;
            }
            case OpKind::BilinearResize: {
                const auto& c = std::get<ResizeNodeCfg>(n.cfg);
                int64_t oh = c.out_h > 0 ? c.out_h
                             : c.scale > 0 ? in0.shape.h * c.scale
                                           : ceil_div(in0.shape.h, c.factor);
                int64_t ow = c.out_w > 0 ? c.out_w
                             : c.scale > 0 ? in0.shape.w * c.scale
                                           : ceil_div(in0.shape.w, c.factor);
                out = bilinear_resize(in0, oh, ow);
                break;
            }
            case OpKind::Relu:
                out = relu(in0);
                break;
            case OpKind::Bn: {
                auto s = store.vec(n.id + "/scale", in0.shape.c);
                auto t = store.vec(n.id + "/shift", in0.shape.c);
                out = bn_inference(in0, s, t);
                break;
            }
            case OpKind::Concat: {
                std::vector<const Tensor*> refs;
                refs.reserve(n.inputs.size());
                for (const std::string& ref : n.inputs) refs.push_back(&value_of(ref));
                out = concat_channels(refs);
                break;
            }
            case OpKind::Add:
                out = add(in0, value_of(n.inputs[1]));
                break;
            case OpKind::PixelShuffle: {
                const auto& c = std::get<PixelShuffleNodeCfg>(n.cfg);
                out = pixel_shuffle(in0, c.factor);
                break;
            }
        }
        if (observer) observer(n, out);
        values.emplace(n.id, std::move(out));
        // release dead intermediates
        for (const std::string& ref : n.inputs) {
            auto it = last_use.find(ref);
            if (it != last_use.end() && it->second == i && ref != net.output) values.erase(ref);
        }
    }
    auto it = values.find(net.output);
    if (it == values.end()) throw Error("internal: output '" + net.output + "' not computed");
    return it->second;
}

std::string preset_dir() {
    if (const char* env = std::getenv("LWIR_PRESET_DIR")) return env;
#ifdef LWIR_DEFAULT_PRESET_DIR
    return LWIR_DEFAULT_PRESET_DIR;
#else
    return "presets";
#endif
}

std::vector<std::string> preset_names() {
    return {"glcic_baseline", "glcic_m1", "glcic_m2",       "glcic_m3",
            "glcic_m4",       "glcic_m5", "glcic_m6",       "dncnn_baseline",
            "dncnn_m6",       "srresnet_baseline", "srresnet_m6"};
}

std::string preset_path(const std::string& name) {
    return preset_dir() + "/" + name + ".json";
}

}  // namespace lwir

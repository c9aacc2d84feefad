#include "lwir/cost.hpp"

#include <cmath>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace lwir {

using nlohmann::json;

namespace {

std::optional<int64_t> area(const ChwShape& s) {
    if (s.h && s.w) return *s.h * *s.w;
    return std::nullopt;
}

int64_t weight_elems(const std::vector<int64_t>& dims) {
    int64_t p = 1;
    for (int64_t d : dims) p *= d;
    return p;
}

}  // namespace

CostEntry count_node(const NodeSpec& node, const std::vector<ChwShape>& in_shapes,
                     const ChwShape& out_shape, const std::vector<NodeWeight>& node_weights,
                     CostMode mode) {
    CostEntry e;
    e.id = node.id;
    e.op = op_kind_name(node.kind);
    e.out = out_shape;

    // params: enumerate actual weight arrays
    bool has_bias = false;
    for (const NodeWeight& w : node_weights) {
        if (w.role == WeightRole::Kernel) e.params += weight_elems(w.spec.dims);
        else if (mode == CostMode::Full) e.params += weight_elems(w.spec.dims);
        if (w.role == WeightRole::Bias) has_bias = true;
    }

    const ChwShape& in0 = in_shapes.empty() ? out_shape : in_shapes[0];
    const int64_t M = in0.c;
    const auto in_area = area(in0);
    const auto out_area = area(out_shape);

    int64_t kernel_params = 0;  // closed form, conv kernels only
    std::optional<int64_t> macs;

    switch (node.kind) {
        case OpKind::Conv2d: {
            const auto& c = std::get<ConvNodeCfg>(node.cfg);
            kernel_params = c.kernel_h * c.kernel_w * (M / c.groups) * c.out_channels;
            if (out_area) {
                macs = kernel_params * *out_area;
                if (mode == CostMode::Full && has_bias) *macs += c.out_channels * *out_area;
            }
            break;
        }
        case OpKind::DepthwiseSeparable: {
            const auto& c = std::get<DsNodeCfg>(node.cfg);
            kernel_params = separable_param_count(M, c.out_channels);
            if (out_area) macs = kernel_params * *out_area;
            break;
        }
        case OpKind::List: {
            const auto& c = std::get<ListNodeCfg>(node.cfg);
            ListConfig lc{M, c.out_channels, c.compression, c.branching};
            kernel_params = list_param_count(lc);
            if (out_area) {
                macs = kernel_params * *out_area;
                if (mode == CostMode::Full)  // the block's two internal BN stages
                    *macs += (lc.reduced() + lc.out_channels) * *out_area;
            }
            break;
        }
        case OpKind::Gsat: {
            const auto& c = std::get<GsatNodeCfg>(node.cfg);
            GsatConfig gc{M, c.groups, c.dilation};
            kernel_params = gsat_param_count(gc);
            if (out_area) {
                macs = kernel_params * *out_area;
                if (mode == CostMode::Full) *macs += 2 * M * *out_area;
            }
            e.ratio = 9.0 * static_cast<double>(c.groups) / 10.0;
            break;
        }
        case OpKind::Upsample: {
            const auto& c = std::get<UpsampleNodeCfg>(node.cfg);
            if (c.mode == UpsampleMode::SubpixelNormal) {
                kernel_params = subpixel_normal_param_count(c.kernel, M, c.out_channels, c.scale);
                if (in_area) macs = kernel_params * *in_area;
            } else if (c.mode == UpsampleMode::SubpixelSeparable) {
                kernel_params = subpixel_separable_param_count(c.kernel, M, c.out_channels,
                                                               c.scale);
                if (in_area) macs = kernel_params * *in_area;
                const double cl = static_cast<double>(c.out_channels * c.scale * c.scale);
                const double kk = static_cast<double>(c.kernel * c.kernel);
                e.ratio = 4.0 * (1.0 / kk + 1.0 / cl);
            } else {
                ListConfig lc{M, c.out_channels, c.compression, c.branching};
                kernel_params = list_param_count(lc);
                if (out_area) {
                    macs = kernel_params * *out_area;
                    if (mode == CostMode::Full)  // resize + internal BN stages
                        *macs += (4 * M + lc.reduced() + lc.out_channels) * *out_area;
                }
            }
            break;
        }
        case OpKind::Downsample: {
            const auto& c = std::get<DownsampleNodeCfg>(node.cfg);
            ListConfig lc{M, c.out_channels, c.compression, c.branching};
            kernel_params = list_param_count(lc);
            if (out_area) {
                macs = kernel_params * *out_area;
                if (mode == CostMode::Full)
                    *macs += (4 * M + lc.reduced() + lc.out_channels) * *out_area;
            }
            break;
        }
        case OpKind::TransposedConv: {
            const auto& c = std::get<TconvNodeCfg>(node.cfg);
            kernel_params = c.kernel * c.kernel * M * c.out_channels;
            if (in_area) macs = kernel_params * *in_area;
            break;
        }
        case OpKind::BilinearResize: {
            kernel_params = 0;
            if (out_area) macs = (mode == CostMode::Full) ? 4 * M * *out_area : 0;
            break;
        }
        case OpKind::Bn: {
            kernel_params = 0;
            if (out_area) macs = (mode == CostMode::Full) ? M * *out_area : 0;
            break;
        }
        case OpKind::Relu:
        case OpKind::Concat:
        case OpKind::Add:
        case OpKind::PixelShuffle: {
            kernel_params = 0;
            if (out_area) macs = 0;
            break;
        }
    }

    if (node.kind == OpKind::List) {
        const auto& c = std::get<ListNodeCfg>(node.cfg);
        e.ratio = 9.0 * static_cast<double>(c.out_channels) * static_cast<double>(c.compression) /
                  static_cast<double>(M + c.out_channels + 9);
    }

    e.formula_params = kernel_params;
    if (mode == CostMode::Paper && e.params != kernel_params)
        throw Error("node '" + node.id + "': enumerated params " + std::to_string(e.params) +
                    " disagree with closed form " + std::to_string(kernel_params));
    e.flops = macs;
    return e;
}

CostReport analyze(const NetworkSpec& net, std::optional<int64_t> height,
                   std::optional<int64_t> width, CostMode mode) {
    CostReport report;
    report.network = net.name;
    report.mode = mode;
    report.height = height ? height : net.input.height;
    report.width = width ? width : net.input.width;

    const std::vector<ChwShape> shapes = propagate_shapes(net, height, width);
    std::unordered_map<std::string, ChwShape> by_id;
    by_id["input"] = ChwShape{net.input.channels, report.height, report.width};
    for (size_t i = 0; i < net.nodes.size(); ++i) by_id[net.nodes[i].id] = shapes[i];

    std::unordered_map<std::string, std::vector<NodeWeight>> weights_by_node;
    for (NodeWeight& w : weight_requirements(net)) weights_by_node[w.node_id].push_back(w);

    bool all_flops = true;
    for (size_t i = 0; i < net.nodes.size(); ++i) {
        const NodeSpec& n = net.nodes[i];
        std::vector<ChwShape> ins;
        ins.reserve(n.inputs.size());
        for (const std::string& ref : n.inputs) ins.push_back(by_id.at(ref));
        static const std::vector<NodeWeight> none;
        auto it = weights_by_node.find(n.id);
        CostEntry e = count_node(n, ins, shapes[i], it == weights_by_node.end() ? none : it->second,
                                 mode);
        report.totals.params += e.params;
        if (e.flops && all_flops) {
            if (!report.totals.flops) report.totals.flops = 0;
            *report.totals.flops += *e.flops;
        } else {
            all_flops = false;
            report.totals.flops.reset();
        }
        report.entries.push_back(std::move(e));
    }
    if (net.nodes.empty()) report.totals.flops = 0;
    return report;
}

RatioReport ratio_report(int64_t m, int64_t n, int64_t k, int64_t n_b, int64_t g, int64_t k_size,
                         int64_t c_l) {
    (void)n_b;  // parameter totals are independent of the branch split
    RatioReport r;
    const double M = static_cast<double>(m), N = static_cast<double>(n), K = static_cast<double>(k);
    r.list_exact = 9.0 * N * K / (M + N + 9.0);
    r.list_approx = 9.0 * N * K / (M + N);
    r.list_lower_bound = 9.0 * N / (M + N);
    r.sep_vs_list_exact = K * (N + 9.0) / (M + N + 9.0);
    r.sep_vs_list_approx = N * K / (M + N);
    r.k_threshold = M / N + 1.0;
    r.gsat = 9.0 * static_cast<double>(g) / 10.0;
    const double kk = static_cast<double>(k_size) * static_cast<double>(k_size);
    r.subpixel_separable = 4.0 * (1.0 / kk + 1.0 / static_cast<double>(c_l));
    return r;
}

namespace {

std::string fmt_flops(const std::optional<int64_t>& f) {
    if (!f) return "-";
    return std::to_string(*f);
}

std::string mode_name(CostMode m) { return m == CostMode::Paper ? "paper" : "full"; }

json report_json(const CostReport& r) {
    json doc;
    doc["network"] = r.network;
    doc["mode"] = mode_name(r.mode);
    doc["resolution"]["height"] = r.height ? json(*r.height) : json(nullptr);
    doc["resolution"]["width"] = r.width ? json(*r.width) : json(nullptr);
    doc["nodes"] = json::array();
    for (const CostEntry& e : r.entries) {
        json jn;
        jn["id"] = e.id;
        jn["op"] = e.op;
        jn["params"] = e.params;
        jn["formula_params"] = e.formula_params;
        jn["flops"] = e.flops ? json(*e.flops) : json(nullptr);
        jn["out_channels"] = e.out.c;
        if (e.out.h) jn["out_height"] = *e.out.h;
        if (e.out.w) jn["out_width"] = *e.out.w;
        if (e.ratio) jn["dense_ratio"] = *e.ratio;
        doc["nodes"].push_back(std::move(jn));
    }
    doc["totals"]["params"] = r.totals.params;
    doc["totals"]["params_millions"] = static_cast<double>(r.totals.params) / 1e6;
    // 4-bytes-per-weight estimate; serialized checkpoints may differ
    doc["totals"]["memory_mb_estimate"] = static_cast<double>(r.totals.params) * 4.0 / 1e6;
    if (r.totals.flops) {
        doc["totals"]["flops"] = *r.totals.flops;
        doc["totals"]["flops_giga"] = static_cast<double>(*r.totals.flops) / 1e9;
        // same totals with multiply and add counted separately
        doc["totals"]["flops_mul_add"] = 2 * *r.totals.flops;
        doc["totals"]["flops_mul_add_giga"] = static_cast<double>(2 * *r.totals.flops) / 1e9;
    } else {
        doc["totals"]["flops"] = nullptr;
    }
    return doc;
}

}  // namespace

std::string report_text(const CostReport& r) {
    std::ostringstream os;
    os << "network: " << r.network << "  (mode: " << mode_name(r.mode) << ")\n";
    if (r.height && r.width) os << "resolution: " << *r.height << "x" << *r.width << "\n";
    else os << "resolution: unresolved (params only)\n";
    os << "\n";
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-14s %-20s %14s %16s  %s\n", "node", "op", "params", "flops",
                  "out");
    os << buf;
    for (const CostEntry& e : r.entries) {
        std::string out = std::to_string(e.out.c);
        if (e.out.h && e.out.w)
            out += "x" + std::to_string(*e.out.h) + "x" + std::to_string(*e.out.w);
        std::snprintf(buf, sizeof(buf), "%-14s %-20s %14lld %16s  %s\n", e.id.c_str(),
                      e.op.c_str(), static_cast<long long>(e.params), fmt_flops(e.flops).c_str(),
                      out.c_str());
        os << buf;
    }
    os << "\n";
    std::snprintf(buf, sizeof(buf), "total params: %lld  (%.4f M, ~%.2f MB at 4 B/weight)\n",
                  static_cast<long long>(r.totals.params),
                  static_cast<double>(r.totals.params) / 1e6,
                  static_cast<double>(r.totals.params) * 4.0 / 1e6);
    os << buf;
    if (r.totals.flops) {
        std::snprintf(buf, sizeof(buf),
                      "total flops:  %lld MAC  (%.4f G; %.4f G counting mul+add separately)\n",
                      static_cast<long long>(*r.totals.flops),
                      static_cast<double>(*r.totals.flops) / 1e9,
                      static_cast<double>(2 * *r.totals.flops) / 1e9);
        os << buf;
    }
    return os.str();
}

std::string report_csv(const CostReport& r) {
    std::ostringstream os;
    os << "node,op,params,flops\n";
    for (const CostEntry& e : r.entries)
        os << e.id << "," << e.op << "," << e.params << "," << fmt_flops(e.flops) << "\n";
    os << "total,," << r.totals.params << "," << fmt_flops(r.totals.flops) << "\n";
    return os.str();
}

std::string report_json_text(const CostReport& r) { return report_json(r).dump(2) + "\n"; }

CostComparison compare_reports(CostReport base, CostReport other) {
    CostComparison c;
    c.params_saving_pct = 100.0 * (1.0 - static_cast<double>(other.totals.params) /
                                             static_cast<double>(base.totals.params));
    if (base.totals.flops && other.totals.flops && *base.totals.flops > 0)
        c.flops_saving_pct = 100.0 * (1.0 - static_cast<double>(*other.totals.flops) /
                                                static_cast<double>(*base.totals.flops));
    c.base = std::move(base);
    c.other = std::move(other);
    return c;
}

std::string comparison_text(const CostComparison& c) {
    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-24s %14s %16s\n", "network", "params", "flops");
    os << buf;
    for (const CostReport* r : {&c.base, &c.other}) {
        std::snprintf(buf, sizeof(buf), "%-24s %14lld %16s\n", r->network.c_str(),
                      static_cast<long long>(r->totals.params),
                      fmt_flops(r->totals.flops).c_str());
        os << buf;
    }
    std::snprintf(buf, sizeof(buf), "relative savings: params %.1f%%", c.params_saving_pct);
    os << buf;
    if (c.flops_saving_pct) {
        std::snprintf(buf, sizeof(buf), ", flops %.1f%%", *c.flops_saving_pct);
        os << buf;
    }
    os << "\n";
    return os.str();
}

std::string comparison_json_text(const CostComparison& c) {
    json doc;
    doc["base"] = report_json(c.base)["totals"];
    doc["base"]["network"] = c.base.network;
    doc["other"] = report_json(c.other)["totals"];
    doc["other"]["network"] = c.other.network;
    doc["savings"]["params_pct"] = c.params_saving_pct;
    if (c.flops_saving_pct) doc["savings"]["flops_pct"] = *c.flops_saving_pct;
    return doc.dump(2) + "\n";
}

}  // namespace lwir

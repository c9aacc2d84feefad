#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lwir/graph.hpp"

namespace lwir {

// Paper mode counts convolution kernels and their multiply-accumulates only.
// Full mode adds bias and BN affine parameters, BN arithmetic, and bilinear
// interpolation arithmetic (4 MACs per output element per channel).
enum class CostMode { Paper, Full };

// One FLOP = one multiply-accumulate throughout.
struct CostEntry {
    std::string id;
    std::string op;
    int64_t params = 0;          // enumerated from the node's weight shapes
    int64_t formula_params = 0;  // closed form where one exists, else == params
    std::optional<int64_t> flops;
    ChwShape out;
    std::optional<double> ratio;  // diagnostic vs the dense counterpart
};

struct CostTotals {
    int64_t params = 0;
    std::optional<int64_t> flops;
};

struct CostReport {
    std::string network;
    CostMode mode = CostMode::Paper;
    std::optional<int64_t> height;
    std::optional<int64_t> width;
    std::vector<CostEntry> entries;
    CostTotals totals;
};

CostEntry count_node(const NodeSpec& node, const std::vector<ChwShape>& in_shapes,
                     const ChwShape& out_shape, const std::vector<NodeWeight>& node_weights,
                     CostMode mode);

CostReport analyze(const NetworkSpec& net, std::optional<int64_t> height = std::nullopt,
                   std::optional<int64_t> width = std::nullopt, CostMode mode = CostMode::Paper);

// Closed-form savings diagnostics.
struct RatioReport {
    double list_exact = 0;           // 9Nk / (M + N + 9)
    double list_approx = 0;          // 9Nk / (M + N)
    double list_lower_bound = 0;     // 9N / (M + N)
    double sep_vs_list_exact = 0;    // k(N + 9) / (M + N + 9)
    double sep_vs_list_approx = 0;   // Nk / (M + N)
    double k_threshold = 0;          // LIST beats separable when k exceeds M/N + 1
    double gsat = 0;                 // 9g / 10
    double subpixel_separable = 0;   // 4 (1/k_size^2 + 1/c_l)
};

RatioReport ratio_report(int64_t m, int64_t n, int64_t k, int64_t n_b, int64_t g, int64_t k_size,
                         int64_t c_l);

std::string report_text(const CostReport& r);
std::string report_csv(const CostReport& r);
std::string report_json_text(const CostReport& r);

struct CostComparison {
    CostReport base;
    CostReport other;
    double params_saving_pct = 0;
    std::optional<double> flops_saving_pct;
};

CostComparison compare_reports(CostReport base, CostReport other);
std::string comparison_text(const CostComparison& c);
std::string comparison_json_text(const CostComparison& c);

}  // namespace lwir

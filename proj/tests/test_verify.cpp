#include <doctest.h>

#include <algorithm>
#include <set>

#include "lwir/verify.hpp"
#include "lwir/tensor.hpp"

using namespace lwir;

TEST_CASE("the full check suite passes with the default seed") {
    const auto results = run_checks("all", 0);
    for (const CheckResult& r : results) {
        INFO(r.name, ": ", r.detail);
        CHECK(r.pass);
    }
    CHECK(all_passed(results));
}

TEST_CASE("check runs are deterministic given the seed") {
    const std::string a = checks_json_text(run_checks("equiv", 42));
    const std::string b = checks_json_text(run_checks("equiv", 42));
    CHECK(a == b);
}

TEST_CASE("unknown suite names are rejected") {
    CHECK_THROWS_AS(run_checks("everything", 0), Error);
}

TEST_CASE("every module invariant has exactly one owning check") {
    // name audit: adding or renaming checks must be a deliberate act
    const std::set<std::string> expected = {
        "conv.grouped_equals_dense",
        "conv.separable_composition",
        "shuffle.bijection",
        "pixelshuffle.roundtrip",
        "bilinear.constant_monotone",
        "ops.deterministic",
        "transposed.stride1_equals_conv",
        "blocks.output_channels",
        "subpixel.lr_hr_flops_equal",
        "cost.closed_forms_exact",
        "list.params_flops_formula",
        "gsat.params_formula_ratio",
        "subpixel.separable_ratio",
        "ratio.exact_above_lower_bound",
        "ratio.list_cheaper_than_separable",
        "ratio.reference_values",
        "cost.resolution_linear",
        "subpixel.transposed_equivalence",
        "gsat.ungrouped_composition",
        "downsample.params_match_list",
    };
    std::multiset<std::string> got;
    for (const CheckResult& r : run_checks("all", 0)) got.insert(r.name);
    CHECK(std::set<std::string>(got.begin(), got.end()) == expected);
    CHECK(got.size() == expected.size());  // no duplicate owners
}

TEST_CASE("suites partition the checks") {
    const size_t all = run_checks("all", 0).size();
    const size_t ops = run_checks("ops", 0).size();
    const size_t cost = run_checks("cost", 0).size();
    const size_t equiv = run_checks("equiv", 0).size();
    CHECK(ops > 0);
    CHECK(cost > 0);
    CHECK(equiv > 0);
    CHECK(ops + cost + equiv == all);
}

TEST_CASE("results document uses the check/status/detail schema") {
    const std::string doc = checks_json_text(run_checks("equiv", 1));
    CHECK(doc.find("\"check\"") != std::string::npos);
    CHECK(doc.find("\"status\"") != std::string::npos);
    CHECK(doc.find("\"detail\"") != std::string::npos);
    CHECK(doc.find("\"pass\"") != std::string::npos);
}

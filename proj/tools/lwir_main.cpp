#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "lwir/cost.hpp"
#include "lwir/graph.hpp"
#include "lwir/ops.hpp"
#include "lwir/ppm.hpp"
#include "lwir/verify.hpp"
#include "lwir/weights.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;
constexpr int kExitVerifyFailed = 3;

std::pair<int64_t, int64_t> parse_size(const std::string& s) {
    const size_t x = s.find('x');
    if (x == std::string::npos) throw lwir::Error("--input-size must look like 256x256");
    try {
        return {std::stoll(s.substr(0, x)), std::stoll(s.substr(x + 1))};
    } catch (const std::exception&) {
        throw lwir::Error("--input-size must look like 256x256");
    }
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream os(out_path);
    if (!os) throw lwir::Error("cannot open '" + out_path + "' for writing");
    os << text;
}

int run_analyze(const std::string& net_path, const std::string& size, const std::string& mode,
                const std::string& format, const std::string& compare_path,
                const std::string& out_path) {
    std::optional<int64_t> h, w;
    if (!size.empty()) {
        auto [hh, ww] = parse_size(size);
        h = hh;
        w = ww;
    }
    const lwir::CostMode m = mode == "full" ? lwir::CostMode::Full : lwir::CostMode::Paper;
    lwir::NetworkSpec net = lwir::load_network(net_path);
    lwir::CostReport report = lwir::analyze(net, h, w, m);

    if (!compare_path.empty()) {
        lwir::NetworkSpec other = lwir::load_network(compare_path);
        lwir::CostComparison cmp =
            lwir::compare_reports(std::move(report), lwir::analyze(other, h, w, m));
        emit(format == "json" ? lwir::comparison_json_text(cmp) : lwir::comparison_text(cmp),
             out_path);
        return 0;
    }
    if (format == "json") emit(lwir::report_json_text(report), out_path);
    else if (format == "csv") emit(lwir::report_csv(report), out_path);
    else emit(lwir::report_text(report), out_path);
    return 0;
}

int run_verify(const std::string& suite, uint64_t seed, const std::string& json_path) {
    const std::vector<lwir::CheckResult> results = lwir::run_checks(suite, seed);
    const std::string doc = lwir::checks_json_text(results);
    if (json_path.empty()) std::cout << doc;
    else {
        std::ofstream os(json_path);
        if (!os) throw lwir::Error("cannot open '" + json_path + "' for writing");
        os << doc;
    }
    size_t passed = 0;
    for (const auto& r : results) passed += r.pass ? 1 : 0;
    std::cout << "suite '" << suite << "': " << passed << "/" << results.size()
              << " checks passed\n";
    return lwir::all_passed(results) ? 0 : kExitVerifyFailed;
}

struct BenchStats {
    double median_s = 0;
    double min_s = 0;
    int runs = 0;
};

BenchStats bench_network(const std::string& path, int64_t h, int64_t w, int repeat, int warmup,
                         uint64_t seed) {
    lwir::NetworkSpec net = lwir::load_network(path);
    lwir::WeightStore store = lwir::seed_weights(net, seed);
    lwir::Tensor x(lwir::Shape4{1, net.input.channels, h, w});
    lwir::SplitMix64 rng{seed ^ 0x9e3779b9ull};
    for (float& v : x.data) v = static_cast<float>(lwir::u64_to_unit(rng.next()));

    for (int i = 0; i < warmup; ++i) (void)lwir::forward(net, store, x);
    std::vector<double> times;
    times.reserve(static_cast<size_t>(repeat));
    for (int i = 0; i < repeat; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        lwir::Tensor y = lwir::forward(net, store, x);
        const auto t1 = std::chrono::steady_clock::now();
        (void)y;
        times.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    std::vector<double> sorted = times;
    std::sort(sorted.begin(), sorted.end());
    BenchStats st;
    st.runs = repeat;
    st.min_s = sorted.front();
    st.median_s = sorted[sorted.size() / 2];
    return st;
}

int run_bench(const std::vector<std::string>& nets, const std::string& size, int repeat,
              int warmup, uint64_t seed) {
    auto [h, w] = parse_size(size);
    std::vector<BenchStats> stats;
    for (const std::string& p : nets) {
        BenchStats st = bench_network(p, h, w, repeat, warmup, seed);
        stats.push_back(st);
        std::cout << p << " @ " << h << "x" << w << ": ";
        if (repeat == 1) {
            std::cout << "time " << st.median_s << " s (single run)\n";
        } else {
            std::cout << "median " << st.median_s << " s, min " << st.min_s << " s over "
                      << st.runs << " runs\n";
        }
    }
    if (stats.size() == 2) {
        std::cout << "speedup (first/second medians): " << stats[0].median_s / stats[1].median_s
                  << "x\n";
    }
    return 0;
}

int run_infer(const std::string& net_path, const std::string& image_path,
              const std::string& weights_path, std::optional<uint64_t> seed,
              const std::string& out_path) {
    lwir::NetworkSpec net = lwir::load_network(net_path);
    lwir::WeightStore store;
    if (!weights_path.empty()) {
        store = lwir::load_weights(weights_path);
        lwir::validate_weights(net, store);
    } else {
        store = lwir::seed_weights(net, *seed);
    }
    lwir::Tensor img = lwir::read_ppm(image_path);
    lwir::Tensor out = lwir::forward(net, store, img);
    lwir::write_ppm(out_path, out);
    std::cout << "wrote " << out_path << " (" << out.shape.c << "x" << out.shape.h << "x"
              << out.shape.w << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    if (const char* env = std::getenv("LWIR_THREADS")) {
        const int cap = std::atoi(env);
        if (cap < 1) {
            std::cerr << "LWIR_THREADS must be an integer >= 1\n";
            return kExitUsage;
        }
        lwir::set_thread_cap(cap);
    }

    CLI::App app{"CPU inference and cost analysis for lightweight restoration networks"};
    app.require_subcommand(1);

    // analyze
    auto* analyze = app.add_subcommand("analyze", "parameter and FLOP report for a network file");
    std::string a_net, a_size, a_mode = "paper", a_format = "text", a_compare, a_out;
    analyze->add_option("network", a_net, "network .json file")->required();
    analyze->add_option("--input-size", a_size, "resolution HxW, e.g. 256x256");
    analyze->add_option("--mode", a_mode)->check(CLI::IsMember({"paper", "full"}));
    analyze->add_option("--format", a_format)->check(CLI::IsMember({"text", "json", "csv"}));
    analyze->add_option("--compare", a_compare, "second network for side-by-side totals");
    analyze->add_option("--out", a_out, "write the report here instead of stdout");

    // verify
    auto* verify = app.add_subcommand("verify", "run the property and equivalence checks");
    std::string v_suite = "all", v_json;
    uint64_t v_seed = 0;
    verify->add_option("--suite", v_suite)->check(CLI::IsMember({"all", "ops", "cost", "equiv"}));
    verify->add_option("--seed", v_seed);
    verify->add_option("--json", v_json, "write the results document here");

    // bench
    auto* bench = app.add_subcommand("bench", "time seeded forward passes");
    std::vector<std::string> b_nets;
    std::string b_size;
    int b_repeat = 5, b_warmup = 1;
    uint64_t b_seed = 0;
    bench->add_option("network", b_nets, "one or two network .json files")
        ->required()
        ->expected(1, 2);
    bench->add_option("--input-size", b_size)->required();
    bench->add_option("--repeat", b_repeat)->check(CLI::PositiveNumber);
    bench->add_option("--warmup", b_warmup)->check(CLI::NonNegativeNumber);
    bench->add_option("--seed", b_seed);

    // infer
    auto* infer = app.add_subcommand("infer", "forward pass over a PGM/PPM image");
    std::string i_net, i_image, i_weights, i_out;
    std::optional<uint64_t> i_seed;
    infer->add_option("network", i_net)->required();
    infer->add_option("--image", i_image)->required();
    infer->add_option("--weights", i_weights, "binary weight file");
    infer->add_option("--seed", i_seed, "seed for deterministic weights");
    infer->add_option("--out", i_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (analyze->parsed())
            return run_analyze(a_net, a_size, a_mode, a_format, a_compare, a_out);
        if (verify->parsed()) return run_verify(v_suite, v_seed, v_json);
        if (bench->parsed()) return run_bench(b_nets, b_size, b_repeat, b_warmup, b_seed);
        if (infer->parsed()) {
            if (i_weights.empty() && !i_seed.has_value()) {
                std::cerr << "infer: give either --weights or --seed\n";
                return kExitUsage;
            }
            if (!i_weights.empty() && i_seed.has_value()) {
                std::cerr << "infer: --weights and --seed are mutually exclusive\n";
                return kExitUsage;
            }
            return run_infer(i_net, i_image, i_weights, i_seed, i_out);
        }
    } catch (const lwir::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitUsage;
}

// pce -- compile firewall rules to rules-memory images, classify packets on
// the cycle-accurate engine, differential-test against the linear oracle, and
// benchmark.
//
// Exit codes: 0 ok, 1 differential mismatch, 2 invalid input, 3 runtime fault.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "pce/compiler.hpp"
#include "pce/engine.hpp"
#include "pce/oracle.hpp"

using namespace pce;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDiff = 1;
constexpr int kExitInvalidInput = 2;
constexpr int kExitRuntimeFault = 3;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int cmd_compile(const std::string& rules_path, const std::string& out_path, bool print_asm) {
    RuleSet rs = parse_rules(read_file(rules_path));
    MemoryImage img = compile(rs);

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    write_image(img, out);

    std::printf("%zu words / %zu\n", img.words.size(), kRulesMemoryWords);
    if (print_asm) std::fputs(disassemble(img).c_str(), stdout);
    return kExitOk;
}

struct RunStats {
    size_t packets = 0;
    size_t permitted = 0;
    size_t denied = 0;
    size_t non_classifiable = 0;
    uint32_t cycles_min = 0;
    uint32_t cycles_max = 0;
    uint64_t cycles_total = 0;
    size_t classified = 0;

    void add_cycles(uint32_t c) {
        if (classified == 0) {
            cycles_min = cycles_max = c;
        } else {
            cycles_min = std::min(cycles_min, c);
            cycles_max = std::max(cycles_max, c);
        }
        cycles_total += c;
        ++classified;
    }

    double avg() const { return classified ? double(cycles_total) / double(classified) : 0.0; }
};

void print_stats_text(const RunStats& s) {
    std::printf("packets %zu\n", s.packets);
    std::printf("permitted %zu\n", s.permitted);
    std::printf("denied %zu\n", s.denied);
    std::printf("non-classifiable %zu\n", s.non_classifiable);
    if (s.classified)
        std::printf("cycles min %u avg %.2f max %u\n", s.cycles_min, s.avg(), s.cycles_max);
    else
        std::printf("cycles min - avg - max -\n");
}

void print_stats_json(const RunStats& s, double wall_seconds) {
    std::printf("{\"packets\":%zu,\"permitted\":%zu,\"denied\":%zu,\"non_classifiable\":%zu,",
                s.packets, s.permitted, s.denied, s.non_classifiable);
    if (s.classified)
        std::printf("\"cycles\":{\"min\":%u,\"avg\":%.2f,\"max\":%u},", s.cycles_min, s.avg(),
                    s.cycles_max);
    else
        std::printf("\"cycles\":null,");
    std::printf("\"wall_seconds\":%.6f}\n", wall_seconds);
}

int cmd_run(const std::string& image_path, const std::string& csv_path,
            const std::string& pcap_path, bool trace, bool lenient, bool pass_nonip, bool force,
            bool stats_json) {
    std::ifstream image_in(image_path, std::ios::binary);
    if (!image_in) throw std::runtime_error("cannot open " + image_path);
    MemoryImage img = read_image(image_in);

    std::vector<Diagnostic> diags = validate_image(img);
    if (!diags.empty()) {
        for (const Diagnostic& d : diags) std::fprintf(stderr, "image: %s\n", d.message.c_str());
        if (!force) {
            std::fprintf(stderr, "refusing to run (use --force to override)\n");
            return kExitInvalidInput;
        }
    }

    std::vector<IngestRecord> records;
    if (!csv_path.empty())
        records = parse_csv(read_file(csv_path), lenient ? CsvMode::Lenient : CsvMode::Strict);
    else
        records = read_pcap_file(pcap_path);

    auto start = std::chrono::steady_clock::now();
    Engine engine(img);
    RunStats stats;
    for (size_t i = 0; i < records.size(); ++i) {
        const IngestRecord& rec = records[i];
        ++stats.packets;
        if (!rec.classifiable()) {
            ++stats.non_classifiable;
            std::printf("%zu non-classifiable(%s) %s -\n", i + 1, rec.reason.c_str(),
                        pass_nonip ? "PERMIT" : "DENY");
            continue;
        }
        Verdict v;
        try {
            v = engine.classify(*rec.header, trace);
        } catch (const ExecutionFault& e) {
            std::fprintf(stderr, "packet %zu: %s\n", i + 1, e.what());
            return kExitRuntimeFault;
        }
        if (v.permit)
            ++stats.permitted;
        else
            ++stats.denied;
        stats.add_cycles(v.cycles);
        std::printf("%zu %s %s %u\n", i + 1, format_5tuple(*rec.header).c_str(),
                    v.permit ? "PERMIT" : "DENY", v.cycles);
        if (trace)
            for (const TraceEntry& t : v.trace)
                std::printf("  %s\n", format_trace_entry(t).c_str());
    }
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (stats_json)
        print_stats_json(stats, wall);
    else
        print_stats_text(stats);
    return kExitOk;
}

int cmd_diff(const std::string& rules_path, uint32_t seeds, size_t headers_per_seed,
             const std::string& report_path) {
    RuleSet rs = parse_rules(read_file(rules_path));
    MemoryImage img = compile(rs);

    std::vector<PacketHeader> boundary = gen_boundary_headers(rs);
    size_t checked = 0;
    std::vector<Mismatch> mismatches;
    for (uint32_t seed = 1; seed <= seeds; ++seed) {
        std::vector<PacketHeader> headers = gen_random_headers(rs, seed, headers_per_seed);
        headers.insert(headers.end(), boundary.begin(), boundary.end());
        DiffReport report = differential_run_image(rs, img, headers);
        checked += report.headers_checked;
        mismatches.insert(mismatches.end(), report.mismatches.begin(), report.mismatches.end());
    }

    std::printf("checked %zu headers across %u seeds: %zu mismatches\n", checked, seeds,
                mismatches.size());
    if (mismatches.empty()) return kExitOk;

    std::ofstream report(report_path, std::ios::binary);
    for (const Mismatch& m : mismatches) report << mismatch_json(m) << '\n';
    std::printf("report: %s\n", report_path.c_str());
    return kExitDiff;
}

int cmd_bench(const std::string& image_path, size_t packets, uint32_t seed) {
    std::ifstream image_in(image_path, std::ios::binary);
    if (!image_in) throw std::runtime_error("cannot open " + image_path);
    MemoryImage img = read_image(image_in);

    std::vector<PacketHeader> headers = gen_random_headers(RuleSet{}, seed, packets);
    Engine engine(img);

    std::map<uint32_t, size_t> histogram;
    auto start = std::chrono::steady_clock::now();
    for (const PacketHeader& h : headers) ++histogram[engine.classify(h).cycles];
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::printf("note: software benchmark; hardware clock frequency not modeled and not\n");
    std::printf("comparable to FPGA synthesis figures.\n");
    std::printf("packets %zu in %.3fs (%.0f classifications/s)\n", packets, wall,
                wall > 0 ? double(packets) / wall : 0.0);
    std::printf("cycles histogram:\n");
    for (const auto& [cycles, count] : histogram)
        std::printf("  %3u: %zu\n", cycles, count);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"packet classification engine toolkit"};
    app.require_subcommand(1);

    std::string rules_path, image_path, out_path, csv_path, pcap_path;
    std::string report_path = "pce-diff-report.jsonl";
    bool print_asm = false, trace = false, lenient = false, pass_nonip = false, force = false,
         stats_json = false;
    uint32_t seeds = 20, bench_seed = 1;
    size_t headers_per_seed = 200, bench_packets = 100000;

    CLI::App* compile_cmd = app.add_subcommand("compile", "compile rules to a memory image");
    compile_cmd->add_option("rules", rules_path, "rules file")->required();
    compile_cmd->add_option("-o,--output", out_path, "image output path")->required();
    compile_cmd->add_flag("--print-asm", print_asm, "dump a readable disassembly");

    CLI::App* run_cmd = app.add_subcommand("run", "classify packets against an image");
    run_cmd->add_option("image", image_path, "memory image")->required();
    CLI::Option* csv_opt = run_cmd->add_option("--csv", csv_path, "packets as CSV");
    CLI::Option* pcap_opt = run_cmd->add_option("--pcap", pcap_path, "packets as classic pcap");
    csv_opt->excludes(pcap_opt);
    run_cmd->add_flag("--trace", trace, "print per-cycle engine trace");
    run_cmd->add_flag("--lenient", lenient, "bad CSV lines become non-classifiable");
    run_cmd->add_flag("--pass-nonip", pass_nonip, "permit non-classifiable records");
    run_cmd->add_flag("--force", force, "run despite validation diagnostics");
    run_cmd->add_flag("--stats-json", stats_json, "emit stats as JSON (includes wall time)");

    CLI::App* diff_cmd = app.add_subcommand("diff", "differential-test engine vs linear oracle");
    diff_cmd->add_option("rules", rules_path, "rules file")->required();
    diff_cmd->add_option("--seeds", seeds, "number of header seeds");
    diff_cmd->add_option("--headers", headers_per_seed, "random headers per seed");
    diff_cmd->add_option("--report", report_path, "mismatch report path (JSON lines)");

    CLI::App* bench_cmd = app.add_subcommand("bench", "software throughput on synthetic traffic");
    bench_cmd->add_option("image", image_path, "memory image")->required();
    bench_cmd->add_option("--packets", bench_packets, "synthetic packet count");
    bench_cmd->add_option("--seed", bench_seed, "traffic seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitInvalidInput;
    }

    try {
        if (compile_cmd->parsed()) return cmd_compile(rules_path, out_path, print_asm);
        if (run_cmd->parsed()) {
            if (csv_path.empty() && pcap_path.empty()) {
                std::fprintf(stderr, "run: need --csv or --pcap\n");
                return kExitInvalidInput;
            }
            return cmd_run(image_path, csv_path, pcap_path, trace, lenient, pass_nonip, force,
                           stats_json);
        }
        if (diff_cmd->parsed()) return cmd_diff(rules_path, seeds, headers_per_seed, report_path);
        if (bench_cmd->parsed()) return cmd_bench(image_path, bench_packets, bench_seed);
    } catch (const ExecutionFault& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kExitRuntimeFault;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInvalidInput;
    }
    return kExitOk;
}

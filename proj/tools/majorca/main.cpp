// majorca: catalog, chain, verify, bench and metric subcommands.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "majorca/catalog.hpp"
#include "majorca/emit.hpp"
#include "majorca/error.hpp"
#include "majorca/goal.hpp"
#include "majorca/ingest.hpp"
#include "majorca/pipeline.hpp"
#include "majorca/verify.hpp"

namespace {

using namespace majorca;

constexpr int kNoChain = 100;
constexpr int kTimeout = 101;

struct Common {
    std::string arch;
    std::string base = "0";
    bool raw = false;
    std::string bad_chars;
    std::int64_t frame_limit = 1000;
    std::uint64_t seed = 1;
    std::string address_screen = "full";
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Word parse_word(const std::string& text) {
    try {
        std::size_t used = 0;
        Word v = std::stoull(text, &used, 0);
        if (used != text.size()) throw Error("");
        return v;
    } catch (...) {
        throw Error("bad number '" + text + "'");
    }
}

AddressScreen screen_mode(const std::string& s) {
    if (s == "full") return AddressScreen::full;
    if (s == "significant") return AddressScreen::significant;
    throw Error("--address-screen must be 'full' or 'significant'");
}

CatalogOptions catalog_options(const Common& c) {
    CatalogOptions o;
    o.classify.seed = c.seed;
    o.filter.bad = BadBytes::parse(c.bad_chars);
    o.filter.frame_limit = c.frame_limit;
    o.filter.address_screen = screen_mode(c.address_screen);
    return o;
}

/// A saved catalog, a corpus file or (with --raw) a flat x86 image.
Catalog load_input(const std::string& path, const Common& c) {
    std::string text = slurp(path);
    if (text.starts_with("majorca-catalog")) {
        std::istringstream is(text);
        return read_catalog(is);
    }
    Corpus corpus;
    if (c.raw) {
        if (c.arch.empty()) throw Error("--raw needs --arch");
        corpus.profile = make_arch_profile(parse_arch(c.arch));
        corpus.base = parse_word(c.base);
        std::vector<std::uint8_t> image(text.begin(), text.end());
        corpus.gadgets = scan_binary(corpus.profile, image, corpus.base);
    } else {
        corpus = parse_corpus(text);
        if (!c.arch.empty() && parse_arch(c.arch) != corpus.profile.id)
            throw Error("--arch " + c.arch + " does not match the corpus");
    }
    return build_catalog(corpus, catalog_options(c));
}

void add_common(CLI::App* cmd, Common& c, bool catalog_flags) {
    cmd->add_option("--bad-chars", c.bad_chars, "Restricted bytes, hex (\"00 2f\", \"0x00,0x2f\" or \"002f\")");
    cmd->add_option("--seed", c.seed, "Seed for classification runs and emulation")->default_val(1);
    cmd->add_option("--address-screen", c.address_screen,
                    "Gadget address screening: full (every emitted byte) or significant")
        ->default_val("full");
    if (!catalog_flags) return;
    cmd->add_option("--arch", c.arch, "x86_64, x86_32 or mips32be (required with --raw)");
    cmd->add_option("--base", c.base, "Load address of a raw image")->default_val("0");
    cmd->add_flag("--raw", c.raw, "Input is a flat x86 code image to scan");
    cmd->add_option("--frame-limit", c.frame_limit, "Drop gadgets with larger frames")->default_val(1000);
}

void write_file(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << data;
}

int cmd_catalog(const std::string& input, const Common& c, const std::string& out) {
    Catalog cat = load_input(input, c);
    std::cerr << "gadgets " << cat.stats.gadgets << "\nclassified " << cat.stats.classified << "\nderived "
              << cat.stats.derived << "\njop " << cat.stats.jop << "\nkept " << cat.stats.kept << "\n";
    if (out.empty()) {
        write_catalog(std::cout, cat);
    } else {
        std::ofstream os(out);
        if (!os) throw Error("cannot write " + out);
        write_catalog(os, cat);
    }
    return 0;
}

int cmd_chain(const std::string& input, const std::string& goal_text, const Common& c, double timeout,
              const std::string& data_addr, const std::string& out, bool as_script) {
    Goal goal = parse_goal(goal_text);
    Catalog cat = load_input(input, c);
    ChainOptions o;
    o.bad = BadBytes::parse(c.bad_chars);
    o.address_screen = screen_mode(c.address_screen);
    o.timeout_s = timeout;
    o.verify.seed = c.seed;
    if (!data_addr.empty()) o.data_addr = parse_word(data_addr);
    ChainResult r = build_chain(cat, goal, o);
    if (r.status == ChainStatus::timeout) {
        std::cerr << "majorca: timeout: " << r.detail << "\n";
        return kTimeout;
    }
    if (r.status == ChainStatus::no_chain) {
        std::cerr << "majorca: no chain: " << r.detail << "\n";
        return kNoChain;
    }
    auto bytes = r.payload->serialize();
    std::string script = render_script(*r.payload);
    if (!out.empty()) {
        write_file(out, std::string(bytes.begin(), bytes.end()));
        write_file(out + ".script", script);
        std::cerr << "wrote " << out << " (" << bytes.size() << " bytes) and " << out << ".script\n";
    } else if (as_script) {
        std::cout << script;
    } else {
        std::cout.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
    return 0;
}

int cmd_verify(const std::string& input, const std::string& payload_path, const std::string& goal_text,
               const Common& c, unsigned repeats) {
    Goal goal = parse_goal(goal_text);
    Catalog cat = load_input(input, c);
    std::string data = slurp(payload_path);
    std::vector<std::uint8_t> bytes(data.begin(), data.end());
    VerifyOptions vo;
    vo.seed = c.seed;
    vo.repeats = repeats;
    auto r = verify_payload(cat.profile, cat.gadgets, bytes, goal, vo, cat.functions);
    std::cout << to_string(r.verdict);
    if (!r.detail.empty()) std::cout << " " << r.detail;
    std::cout << "\n";
    return r.verdict == Verdict::ok ? 0 : 2;
}

int cmd_bench(const std::string& suite, const Common& c, double timeout, unsigned repeats, unsigned threads,
              const std::string& out) {
    std::filesystem::path dir(suite);
    auto targets = read_goals(std::filesystem::is_directory(dir) ? dir / "goals.txt" : dir);
    BenchOptions o;
    o.catalog = catalog_options(c);
    o.chain.bad = o.catalog.filter.bad;
    o.chain.address_screen = o.catalog.filter.address_screen;
    o.chain.timeout_s = timeout;
    o.chain.verify.seed = c.seed;
    o.verify.seed = c.seed;
    o.verify.repeats = repeats;
    o.threads = threads;
    BenchReport rep = run_benchmark(targets, o);
    std::cout << rep.table();
    if (!out.empty()) write_file(out, rep.tsv());
    return 0;
}

int cmd_metric(const std::vector<std::string>& files, std::optional<std::size_t> ok,
               std::optional<std::size_t> has) {
    std::size_t ok_any = 0, has_syscall = 0;
    if (!files.empty()) {
        std::vector<BenchReport> reps;
        for (const auto& f : files) {
            std::istringstream is(slurp(f));
            reps.push_back(read_bench_tsv(is));
        }
        BenchReport merged = merge_reports(reps);
        for (const auto& r : merged.rows) ok_any += !r.corpus_error && r.has_syscall && r.verdict == Verdict::ok;
        has_syscall = merged.has_syscall();
    }
    if (ok) ok_any = *ok;
    if (has) has_syscall = *has;
    std::cout << "OK " << ok_any << "\nHAS_SYSCALL " << has_syscall << "\nmetric ";
    if (auto m = chaining_metric(ok_any, has_syscall)) std::cout << std::fixed << std::setprecision(2) << *m << "\n";
    else std::cout << "N/A\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-architecture ROP/JOP chain compiler.\n\n"
                 "Inputs: a corpus file (arch=, base=, writable=lo-hi, func=name:addr header lines,\n"
                 "then `0x<addr>: <asm>` gadget lines), a saved catalog (majorca-catalog v1) or,\n"
                 "with --raw, a flat x86 code image.\n"
                 "Goals: execve(\"/bin/sh\",0,0), mprotect(0x1000,0x1000,7) or a call to an address,\n"
                 "0x401136(1,\"x\",[2,\"y\"]).\n"
                 "Exit codes: 0 success, 1 usage or I/O error, 2 verify verdict not OK,\n"
                 "100 no chain, 101 timeout."};
    app.require_subcommand(1);
    Common c;
    std::string input, out, goal, payload, data_addr, suite;
    double timeout = 60;
    bool as_script = false;
    unsigned repeats = 10, threads = 0;
    std::vector<std::string> verdict_files;
    std::optional<std::size_t> ok_count, has_count;

    auto* catalog = app.add_subcommand("catalog", "Classify gadgets and write a catalog (prints stage counts)");
    catalog->add_option("input", input, "Corpus, catalog or raw image")->required();
    catalog->add_option("-o", out, "Output catalog file (default: stdout)");
    add_common(catalog, c, true);

    auto* chain = app.add_subcommand("chain", "Compile a chain for a goal; raw payload to stdout by default");
    chain->add_option("input", input, "Corpus, catalog or raw image")->required();
    chain->add_option("goal", goal, "Goal, e.g. 'execve(\"/bin/sh\",0,0)'")->required();
    chain->add_option("-o", out, "Write raw payload to PATH and the builder script to PATH.script");
    chain->add_flag("--script", as_script, "Print the builder script instead of raw bytes");
    chain->add_option("--timeout", timeout, "Seconds before giving up (exit 101)")->default_val(60);
    chain->add_option("--data-addr", data_addr, "Address for strings and arrays (default: first writable range)");
    add_common(chain, c, true);

    auto* verify = app.add_subcommand("verify", "Emulate a payload against a goal");
    verify->add_option("input", input, "Corpus, catalog or raw image")->required();
    verify->add_option("payload", payload, "Raw payload file")->required();
    verify->add_option("goal", goal, "Goal the payload should reach")->required();
    verify->add_option("--repeats", repeats, "Runs with distinct seeds")->default_val(10);
    add_common(verify, c, true);

    auto* bench = app.add_subcommand("bench", "Run a suite directory (corpus files + goals.txt)");
    bench->add_option("suite", suite, "Suite directory or goals file")->required();
    bench->add_option("--timeout", timeout, "Seconds per target (TL beyond)")->default_val(60);
    bench->add_option("--repeats", repeats, "Verification runs per chain")->default_val(10);
    bench->add_option("--threads", threads, "Targets run in parallel (0: all cores)")->default_val(0);
    bench->add_option("-o", out, "Write the per-target TSV summary here");
    add_common(bench, c, true);

    auto* metric = app.add_subcommand("metric", "ROP chaining metric M = OK/HAS_SYSCALL");
    metric->add_option("verdicts", verdict_files, "Verdict TSV files (one per tool), merged by target");
    metric->add_option("--ok", ok_count, "Targets with at least one OK");
    metric->add_option("--has-syscall", has_count, "Targets with a system call gadget");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // help and version exit 0; every other parse error is a usage error
        return app.exit(e) == 0 ? 0 : 1;
    }
    try {
        if (*catalog) return cmd_catalog(input, c, out);
        if (*chain) return cmd_chain(input, goal, c, timeout, data_addr, out, as_script);
        if (*verify) return cmd_verify(input, payload, goal, c, repeats);
        if (*bench) return cmd_bench(suite, c, timeout, repeats, threads, out);
        if (*metric) return cmd_metric(verdict_files, ok_count, has_count);
    } catch (const std::exception& e) {
        std::cerr << "majorca: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

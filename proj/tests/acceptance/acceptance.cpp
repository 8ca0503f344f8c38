// One PASS/FAIL line per acceptance criterion; exits 1 if any fails.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "majorca/catalog.hpp"
#include "majorca/dlx.hpp"
#include "majorca/emit.hpp"
#include "majorca/pipeline.hpp"
#include "majorca/verify.hpp"
#include "oracles.hpp"

using namespace majorca;
using Clock = std::chrono::steady_clock;

namespace {

// pinned tolerances
constexpr double kExecveSeconds = 5;
constexpr double kSuiteSeconds = 120;
constexpr double kSuiteRatio = 0.70;
constexpr double kAddendSeconds = 10;
constexpr double kSchedulerSeconds = 30;
constexpr int kSchedulerDags = 200;
constexpr int kSchedulerMaxNodes = 6;
constexpr double kMetricTolerance = 0.005;
constexpr std::size_t kGoldenCases = 30;
constexpr std::size_t kGoldenMinKinds = 15;
constexpr std::size_t kPopCombinations = 7;
constexpr int kDlxTrials = 500;
constexpr int kDlxMaxUniverse = 8;
constexpr Word kMipsExecve = 0xfab;

struct Outcome {
    bool pass = false;
    std::string detail;
};

const std::string kData = MAJORCA_TEST_DATA;
const Goal kExecve = parse_goal("execve(\"/bin/sh\",0,0)");

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string hex(Word v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
    return buf;
}

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int prec = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

struct Built {
    Corpus corpus;
    Catalog catalog;
    ChainResult chain;
    VerifyResult verdict;
};

Built chain_and_verify(const std::string& corpus_file, const BadBytes& bad = {}, double timeout_s = 60) {
    Built b;
    b.corpus = parse_corpus(slurp(corpus_file));
    CatalogOptions co;
    co.filter.bad = bad;
    b.catalog = build_catalog(b.corpus, co);
    ChainOptions o;
    o.bad = bad;
    o.timeout_s = timeout_s;
    b.chain = build_chain(b.catalog, kExecve, o);
    if (b.chain.status == ChainStatus::ok) {
        b.verdict = verify_payload(b.catalog.profile, b.corpus.gadgets, b.chain.payload->serialize(), kExecve, {},
                                   b.corpus.functions);
    } else {
        b.verdict = {Verdict::nogen, b.chain.detail, 0};
    }
    return b;
}

Outcome execve5() {
    const auto t0 = Clock::now();
    auto b = chain_and_verify(kData + "/execve5.corpus");
    const double s = since(t0);
    const bool ok = b.verdict.verdict == Verdict::ok && s < kExecveSeconds;
    return {ok, std::string(to_string(b.verdict.verdict)) + " in " + fmt(s) + "s (limit " + fmt(kExecveSeconds, 0) +
                    "s)"};
}

Outcome libstdcxx_jop() {
    auto b = chain_and_verify(kData + "/libstdcxx_x86_64.corpus");
    if (b.chain.status != ChainStatus::ok) return {false, "no chain: " + b.chain.detail};
    const std::string script = render_script(*b.chain.payload);
    const bool q = script.find("pack('<Q', ") != std::string::npos && script.find("pack('>") == std::string::npos;
    bool jop = false;
    for (const auto& f : b.chain.payload->frames) {
        for (const auto& s : f.slots) jop |= s.kind == Slot::Kind::fixed;
    }
    const bool ok = q && jop && b.verdict.verdict == Verdict::ok;
    return {ok, std::string("<Q words ") + (q ? "yes" : "no") + ", JOP segment " + (jop ? "yes" : "no") + ", " +
                    std::string(to_string(b.verdict.verdict))};
}

Outcome restricted_suite() {
    const auto t0 = Clock::now();
    const BadBytes bad{0x00, 0x2f};
    auto targets = read_goals(kData + "/suite/goals.txt");
    std::size_t baseline = 0, kept = 0, dirty_payloads = 0, scanned = 0;
    std::string lost;
    for (const auto& t : targets) {
        auto plain = chain_and_verify(t.corpus.string());
        if (plain.verdict.verdict != Verdict::ok) continue;
        ++baseline;
        auto r = chain_and_verify(t.corpus.string(), bad);
        if (r.chain.status == ChainStatus::ok) {
            ++scanned;
            if (!bad.clean(r.chain.payload->serialize())) ++dirty_payloads;
        }
        if (r.verdict.verdict == Verdict::ok) ++kept;
        else lost += " " + t.name;
    }
    const double s = since(t0);
    const double ratio = baseline ? static_cast<double>(kept) / static_cast<double>(baseline) : 0;
    const bool ok = baseline == targets.size() && dirty_payloads == 0 && ratio >= kSuiteRatio && s < kSuiteSeconds;
    return {ok, std::to_string(kept) + "/" + std::to_string(baseline) + " = " + fmt(ratio) + " (need " +
                    fmt(kSuiteRatio) + "), " + std::to_string(dirty_payloads) + " of " + std::to_string(scanned) +
                    " payloads with restricted bytes, " + fmt(s) + "s (limit " + fmt(kSuiteSeconds, 0) +
                    "s); lost:" + lost};
}

Outcome addends() {
    const auto t0 = Clock::now();
    const BadBytes bad{0x00, 0x2f};
    std::size_t mismatches = 0, invalid = 0, found = 0;
    for (Word v = 0; v < 0x10000; ++v) {
        auto r = find_addends(v, 2, bad);
        if (r.has_value() != oracle::addends_exist(v, 2, bad)) ++mismatches;
        if (!r) continue;
        ++found;
        if (((r->first + r->second) & 0xffff) != v || !screen(r->first, 2, bad) || !screen(r->second, 2, bad))
            ++invalid;
    }
    const double s = since(t0);
    const bool ok = mismatches == 0 && invalid == 0 && s < kAddendSeconds;
    return {ok, std::to_string(found) + " solvable, " + std::to_string(mismatches) + " existence mismatches, " +
                    std::to_string(invalid) + " invalid pairs, " + fmt(s, 3) + "s (limit " + fmt(kAddendSeconds, 0) +
                    "s)"};
}

Outcome scheduler() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20240601);
    int wrong = 0, duplicates = 0;
    std::size_t total = 0;
    for (int i = 0; i < kSchedulerDags; ++i) {
        const auto g = oracle::random_graph(rng, kSchedulerMaxNodes);
        const auto expected = oracle::brute_schedules(g);
        std::set<std::vector<int>> got;
        Scheduler s(g);
        while (auto order = s.next()) duplicates += !got.insert(*order).second;
        wrong += got != expected;
        total += expected.size();
    }
    const double s = since(t0);
    const bool ok = wrong == 0 && duplicates == 0 && s < kSchedulerSeconds;
    return {ok, std::to_string(kSchedulerDags) + " DAGs, " + std::to_string(total) + " schedules, " +
                    std::to_string(wrong) + " differing sets, " + std::to_string(duplicates) + " duplicates, " +
                    fmt(s, 3) + "s (limit " + fmt(kSchedulerSeconds, 0) + "s)"};
}

Outcome metric() {
    const double a = chaining_metric(127, 139).value_or(-1);
    const double b = chaining_metric(45, 98).value_or(-1);
    const bool ok = std::abs(a - 0.91) <= kMetricTolerance && std::abs(b - 0.46) <= kMetricTolerance;
    return {ok, "127/139 = " + fmt(a, 4) + ", 45/98 = " + fmt(b, 4) + " (tolerance " + fmt(kMetricTolerance, 3) + ")"};
}

Outcome golden() {
    auto cases = oracle::read_golden(kData + "/golden30.txt");
    std::size_t fp = 0, fn = 0;
    std::set<std::string> kinds;
    std::string misses;
    for (const auto& c : cases) {
        const ArchProfile p = make_arch_profile(c.arch);
        RawGadget g{0x1000, c.asm_text, {}, decode_asm(p, c.asm_text)};
        std::set<std::string> got;
        for (const auto& e : classify(p, g)) got.insert(describe(p, e));
        for (const auto& l : got) {
            if (!c.labels.contains(l)) ++fp, misses += " +" + l;
        }
        for (const auto& l : c.labels) {
            kinds.insert(l.substr(0, l.find('(')));
            if (!got.contains(l)) ++fn, misses += " -" + l;
        }
    }
    bool required = true;
    for (const char* k : {"JumpMem", "ArithStore", "ShiftStack", "Syscall"}) required &= kinds.contains(k);
    const bool ok = cases.size() == kGoldenCases && fp == 0 && fn == 0 && kinds.size() >= kGoldenMinKinds && required;
    return {ok, std::to_string(cases.size()) + " gadgets, " + std::to_string(kinds.size()) + " kinds, FP " +
                    std::to_string(fp) + ", FN " + std::to_string(fn) + misses};
}

Outcome pop_count() {
    const ArchProfile p = make_arch_profile(ArchId::x86_64);
    const std::string text = "pop rax ; pop rdi ; pop rsi ; ret";
    RawGadget g{0x401000, text, {}, decode_asm(p, text)};
    std::vector<SemanticEntry> loads;
    for (const auto& e : classify(p, g)) {
        if (e.kind == GadgetKind::LoadConst) loads.push_back(e);
    }
    auto derived = derive_pop_combinations(loads);
    const RegSet all = reg_bit(*p.find_reg("rax")) | reg_bit(*p.find_reg("rdi")) | reg_bit(*p.find_reg("rsi"));
    std::set<RegSet> subsets;
    bool clobbers_ok = true;
    for (const auto& e : derived) {
        subsets.insert(e.outputs());
        clobbers_ok &= e.clobbers == (all & ~e.outputs());
    }
    const bool ok = derived.size() == kPopCombinations && subsets.size() == kPopCombinations && clobbers_ok;
    return {ok, std::to_string(derived.size()) + " entries, " + std::to_string(subsets.size()) +
                    " distinct subsets, clobbers " + (clobbers_ok ? "complement" : "wrong")};
}

Outcome dlx() {
    std::mt19937_64 rng(77);
    int wrong = 0;
    std::size_t covers = 0;
    for (int t = 0; t < kDlxTrials; ++t) {
        const int universe = 1 + static_cast<int>(rng() % kDlxMaxUniverse);
        const int m = 1 + static_cast<int>(rng() % 12);
        std::vector<std::vector<int>> rows(m);
        for (auto& row : rows) {
            for (int c = 0; c < universe; ++c) {
                if (rng() % 3 == 0) row.push_back(c);
            }
            if (row.empty()) row.push_back(static_cast<int>(rng() % universe));
        }
        std::vector<std::vector<int>> got = exact_covers(universe, rows);
        std::set<std::vector<int>> set;
        for (auto& c : got) {
            std::sort(c.begin(), c.end());
            set.insert(c);
        }
        wrong += set.size() != got.size() || set != oracle::brute_covers(universe, rows);
        covers += got.size();
    }
    return {wrong == 0, std::to_string(kDlxTrials) + " trials, " + std::to_string(covers) + " covers, " +
                            std::to_string(wrong) + " disagreements"};
}

Outcome mips() {
    auto b = chain_and_verify(kData + "/grep_mips.corpus");
    if (b.chain.status != ChainStatus::ok) return {false, "no chain: " + b.chain.detail};
    const std::string script = render_script(*b.chain.payload);
    const bool be = script.find("pack('>I', ") != std::string::npos && script.find("pack('<") == std::string::npos;
    const Word number = b.catalog.profile.syscall_table.at("execve");
    const bool ok = be && number == kMipsExecve && b.verdict.verdict == Verdict::ok;
    return {ok, std::string(">I words ") + (be ? "yes" : "no") + ", v0 = " + hex(number) + ", " +
                    std::string(to_string(b.verdict.verdict)) + " " + b.verdict.detail};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"execve-five-gadgets", execve5},
        {"libstdcxx-x86-jop", libstdcxx_jop},
        {"restricted-symbol-suite", restricted_suite},
        {"addend-oracle-16bit", addends},
        {"scheduler-equivalence", scheduler},
        {"metric-arithmetic", metric},
        {"classification-golden", golden},
        {"pop-combination-count", pop_count},
        {"dlx-exact-cover", dlx},
        {"mips-big-endian", mips},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %-26s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed ? 1 : 0;
}

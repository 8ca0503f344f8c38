#include <benchmark/benchmark.h>

#include <fstream>
#include <random>
#include <sstream>

#include "majorca/badchar.hpp"
#include "majorca/catalog.hpp"
#include "majorca/dag.hpp"
#include "majorca/pipeline.hpp"

using namespace majorca;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const std::string kData = MAJORCA_BENCH_DATA;

void BM_Classify(benchmark::State& state) {
    const ArchProfile p = make_arch_profile(ArchId::x86_64);
    const std::string text = "pop rax ; pop rdi ; mov qword ptr [rdi], rax ; add rsi, rbx ; ret";
    RawGadget g{0x401000, text, {}, decode_asm(p, text)};
    for (auto _ : state) benchmark::DoNotOptimize(classify(p, g));
}
BENCHMARK(BM_Classify);

void BM_BuildCatalog(benchmark::State& state) {
    const Corpus c = parse_corpus(slurp(kData + "/libstdcxx_x86_64.corpus"));
    for (auto _ : state) benchmark::DoNotOptimize(build_catalog(c));
}
BENCHMARK(BM_BuildCatalog);

void BM_FindAddends(benchmark::State& state) {
    const BadBytes bad{0x00, 0x0a, 0x2f};
    std::mt19937_64 rng(1);
    std::vector<Word> values(1024);
    for (auto& v : values) v = rng();
    std::size_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(find_addends(values[i++ & 1023], 8, bad));
}
BENCHMARK(BM_FindAddends);

// independent producers: every order is valid
void BM_ScheduleFirst(benchmark::State& state) {
    ScheduleGraph g;
    const int n = static_cast<int>(state.range(0));
    for (int i = 0; i < n; ++i) {
        g.writes.push_back(reg_bit(static_cast<RegId>(i)));
        g.edges.push_back({i, -1, EdgeParam::Arg, static_cast<RegId>(i)});
    }
    for (auto _ : state) {
        Scheduler s(g);
        benchmark::DoNotOptimize(s.next());
    }
}
BENCHMARK(BM_ScheduleFirst)->Arg(4)->Arg(8)->Arg(12);

void BM_BuildChain(benchmark::State& state) {
    static const char* files[] = {"/execve5.corpus", "/libstdcxx_x86_64.corpus", "/grep_mips.corpus"};
    const Catalog cat = build_catalog(parse_corpus(slurp(kData + files[state.range(0)])));
    const Goal goal = parse_goal("execve(\"/bin/sh\",0,0)");
    for (auto _ : state) {
        auto r = build_chain(cat, goal);
        if (r.status != ChainStatus::ok) state.SkipWithError("no chain");
        benchmark::DoNotOptimize(r);
    }
}
BENCHMARK(BM_BuildChain)->DenseRange(0, 2)->Unit(benchmark::kMicrosecond);

} // namespace

BENCHMARK_MAIN();

#include <catch_amalgamated.hpp>

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "majorca/dlx.hpp"
#include "majorca/emit.hpp"
#include "majorca/error.hpp"
#include "majorca/synth.hpp"
#include "oracles.hpp"

using namespace majorca;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// x86_64 gadgets for register loads: pops, moves, arithmetic and a store
const char* kRich = R"(arch=x86_64
writable=0x604000-0x605000
0x401000: pop rax ; ret
0x401010: pop rbx ; pop rcx ; ret
0x401020: mov rdi, rax ; ret
0x401030: add rsi, rbx ; ret
0x401040: xor rdx, rdx ; ret
0x401050: mov rsi, rcx ; ret
0x401060: xor rdx, rcx ; ret
0x401070: neg rax ; ret
0x401080: add rax, 0x10 ; ret
0x401090: mov qword ptr [rdi], rax ; ret
0x4010a0: syscall
)";

struct Stopped {
    Word ip = 0;
    MachineState state;
};

// Runs the payload until IP leaves the gadget set.
Stopped run_to_stray(const Catalog& c, std::span<const std::uint8_t> payload, std::uint64_t seed) {
    const ArchProfile& p = c.profile;
    MachineState s(p, InitConfig{InitPolicy::random, seed, 0});
    const Word sp0 = s.initial_sp();
    s.preload(sp0, payload);
    Word ip = s.peek_mem(sp0, p.word_bytes);
    s.set_reg(p.sp, sp0 + p.word_bytes);
    for (int guard = 0; guard < 1000; ++guard) {
        const RawGadget* g = c.gadget_at(ip);
        if (!g) return {ip, s};
        for (const auto& op : g->ops) {
            if (!is_terminator(op)) {
                step(p, s, op);
                continue;
            }
            const auto& t = std::get<Terminator>(op);
            if (t.kind == TermKind::syscall || t.kind == TermKind::interrupt || t.kind == TermKind::halt) return {0, s};
            ip = transfer(p, s, t).ip;
        }
    }
    return {ip, s};
}

std::optional<Payload> first_linearization(const Catalog& c, const GadgetDag& d, const BadBytes& bad) {
    Scheduler sch(schedule_graph(d));
    sch.set_budget(5000);
    while (auto order = sch.next()) {
        std::vector<const DagNode*> nodes;
        for (int i : *order) nodes.push_back(&d.nodes[i]);
        try {
            return linearize(c.profile, nodes, bad);
        } catch (const LinearizeError&) {
        }
    }
    return std::nullopt;
}

} // namespace

TEST_CASE("load DAGs establish the requested values under emulation", "[synth][property]") {
    const Catalog c = build_catalog(parse_corpus(kRich));
    const auto& p = c.profile;
    const std::vector<RegId> targets = {*p.find_reg("rax"), *p.find_reg("rdi"), *p.find_reg("rsi"),
                                        *p.find_reg("rdx")};
    std::mt19937_64 rng(99);
    const std::vector<Word> interesting = {0, 1, 0x3b, 0x604000, 0xffffffffffffffff, 0x0a0a0a0a0a0a0a0a};
    int solved = 0;
    for (int trial = 0; trial < 60; ++trial) {
        BadBytes bad;
        if (trial % 2) bad = BadBytes{0x00, 0x0a};
        std::vector<RegValue> values;
        RegSet used = 0;
        const int k = 1 + static_cast<int>(rng() % 3);
        while (static_cast<int>(values.size()) < k) {
            RegId r = targets[rng() % targets.size()];
            if (has_reg(used, r)) continue;
            used |= reg_bit(r);
            Word v = rng() % 3 ? interesting[rng() % interesting.size()] : rng();
            values.push_back({r, v, false});
        }
        SynthOptions opt;
        opt.bad = bad;
        auto dags = load_dags(c, values, opt, 6);
        for (const auto& d : dags) {
            INFO("trial " << trial);
            REQUIRE_FALSE(validate(d));
            // one dangling output per register
            std::set<RegId> outs;
            for (const auto& e : d.edges) {
                if (e.to < 0 && e.reg) outs.insert(*e.reg);
            }
            CHECK(outs.size() == values.size());
            for (const auto& n : d.nodes) {
                for (const auto& sp : n.stack_params) CHECK(screen(sp.value, p.word_bytes, bad));
            }
            auto payload = first_linearization(c, d, bad);
            if (!payload) continue;
            const auto bytes = payload->serialize();
            CHECK(bad.clean(bytes));
            for (std::uint64_t seed : {1u, 2u, 3u}) {
                auto end = run_to_stray(c, bytes, seed);
                for (const auto& rv : values) {
                    INFO(p.reg_name(rv.reg) << " = " << rv.value << " seed " << seed);
                    CHECK(end.state.peek_reg(rv.reg) == rv.value);
                }
            }
            ++solved;
        }
    }
    // the corpus loads every target register, so most trials produce chains
    CHECK(solved >= 40);
}

TEST_CASE("store DAGs write the word", "[synth]") {
    const Catalog c = build_catalog(parse_corpus(slurp(MAJORCA_TEST_DATA "/execve5.corpus")));
    SynthOptions opt;
    const Word addr = 0x404000;
    const Word value = 0x0068732f6e69622f; // "/bin/sh\0"
    auto dags = store_mem_dags(c, addr, value, true, opt);
    REQUIRE_FALSE(dags.empty());
    for (const auto& d : dags) {
        REQUIRE_FALSE(validate(d));
        auto payload = first_linearization(c, d, opt.bad);
        REQUIRE(payload);
        for (std::uint64_t seed : {4u, 5u}) {
            auto end = run_to_stray(c, payload->serialize(), seed);
            CHECK(end.state.peek_mem(addr, 8) == value);
        }
    }
}

TEST_CASE("exact cover agrees with brute force", "[synth][dlx][property]") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 500; ++trial) {
        const int universe = 1 + static_cast<int>(rng() % 8);
        const int m = 1 + static_cast<int>(rng() % 10);
        std::vector<std::vector<int>> rows(m);
        for (auto& row : rows) {
            for (int c = 0; c < universe; ++c) {
                if (rng() % 3 == 0) row.push_back(c);
            }
            if (row.empty()) row.push_back(static_cast<int>(rng() % universe));
        }
        std::set<std::vector<int>> got;
        for (auto cover : exact_covers(universe, rows)) {
            std::sort(cover.begin(), cover.end());
            CHECK(got.insert(cover).second);
        }
        INFO("trial " << trial);
        CHECK(got == oracle::brute_covers(universe, rows));
    }
}

TEST_CASE("index tuples come in non-decreasing sum order", "[synth][property]") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::size_t> sizes(1 + rng() % 4);
        std::size_t total = 1;
        for (auto& s : sizes) {
            s = 1 + rng() % 5;
            total *= s;
        }
        const std::size_t cap = 1 + rng() % 80;
        IndexSumEnumerator e(sizes, cap);
        std::set<std::vector<std::size_t>> seen;
        std::size_t prev = 0;
        while (auto t = e.next()) {
            std::size_t sum = 0;
            for (std::size_t i = 0; i < t->size(); ++i) {
                CHECK((*t)[i] < sizes[i]);
                sum += (*t)[i];
            }
            CHECK(sum >= prev);
            prev = sum;
            CHECK(seen.insert(*t).second);
        }
        CHECK(seen.size() == std::min(cap, total));
    }
}

TEST_CASE("arguments are laid out in writable memory", "[synth]") {
    const Catalog c = build_catalog(parse_corpus(slurp(MAJORCA_TEST_DATA "/execve5.corpus")));
    SynthOptions opt;
    auto lay = layout_args(c, {GoalArg::string("/bin/sh"), GoalArg::integer(0)}, opt);
    REQUIRE(lay.values.size() == 2);
    CHECK(lay.values[0] == 0x404000);
    CHECK(lay.values[1] == 0);
    REQUIRE(lay.words.size() == 1);
    CHECK(lay.words[0].address == 0x404000);
    CHECK(lay.words[0].value == 0x0068732f6e69622f);

    // a 9-byte string needs two words, NUL then fill
    auto two = layout_args(c, {GoalArg::string("/bin/bash")}, opt);
    REQUIRE(two.words.size() == 2);
    CHECK(two.words[1].value == 0x4141414141410068);

    auto arr = layout_args(c, {GoalArg::array({GoalArg::string("x"), GoalArg::integer(5)})}, opt);
    // string, then the table: pointer, 5, NULL
    bool has_null = std::any_of(arr.words.begin(), arr.words.end(),
                                [&](const DataWord& w) { return w.value == 0 && !w.text; });
    CHECK(has_null);
    for (const auto& w : arr.words) {
        CHECK(w.address >= 0x404000);
        CHECK(w.address < 0x405000);
    }

    Catalog no_mem = c;
    no_mem.writable.clear();
    CHECK_THROWS_AS(layout_args(no_mem, {GoalArg::string("x")}, opt), Error);
    CHECK(layout_args(no_mem, {GoalArg::integer(3)}, opt).values == std::vector<Word>{3});
}

TEST_CASE("move paths invert and end at their target", "[synth][property]") {
    const Catalog c = build_catalog(parse_corpus(kRich));
    const MoveGraph g(c);
    std::mt19937_64 rng(3);
    for (RegId out : c.profile.data_regs()) {
        for (const auto& path : g.chains_into(out)) {
            REQUIRE_FALSE(path.arcs.empty());
            CHECK(path.to == out);
            CHECK(path.arcs.back().to == out);
            CHECK(path.arcs.front().from == path.from);
            for (int i = 0; i < 20; ++i) {
                Word v = rng();
                CHECK(path.apply(path.invert(v, 8), 8) == v);
            }
        }
    }
}

TEST_CASE("candidate stream reports missing terminals", "[synth]") {
    const Catalog c = build_catalog(parse_corpus("arch=x86_64\nwritable=0x404000-0x405000\n0x401000: pop rax ; ret\n"));
    CandidateStream s(c, parse_goal("execve(\"/bin/sh\",0,0)"), {});
    CHECK_FALSE(s.next());
    CHECK_FALSE(s.diagnostic().empty());
}

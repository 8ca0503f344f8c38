#include <catch_amalgamated.hpp>

#include <random>

#include "majorca/classify.hpp"
#include "majorca/emulator.hpp"
#include "majorca/ingest.hpp"

using namespace majorca;

namespace {

const ArchProfile& x64() {
    static const ArchProfile p = make_arch_profile(ArchId::x86_64);
    return p;
}

RegId R(const ArchProfile& p, const char* name) { return *p.find_reg(name); }

} // namespace

TEST_CASE("identical gadget, seed and policy give identical traces", "[machine]") {
    auto ops = decode_asm(x64(), "pop rax ; add rax, rbx ; mov qword ptr [rcx + 8], rax ; xor rdx, rdx ; ret");
    for (std::uint64_t seed : {1u, 2u, 99u}) {
        InitConfig cfg{InitPolicy::random, seed, 0};
        CHECK(run_gadget(x64(), ops, cfg) == run_gadget(x64(), ops, cfg));
    }
    auto corners = corner_values(x64());
    for (unsigned i = 0; i < corners.size(); ++i) {
        InitConfig cfg{InitPolicy::corner, 7, i};
        CHECK(run_gadget(x64(), ops, cfg) == run_gadget(x64(), ops, cfg));
    }
}

TEST_CASE("different seeds give different initial registers", "[machine]") {
    auto ops = decode_asm(x64(), "ret");
    auto a = run_gadget(x64(), ops, {InitPolicy::random, 1, 0});
    auto b = run_gadget(x64(), ops, {InitPolicy::random, 2, 0});
    CHECK(a.initial_regs != b.initial_regs);
}

TEST_CASE("pop-only gadgets advance SP by one word per pop plus the return", "[machine][property]") {
    std::mt19937_64 rng(11);
    for (ArchId id : {ArchId::x86_64, ArchId::x86_32}) {
        const ArchProfile p = make_arch_profile(id);
        auto regs = p.data_regs();
        for (int trial = 0; trial < 200; ++trial) {
            int pops = static_cast<int>(rng() % 7);
            std::string text;
            for (int i = 0; i < pops; ++i) text += "pop " + p.reg_name(regs[rng() % regs.size()]) + " ; ";
            text += "ret";
            auto t = run_gadget(p, decode_asm(p, text), {InitPolicy::random, rng(), 0});
            INFO(text);
            CHECK(t.sp_delta == static_cast<std::int64_t>(p.word_bytes) * (pops + 1));
            CHECK(t.ip_source.kind == IpSource::Kind::stack);
            CHECK(t.ip_source.offset == static_cast<std::int64_t>(p.word_bytes) * pops);
        }
    }
}

TEST_CASE("step writes nothing outside the op's write set", "[machine][property]") {
    const ArchProfile& p = x64();
    const std::vector<std::string> samples = {
        "mov rax, rbx",         "mov eax, 0x1234",       "add rcx, rdx",          "sub rsi, 0x10",
        "xor rdi, rdi",         "neg r8",                "mov al, bl",            "mov ax, 0x7",
        "mov rax, qword ptr [rbx + 0x10]",               "mov qword ptr [rdi], rbp",
        "add rax, qword ptr [rbx]",                      "add qword ptr [rbx + 8], rax",
        "pop r9",               "push rax",              "add rsp, 0x18",         "inc rdx",
    };
    for (const auto& text : samples) {
        auto ops = decode_asm(p, text + " ; ret");
        REQUIRE(ops.size() >= 2);
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            MachineState s(p, {InitPolicy::random, seed, 0});
            for (RegId r = 0; r < p.reg_count(); ++r) (void)s.reg(r);
            const MachineState before = s;
            step(p, s, ops[0]);
            // registers the op may write
            RegSet allowed = 0;
            std::visit(
                [&](const auto& op) {
                    using T = std::decay_t<decltype(op)>;
                    if constexpr (requires { op.dst; }) {
                        if constexpr (std::is_same_v<decltype(op.dst), RegRef>) allowed |= reg_bit(op.dst.reg);
                    }
                    if constexpr (std::is_same_v<T, Pop> || std::is_same_v<T, Push> || std::is_same_v<T, AdjustSP>)
                        allowed |= reg_bit(p.sp);
                },
                ops[0]);
            INFO(text << " seed " << seed);
            for (RegId r = 0; r < p.reg_count(); ++r) {
                if (!has_reg(allowed, r)) CHECK(s.peek_reg(r) == before.peek_reg(r));
            }
            for (const auto& w : s.mem_writes()) {
                bool is_store = std::holds_alternative<StoreMem>(ops[0]) || std::holds_alternative<StoreMemOp>(ops[0]) ||
                                std::holds_alternative<Push>(ops[0]);
                CHECK(is_store);
                (void)w;
            }
            for (const auto& [addr, byte] : s.memory()) {
                bool inside = std::any_of(s.mem_writes().begin(), s.mem_writes().end(), [&](const MemAccess& m) {
                    return addr >= m.address && addr < m.address + m.width;
                });
                if (!inside) CHECK(byte == before.peek_mem(addr, 1));
            }
        }
    }
}

TEST_CASE("x86_64 sub-register writes follow the architecture rule", "[machine]") {
    const ArchProfile& p = x64();
    MachineState s(p, {InitPolicy::random, 3, 0});
    const RegId rax = R(p, "rax");
    s.set_reg(rax, 0x1122334455667788ULL);
    s.write(*p.resolve("eax"), 0xaabbccdd);
    CHECK(s.peek_reg(rax) == 0xaabbccddULL);
    s.set_reg(rax, 0x1122334455667788ULL);
    s.write(*p.resolve("al"), 0xee);
    CHECK(s.peek_reg(rax) == 0x11223344556677eeULL);
    s.write(*p.resolve("ax"), 0x1234);
    CHECK(s.peek_reg(rax) == 0x1122334455661234ULL);
}

TEST_CASE("corner values include the listed constants", "[machine]") {
    auto c = corner_values(x64());
    for (Word v : {Word{0}, Word{1}, ~Word{0}, Word{0x100}, Word{0x10000}, Word{1} << 56, kCornerAddress})
        CHECK(std::find(c.begin(), c.end(), v) != c.end());
    auto c32 = corner_values(make_arch_profile(ArchId::x86_32));
    CHECK(std::find(c32.begin(), c32.end(), Word{0xffffffff}) != c32.end());
}

TEST_CASE("byte order follows the profile", "[machine]") {
    auto mips = make_arch_profile(ArchId::mips32be);
    CHECK(mips.encode(0x11223344) == std::vector<std::uint8_t>{0x11, 0x22, 0x33, 0x44});
    CHECK(x64().encode(0x11223344, 4) == std::vector<std::uint8_t>{0x44, 0x33, 0x22, 0x11});
    std::uint8_t b[4] = {0xde, 0xad, 0xbe, 0xef};
    CHECK(mips.decode(b, 4) == 0xdeadbeef);
}

TEST_CASE("system call and interrupt terminators stop with state unchanged", "[machine]") {
    auto t = run_gadget(x64(), decode_asm(x64(), "syscall"), {InitPolicy::random, 5, 0});
    CHECK(t.terminator.kind == TermKind::syscall);
    CHECK(t.initial_regs == t.final_regs);
    auto p32 = make_arch_profile(ArchId::x86_32);
    auto u = run_gadget(p32, decode_asm(p32, "int 0x80"), {InitPolicy::random, 5, 0});
    CHECK(u.terminator.kind == TermKind::interrupt);
    CHECK(u.terminator.vector == 0x80);
}

TEST_CASE("MIPS return through ra takes the delay slot first", "[machine]") {
    auto p = make_arch_profile(ArchId::mips32be);
    auto t = run_gadget(p, decode_asm(p, "lw $ra, 0x1c($sp) ; jr $ra ; addiu $sp, $sp, 0x20"),
                        {InitPolicy::random, 9, 0});
    CHECK(t.sp_delta == 0x20);
    CHECK(t.ip_source.kind == IpSource::Kind::stack);
    CHECK(t.ip_source.offset == 0x1c);
}

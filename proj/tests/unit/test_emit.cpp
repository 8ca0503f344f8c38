#include <catch_amalgamated.hpp>

#include <fstream>
#include <random>
#include <sstream>

#include "majorca/emit.hpp"
#include "majorca/pipeline.hpp"
#include "oracles.hpp"

using namespace majorca;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// first address word, then each body in fill with the slots written over it;
// later addresses arrive through next-IP slots
std::vector<std::uint8_t> walk_frames(const Payload& p) {
    std::vector<std::uint8_t> out = p.profile.encode(p.frames.front().gadget_address);
    for (const auto& f : p.frames) {
        std::vector<std::uint8_t> body(static_cast<std::size_t>(f.body), p.fill);
        for (const auto& s : f.slots) {
            auto w = p.profile.encode(s.value);
            std::copy(w.begin(), w.end(), body.begin() + s.offset);
        }
        out.insert(out.end(), body.begin(), body.end());
    }
    return out;
}

Payload random_payload(std::mt19937_64& rng, ArchId id, const BadBytes& bad, std::uint8_t fill) {
    Payload p;
    p.profile = make_arch_profile(id);
    p.bad = bad;
    p.fill = fill;
    const unsigned wb = p.profile.word_bytes;
    const int frames = 1 + static_cast<int>(rng() % 5);
    std::vector<Word> addrs;
    for (int i = 0; i < frames; ++i) addrs.push_back((rng() & 0x7fffff7f) | 0x01010101);
    for (int i = 0; i < frames; ++i) {
        Frame f;
        f.gadget_address = addrs[i];
        f.comment = "gadget " + std::to_string(i);
        const bool last = i + 1 == frames;
        const int words = static_cast<int>(rng() % 5) + (last ? 0 : 1);
        f.body = static_cast<std::int64_t>(words) * wb;
        if (!last) {
            f.next_ip_slot = f.body - wb;
            f.slots.push_back({Slot::Kind::next_ip, *f.next_ip_slot, addrs[i + 1], ""});
        } else {
            f.terminal = true;
        }
        for (int w = 0; w < words - (last ? 0 : 1); ++w) {
            if (rng() % 2) continue;
            Slot s;
            s.offset = static_cast<std::int64_t>(w) * wb;
            s.value = rng() & p.profile.mask();
            s.kind = rng() % 4 == 0 ? Slot::Kind::text : Slot::Kind::value;
            f.slots.push_back(s);
        }
        std::sort(f.slots.begin(), f.slots.end(), [](const Slot& a, const Slot& b) { return a.offset < b.offset; });
        p.frames.push_back(f);
    }
    return p;
}

} // namespace

TEST_CASE("builder script reproduces the serialized bytes", "[emit][property]") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 300; ++trial) {
        const ArchId id = std::array{ArchId::x86_64, ArchId::x86_32, ArchId::mips32be}[trial % 3];
        const std::uint8_t fill = trial % 4 == 0 ? 0x42 : 0x41;
        const Payload p = random_payload(rng, id, {}, fill);
        const auto bytes = p.serialize();
        INFO("trial " << trial);
        CHECK(bytes == walk_frames(p));
        CHECK(oracle::run_builder_script(render_script(p)) == bytes);
    }
}

TEST_CASE("script of the execve chain uses the target pack format", "[emit]") {
    const Catalog c = build_catalog(parse_corpus(slurp(MAJORCA_TEST_DATA "/execve5.corpus")));
    auto r = build_chain(c, parse_goal("execve(\"/bin/sh\",0,0)"));
    REQUIRE(r.status == ChainStatus::ok);
    const std::string script = render_script(*r.payload);
    CHECK(script.find("pack('<Q', ") != std::string::npos);
    CHECK(script.find("b'/bin/sh\\x00'") != std::string::npos);
    CHECK(script.find("# syscall") != std::string::npos);
    CHECK(oracle::run_builder_script(script) == r.payload->serialize());
}

TEST_CASE("restricted bytes in a word are reported with frame and offset", "[emit]") {
    const auto p = make_arch_profile(ArchId::x86_64);
    DagNode a;
    a.entry.address = 0x41424344;
    a.entry.kind = GadgetKind::LoadConst;
    a.entry.frame = {16, 8, {}};
    a.stack_params = {{0, 0x0a41414141414141, false}};
    DagNode b = a;
    b.entry.address = 0x41424354;
    b.stack_params = {{0, 0x4242424242424242, false}};

    const BadBytes bad{0x0a};
    try {
        linearize(p, {&b, &a}, bad);
        FAIL("expected a linearize error");
    } catch (const LinearizeError& e) {
        CHECK(e.frame() == 1);
        CHECK(e.offset() == 0);
    }
    // a restricted byte in the first gadget address sits before the frame
    DagNode c = b;
    c.entry.address = 0x4142430a;
    try {
        linearize(p, {&c}, bad);
        FAIL("expected a linearize error");
    } catch (const LinearizeError& e) {
        CHECK(e.frame() == 0);
        CHECK(e.offset() == -8);
    }
    CHECK_NOTHROW(linearize(p, {&b}, bad));
    CHECK_THROWS_AS(linearize(p, {&b}, BadBytes{0x41}, 0x41), LinearizeError);
}

TEST_CASE("next-IP slots hold the following gadget", "[emit]") {
    const auto p = make_arch_profile(ArchId::x86_64);
    DagNode a;
    a.entry.address = 0x401000;
    a.entry.kind = GadgetKind::LoadConst;
    a.entry.frame = {16, 8, {}};
    a.stack_params = {{0, 7, false}};
    DagNode t;
    t.entry.address = 0x401040;
    t.entry.kind = GadgetKind::Syscall;
    auto pay = linearize(p, {&a, &t}, {});
    REQUIRE(pay.frames.size() == 2);
    CHECK(pay.frames[1].terminal);
    const auto bytes = pay.serialize();
    REQUIRE(bytes.size() == 8 + 16);
    CHECK(p.decode(bytes.data(), 8) == 0x401000);
    CHECK(p.decode(bytes.data() + 8, 8) == 7);
    CHECK(p.decode(bytes.data() + 16, 8) == 0x401040);
    CHECK_THROWS_AS(linearize(p, {&t, &a}, {}), LinearizeError);
}

TEST_CASE("fill falls back when 0x41 is restricted", "[emit]") {
    std::mt19937_64 rng(4);
    const BadBytes bad{0x41};
    const std::uint8_t fill = *pick_fill(bad);
    Payload p = random_payload(rng, ArchId::x86_64, bad, fill);
    p.frames[0].body = 16;
    p.frames[0].slots.clear();
    const std::string script = render_script(p);
    CHECK(script.find("fill = b'\\x00'  # fill character (0x41 is restricted)") != std::string::npos);
    CHECK(script.find("* fill") != std::string::npos);
    CHECK(oracle::run_builder_script(script) == p.serialize());
}

TEST_CASE("concatenation links parts through the next-IP slot", "[emit]") {
    const auto prof = make_arch_profile(ArchId::x86_64);
    DagNode a;
    a.entry.address = 0x401000;
    a.entry.kind = GadgetKind::ShiftStack;
    a.entry.frame = {8, 0, {}};
    DagNode t;
    t.entry.address = 0x401040;
    t.entry.kind = GadgetKind::Syscall;
    auto first = linearize(prof, {&a}, {});
    auto second = linearize(prof, {&t}, {});
    auto both = concat({first, second});
    REQUIRE(both.frames.size() == 2);
    const auto bytes = both.serialize();
    CHECK(prof.decode(bytes.data() + 8, 8) == 0x401040);
    CHECK_THROWS_AS(concat({second, first}), Error);
}

TEST_CASE("bytes literals escape what Python needs", "[emit]") {
    CHECK(bytes_literal({'/', 'b', 0x00}) == "b'/b\\x00'");
    CHECK(bytes_literal({'\'', '\\'}) == "b'\\'\\\\'");
    CHECK(bytes_literal({0x0a, 0x7f, 0x80}) == "b'\\x0a\\x7f\\x80'");
}

#include "majorca/dag.hpp"

#include <algorithm>
#include <sstream>

namespace majorca {

std::string_view to_string(EdgeParam p) {
    switch (p) {
    case EdgeParam::In: return "In";
    case EdgeParam::In2: return "In2";
    case EdgeParam::Addr: return "Addr";
    case EdgeParam::Arg: return "Arg";
    case EdgeParam::Dep: return "DEP";
    }
    return "?";
}

RegSet DagNode::writes() const { return direct_target ? RegSet{0} : entry.writes(); }

bool DagNode::preserving() const { return !direct_target && entry.frame.next_ip_slot.has_value(); }

int GadgetDag::add_node(DagNode n) {
    nodes.push_back(std::move(n));
    return static_cast<int>(nodes.size()) - 1;
}

void GadgetDag::add_edge(int from, int to, EdgeParam param, std::optional<RegId> reg) {
    edges.push_back({from, to, param, param == EdgeParam::Dep ? std::nullopt : reg});
}

void GadgetDag::add_output(int from, std::optional<RegId> reg) {
    edges.push_back({from, -1, reg ? EdgeParam::Arg : EdgeParam::Dep, reg});
}

int GadgetDag::merge(const GadgetDag& other) {
    int base = static_cast<int>(nodes.size());
    nodes.insert(nodes.end(), other.nodes.begin(), other.nodes.end());
    for (auto e : other.edges) {
        e.from += base;
        if (e.to >= 0) e.to += base;
        edges.push_back(e);
    }
    return base;
}

std::vector<int> GadgetDag::outputs() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        if (edges[i].to < 0) out.push_back(static_cast<int>(i));
    }
    return out;
}

namespace {

bool accepts(const DagNode& n, EdgeParam param, std::optional<RegId> reg) {
    if (param == EdgeParam::Dep) return true;
    if (n.direct_target) return param == EdgeParam::Arg;
    const Params& q = n.entry.params;
    switch (n.entry.kind) {
    case GadgetKind::MoveReg:
    case GadgetKind::Neg:
    case GadgetKind::ArithConst:
    case GadgetKind::StackPivot:
    case GadgetKind::ArithStack:
    case GadgetKind::ArithSP: return param == EdgeParam::In && reg == q.in;
    case GadgetKind::Arithmetic:
        return (param == EdgeParam::In && reg == q.in) || (param == EdgeParam::In2 && reg == q.in2);
    case GadgetKind::StoreMem:
    case GadgetKind::ArithStore:
        return (param == EdgeParam::In && reg == q.in) || (param == EdgeParam::Addr && reg == q.addr);
    case GadgetKind::ArithLoad: return (param == EdgeParam::Addr && reg == q.addr) || (param == EdgeParam::In && reg == q.out);
    case GadgetKind::LoadMem:
    case GadgetKind::InitMem: return param == EdgeParam::Addr && reg == q.addr;
    case GadgetKind::Jump:
    case GadgetKind::JumpMem:
    case GadgetKind::Call:
    case GadgetKind::CallMem: return (param == EdgeParam::Addr && reg == q.addr) || param == EdgeParam::Arg;
    case GadgetKind::Syscall:
    case GadgetKind::Int: return param == EdgeParam::Arg;
    default: return false;
    }
}

} // namespace

std::optional<Violation> validate(const GadgetDag& dag) {
    const int n = static_cast<int>(dag.nodes.size());
    for (const auto& e : dag.edges) {
        if (e.from < 0 || e.from >= n || e.to >= n) return Violation{"edge endpoint out of range", {e.from, e.to}};
        if (e.from == e.to) return Violation{"cycle: self loop", {e.from}};
        if (e.param != EdgeParam::Dep && !e.reg) return Violation{"data edge without register", {e.from, e.to}};
        if (e.to >= 0 && !accepts(dag.nodes[e.to], e.param, e.reg))
            return Violation{"edge parameter " + std::string(to_string(e.param)) + " not accepted by node", {e.to}};
    }
    // Kahn
    std::vector<int> indeg(n, 0);
    for (const auto& e : dag.edges) {
        if (e.to >= 0) ++indeg[e.to];
    }
    std::vector<int> queue;
    for (int i = 0; i < n; ++i) {
        if (indeg[i] == 0) queue.push_back(i);
    }
    int seen = 0;
    while (!queue.empty()) {
        int v = queue.back();
        queue.pop_back();
        ++seen;
        for (const auto& e : dag.edges) {
            if (e.from == v && e.to >= 0 && --indeg[e.to] == 0) queue.push_back(e.to);
        }
    }
    if (seen != n) {
        std::vector<int> cyc;
        for (int i = 0; i < n; ++i) {
            if (indeg[i] > 0) cyc.push_back(i);
        }
        return Violation{"cycle", cyc};
    }
    // single terminal, and nothing runs after it
    std::vector<int> terminals;
    for (int i = 0; i < n; ++i) {
        if (!dag.nodes[i].preserving()) terminals.push_back(i);
    }
    if (terminals.size() > 1) return Violation{"more than one terminal node", terminals};
    for (int t : terminals) {
        for (const auto& e : dag.edges) {
            if (e.from == t && e.to >= 0) return Violation{"terminal node has successors", {t, e.to}};
        }
    }
    // reachability from outputs (backwards)
    std::vector<bool> reach(n, false);
    std::vector<int> work;
    for (const auto& e : dag.edges) {
        if (e.to < 0 && !reach[e.from]) {
            reach[e.from] = true;
            work.push_back(e.from);
        }
    }
    while (!work.empty()) {
        int v = work.back();
        work.pop_back();
        for (const auto& e : dag.edges) {
            if (e.to == v && !reach[e.from]) {
                reach[e.from] = true;
                work.push_back(e.from);
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        if (!reach[i]) return Violation{"node not reachable from outputs", {i}};
    }
    return std::nullopt;
}

ScheduleGraph schedule_graph(const GadgetDag& dag) {
    ScheduleGraph g;
    for (const auto& n : dag.nodes) g.writes.push_back(n.writes());
    g.edges = dag.edges;
    return g;
}

Scheduler::Scheduler(ScheduleGraph graph) : g_(std::move(graph)) {
    const std::size_t n = g_.writes.size();
    outs_.assign(n, {});
    ins_.assign(n, {});
    std::vector<int> initial;
    for (std::size_t i = 0; i < g_.edges.size(); ++i) {
        const auto& e = g_.edges[i];
        outs_[e.from].push_back(static_cast<int>(i));
        if (e.to >= 0) ins_[e.to].push_back(static_cast<int>(i));
        else initial.push_back(static_cast<int>(i));
    }
    if (n > 0) stack_.push_back({initial, {}});
}

void Scheduler::expand(State s) {
    const auto& wl = s.worklist;
    // live values must sit in distinct registers unless they come from the
    // same producer
    for (std::size_t i = 0; i < wl.size(); ++i) {
        const auto& a = g_.edges[wl[i]];
        if (!a.reg) continue;
        for (std::size_t j = i + 1; j < wl.size(); ++j) {
            const auto& b = g_.edges[wl[j]];
            if (b.reg && *a.reg == *b.reg && a.from != b.from) return;
        }
    }
    for (int edge : wl) {
        const int n = g_.edges[edge].from;
        bool f = true;
        std::size_t c = 0;
        std::vector<int> rest;
        for (int e : wl) {
            if (g_.edges[e].from == n) {
                ++c;
                if (c == 1 && e != edge) {
                    f = false; // do not yield the same schedule twice
                    break;
                }
            } else {
                rest.push_back(e);
            }
        }
        if (!f || c != outs_[n].size()) continue;
        bool clobbers = std::any_of(rest.begin(), rest.end(), [&](int e) {
            const auto& r = g_.edges[e].reg;
            return r && has_reg(g_.writes[n], *r);
        });
        if (clobbers) continue;
        rest.insert(rest.end(), ins_[n].begin(), ins_[n].end());
        std::vector<int> chain;
        chain.reserve(s.chain.size() + 1);
        chain.push_back(n);
        chain.insert(chain.end(), s.chain.begin(), s.chain.end());
        if (rest.empty()) ready_.push_back(std::move(chain));
        else stack_.push_back({std::move(rest), std::move(chain)});
    }
}

std::optional<std::vector<int>> Scheduler::next() {
    while (ready_pos_ >= ready_.size()) {
        ready_.clear();
        ready_pos_ = 0;
        if (stack_.empty() || exhausted_budget()) return std::nullopt;
        ++expanded_;
        State s = std::move(stack_.back());
        stack_.pop_back();
        expand(std::move(s));
    }
    return ready_[ready_pos_++];
}

std::vector<std::vector<int>> all_schedules(const ScheduleGraph& graph, std::size_t limit) {
    std::vector<std::vector<int>> out;
    Scheduler s(graph);
    while (out.size() < limit) {
        auto next = s.next();
        if (!next) break;
        out.push_back(std::move(*next));
    }
    return out;
}

std::string dump(const ArchProfile& profile, const GadgetDag& dag) {
    std::ostringstream os;
    os << "digraph dag {\n";
    for (std::size_t i = 0; i < dag.nodes.size(); ++i) {
        const auto& n = dag.nodes[i];
        os << "  n" << i << " [label=\"";
        if (n.direct_target) os << "call 0x" << std::hex << *n.direct_target << std::dec;
        else os << describe(profile, n.entry) << "\\n" << n.entry.asm_text;
        os << "\"];\n";
    }
    for (const auto& e : dag.edges) {
        std::string label(to_string(e.param));
        if (e.reg) label += ":" + profile.reg_name(*e.reg);
        if (e.to < 0) os << "  n" << e.from << " -> out [label=\"" << label << "\"];\n";
        else os << "  n" << e.from << " -> n" << e.to << " [label=\"" << label << "\"];\n";
    }
    os << "}\n";
    return os.str();
}

} // namespace majorca

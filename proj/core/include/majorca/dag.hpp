#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "majorca/classify.hpp"

namespace majorca {

enum class EdgeParam : std::uint8_t { In, In2, Addr, Arg, Dep };
std::string_view to_string(EdgeParam p);

/// A word the node's frame must hold at `offset`.
struct StackParam {
    std::int64_t offset = 0;
    Word value = 0;
    bool text = false; // raw string bytes, rendered as a bytes literal
    friend bool operator==(const StackParam&, const StackParam&) = default;
};

struct DagNode {
    SemanticEntry entry;
    std::vector<StackParam> stack_params;
    /// Set for the pseudo node that transfers control by placing a function
    /// address in the previous frame's next-IP slot. Its frame holds stack
    /// arguments (x86_32) after a return-address word.
    std::optional<Word> direct_target;

    /// Registers the node may overwrite.
    RegSet writes() const;
    /// The chain continues after this node.
    bool preserving() const;
};

/// from -> to; `to` < 0 marks a dangling output edge.
struct DagEdge {
    int from = 0;
    int to = -1;
    EdgeParam param = EdgeParam::Dep;
    std::optional<RegId> reg; // none for Dep
    friend bool operator==(const DagEdge&, const DagEdge&) = default;
};

struct GadgetDag {
    std::vector<DagNode> nodes;
    std::vector<DagEdge> edges; // includes the dangling outputs

    int add_node(DagNode n);
    void add_edge(int from, int to, EdgeParam param, std::optional<RegId> reg);
    void add_output(int from, std::optional<RegId> reg);
    /// Appends `other`; returns the index offset of its nodes.
    int merge(const GadgetDag& other);

    std::vector<int> outputs() const;
};

struct Violation {
    std::string what;
    std::vector<int> nodes;
};

/// Acyclicity, edge well-formedness, the single-terminal rule and
/// reachability from the outputs.
std::optional<Violation> validate(const GadgetDag& dag);

/// What the scheduler needs: per-node write sets and the edges.
struct ScheduleGraph {
    std::vector<RegSet> writes;
    std::vector<DagEdge> edges;
};
ScheduleGraph schedule_graph(const GadgetDag& dag);

/// Lazy enumeration of clobber-safe topological orders: a stack of
/// (worklist, chain tail) states, each node chosen once per state through
/// its first live out-edge.
class Scheduler {
public:
    explicit Scheduler(ScheduleGraph graph);
    std::optional<std::vector<int>> next();
    /// Stop after expanding this many states (0: unlimited).
    void set_budget(std::size_t states) { budget_ = states; }
    bool exhausted_budget() const { return budget_ != 0 && expanded_ >= budget_; }

private:
    struct State {
        std::vector<int> worklist; // edge indices
        std::vector<int> chain;    // scheduled tail, first element runs first
    };
    void expand(State s);

    ScheduleGraph g_;
    std::vector<std::vector<int>> outs_, ins_;
    std::vector<State> stack_;
    std::vector<std::vector<int>> ready_;
    std::size_t ready_pos_ = 0;
    std::size_t budget_ = 0;
    std::size_t expanded_ = 0;
};

std::vector<std::vector<int>> all_schedules(const ScheduleGraph& graph, std::size_t limit = SIZE_MAX);

/// Graphviz-style text for debugging.
std::string dump(const ArchProfile& profile, const GadgetDag& dag);

} // namespace majorca

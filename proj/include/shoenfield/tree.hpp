#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "shoenfield/machine.hpp"

namespace shoenfield {

// Non-deterministic runs branch into every choice of the addressed line. The
// explorer materializes that computation tree breadth-first under a depth
// bound and a node budget, and recovers the deterministic run hidden in any
// root-to-leaf path.

class AlreadyHaltedError : public std::logic_error {
public:
    AlreadyHaltedError() : std::logic_error("configuration is already halted, nothing to expand") {}
};

class NodeNotInTreeError : public std::out_of_range {
public:
    explicit NodeNotInTreeError(std::size_t id)
        : std::out_of_range("node " + std::to_string(id) + " is not part of this tree") {}
};

class TraceMismatchError : public std::runtime_error {
public:
    TraceMismatchError(std::size_t step, const std::string& message)
        : std::runtime_error("trace step " + std::to_string(step) + ": " + message), step_(step) {}

    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

enum class NodeStatus { Expanded, LeafHalted, Frontier };

inline const char* to_string(NodeStatus status) {
    switch (status) {
        case NodeStatus::Expanded: return "expanded";
        case NodeStatus::LeafHalted: return "halted";
        default: return "frontier";
    }
}

using NodeId = std::size_t;
inline constexpr NodeId kNoNode = static_cast<NodeId>(-1);

struct TreeEdge {
    std::size_t choice;
    NodeId child;
};

struct TreeNode {
    Configuration config;
    std::uint64_t depth = 0;
    NodeStatus status = NodeStatus::Frontier;
    NodeId parent = kNoNode;
    std::size_t choice_from_parent = 0;
    std::vector<TreeEdge> children;
};

struct ComputationTree {
    Program program;
    std::vector<TreeNode> nodes;  // BFS order, nodes[0] is the root
    bool truncated = false;

    std::size_t node_count() const { return nodes.size(); }
    const TreeNode& root() const { return nodes.front(); }
};

struct TraceStep {
    std::uint64_t line;
    std::size_t choice;
    Instruction instruction;

    bool operator==(const TraceStep&) const = default;
};

struct Trace {
    std::vector<TraceStep> steps;

    bool operator==(const Trace&) const = default;
};

struct HaltingReport {
    bool all_halted = false;
    std::uint64_t max_depth = 0;     // deepest halted leaf
    std::size_t leaf_count = 0;      // halted leaves when all_halted
    std::size_t live_frontier = 0;   // non-halted paths at the fuel horizon
    std::size_t halted_leaves = 0;   // halted leaves found either way
};

struct AcceptingSearch {
    std::optional<Trace> trace;
    bool inconclusive = false;  // nothing found but the tree was truncated
};

// One successor per choice on the addressed line, in choice order.
inline std::vector<Configuration> expand(const Program& program, const Configuration& config) {
    if (is_halted(program, config))
        throw AlreadyHaltedError();
    const ProgramLine& line = program.lines[config.counter];
    std::vector<Configuration> successors;
    successors.reserve(line.choices.size());
    for (const Choice& choice : line.choices)
        successors.push_back(apply_instruction(config, choice.instruction));
    return successors;
}

// Breadth-first construction. A node expands only if it is live, within the
// depth bound, and all of its children fit the node budget; expansion is
// all-or-nothing so every Expanded node has one child per choice. Once the
// budget refuses one expansion it refuses the rest, keeping the materialized
// set a prefix of the BFS order.
inline ComputationTree build_tree(const Program& program, const RegisterMap& inputs, std::uint64_t depth_bound,
                                  std::size_t node_budget) {
    ComputationTree tree;
    tree.program = program;

    TreeNode root;
    root.config = make_configuration(inputs);
    root.depth = 0;
    tree.nodes.push_back(std::move(root));

    std::deque<NodeId> queue{0};
    bool budget_closed = false;
    while (!queue.empty()) {
        NodeId id = queue.front();
        queue.pop_front();

        if (is_halted(program, tree.nodes[id].config)) {
            tree.nodes[id].status = NodeStatus::LeafHalted;
            continue;
        }
        if (tree.nodes[id].depth >= depth_bound) {
            tree.nodes[id].status = NodeStatus::Frontier;
            tree.truncated = true;
            continue;
        }
        std::size_t width = program.lines[tree.nodes[id].config.counter].choices.size();
        if (budget_closed || tree.nodes.size() + width > node_budget) {
            budget_closed = true;
            tree.nodes[id].status = NodeStatus::Frontier;
            tree.truncated = true;
            continue;
        }

        tree.nodes[id].status = NodeStatus::Expanded;
        std::vector<Configuration> successors = expand(program, tree.nodes[id].config);
        for (std::size_t j = 0; j < successors.size(); ++j) {
            TreeNode child;
            child.config = std::move(successors[j]);
            child.depth = tree.nodes[id].depth + 1;
            child.parent = id;
            child.choice_from_parent = j;
            NodeId child_id = tree.nodes.size();
            tree.nodes.push_back(std::move(child));
            tree.nodes[id].children.push_back(TreeEdge{j, child_id});
            queue.push_back(child_id);
        }
    }
    return tree;
}

// The machine halts iff every branch halts. Decided exactly up to the fuel
// horizon: any branch still live after `fuel` steps is reported as running.
inline HaltingReport universal_halting(const Program& program, const RegisterMap& inputs, std::uint64_t fuel) {
    HaltingReport report;
    std::deque<std::pair<Configuration, std::uint64_t>> queue;
    queue.emplace_back(make_configuration(inputs), 0);
    while (!queue.empty()) {
        auto [config, depth] = std::move(queue.front());
        queue.pop_front();
        if (is_halted(program, config)) {
            ++report.halted_leaves;
            if (depth > report.max_depth)
                report.max_depth = depth;
            continue;
        }
        if (depth == fuel) {
            ++report.live_frontier;
            continue;
        }
        for (const Choice& choice : program.lines[config.counter].choices)
            queue.emplace_back(apply_instruction(config, choice.instruction), depth + 1);
    }
    report.all_halted = report.live_frontier == 0;
    if (report.all_halted)
        report.leaf_count = report.halted_leaves;
    return report;
}

// Root-to-node instruction sequence, in execution order.
inline Trace extract_trace(const ComputationTree& tree, NodeId leaf) {
    if (leaf >= tree.nodes.size())
        throw NodeNotInTreeError(leaf);
    std::vector<TraceStep> reversed;
    NodeId at = leaf;
    while (tree.nodes[at].parent != kNoNode) {
        const TreeNode& node = tree.nodes[at];
        const TreeNode& parent = tree.nodes[node.parent];
        std::uint64_t line = parent.config.counter;
        reversed.push_back(TraceStep{line, node.choice_from_parent,
                                     tree.program.lines[line].choices[node.choice_from_parent].instruction});
        at = node.parent;
    }
    Trace trace;
    trace.steps.assign(reversed.rbegin(), reversed.rend());
    return trace;
}

// Deterministically replays a recorded path, validating each recorded step
// against the live machine state rather than trusting the trace.
inline Configuration replay_trace(const Program& program, const RegisterMap& inputs, const Trace& trace) {
    Configuration config = make_configuration(inputs);
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        const TraceStep& step = trace.steps[i];
        if (is_halted(program, config))
            throw TraceMismatchError(i, "machine already halted");
        if (config.counter != step.line)
            throw TraceMismatchError(i, "recorded line " + std::to_string(step.line) + " but counter is " +
                                            std::to_string(config.counter));
        const ProgramLine& line = program.lines[step.line];
        if (step.choice >= line.choices.size())
            throw TraceMismatchError(i, "recorded choice " + std::to_string(step.choice) + " but line has " +
                                            std::to_string(line.choices.size()) + " choice(s)");
        if (!(line.choices[step.choice].instruction == step.instruction))
            throw TraceMismatchError(i, "recorded instruction " + to_string(step.instruction) +
                                            " but line holds " + to_string(line.choices[step.choice].instruction));
        config = apply_instruction(config, step.instruction);
    }
    return config;
}

// First accepting halted leaf in BFS order, as a replayable trace. Finding
// nothing in a truncated tree proves nothing, so that case is flagged
// inconclusive instead of being folded into plain absence.
inline AcceptingSearch exists_accepting_leaf(const ComputationTree& tree, const AcceptancePolicy& policy) {
    AcceptingSearch result;
    for (NodeId id = 0; id < tree.nodes.size(); ++id) {
        const TreeNode& node = tree.nodes[id];
        if (node.status == NodeStatus::LeafHalted && policy.accepts(node.config)) {
            result.trace = extract_trace(tree, id);
            return result;
        }
    }
    result.inconclusive = tree.truncated;
    return result;
}

}  // namespace shoenfield

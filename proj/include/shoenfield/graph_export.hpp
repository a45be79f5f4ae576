#pragma once

#include <sstream>
#include <string>

#include "shoenfield/machine.hpp"
#include "shoenfield/tree.hpp"

namespace shoenfield {

inline std::string register_summary(const Configuration& config) {
    std::ostringstream out;
    out << '{';
    bool first = true;
    for (const auto& [reg, value] : config.registers) {
        if (!first)
            out << ", ";
        first = false;
        out << 'R' << reg << '=' << value;
    }
    out << '}';
    return out.str();
}

// Graphviz DOT rendering of a computation tree: one record per node
// (id, depth, counter, non-zero registers, status) and one per edge
// (parent, child, choice index).
inline std::string to_dot(const ComputationTree& tree) {
    std::ostringstream out;
    out << "digraph computation {\n";
    out << "  rankdir=TB;\n";
    out << "  node [shape=box, fontname=\"monospace\"];\n";
    for (NodeId id = 0; id < tree.node_count(); ++id) {
        const TreeNode& node = tree.nodes[id];
        out << "  n" << id << " [label=\"#" << id << " depth=" << node.depth << " counter=" << node.config.counter
            << ' ' << register_summary(node.config) << ' ' << to_string(node.status) << "\"];\n";
    }
    for (NodeId id = 0; id < tree.node_count(); ++id) {
        for (const TreeEdge& edge : tree.nodes[id].children)
            out << "  n" << id << " -> n" << edge.child << " [label=\"" << edge.choice << "\"];\n";
    }
    out << "}\n";
    return out.str();
}

}  // namespace shoenfield

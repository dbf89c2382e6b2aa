#pragma once

#include <string>
#include <vector>

#include "commdrop/adjacency.hpp"

namespace commdrop {

// Indices of the nodes kept by weighted-degree selection: node i scores
// sum_j m(j,i) + sum_j m(i,j), the ceil((1-keep_fraction)*N) lowest scorers
// are excluded, and ties keep the lower index. The result is sorted
// ascending. keep_fraction must lie in (0, 1]; excluding every node is a
// configuration error.
std::vector<int> topk_nodes(const Matrix& m, double keep_fraction);

struct NodeDropoutResult {
    AdjacencySet adj;
    std::vector<std::vector<std::string>> dropped; // per round, ids, ascending by index
};

// Removes the ceil(alpha*N) lowest-degree nodes of each round (scored on that
// round's intra matrix), deleting their rows and columns from the round's
// intra matrix and the adjacent inter matrices. alpha = 0 is the identity.
NodeDropoutResult node_dropout(const AdjacencySet& adj, double alpha);

struct DroppedEdge {
    enum class Kind { Intra, Inter };
    Kind kind = Kind::Intra;
    // Intra: 1-based round. Inter: boundary b meaning round b-1 -> round b,
    // so b runs from 2 to T.
    int location = 1;
    std::string src;
    std::string dst;

    friend bool operator==(const DroppedEdge&, const DroppedEdge&) = default;
};

struct EdgeDropoutResult {
    AdjacencySet adj;
    std::vector<DroppedEdge> dropped;
};

// Independently per matrix, keeps the ceil((1-beta)*E) largest trainable
// entries (E = trainable count for that matrix) and drops the rest: weight 0,
// mask off. Ties keep the lexicographically smaller (row, col). beta = 0 is
// the identity.
EdgeDropoutResult edge_dropout(const AdjacencySet& adj, double beta);

struct DropoutPlan {
    std::vector<std::vector<std::string>> dropped_nodes; // per round
    std::vector<DroppedEdge> dropped_edges;
    AdjacencySet final_adjacency;
};

} // namespace commdrop

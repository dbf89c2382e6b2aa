#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "commdrop/adjacency.hpp"

namespace commdrop {

// How the likelihood of a sampled graph is scored.
//   Paper:     product of included-edge weights only; absent edges contribute
//              no factor. Gradients for absent edges are zero (this makes the
//              estimator biased, which is accepted as the faithful behavior).
//   Bernoulli: full product; every trainable pair compatible with the drawn
//              order also contributes (1 - w) when its edge is absent.
enum class LikelihoodMode { Paper, Bernoulli };

// Which factors sampling_probability multiplies: the intra-round matrices
// only (node-dropout training stage) or intra and inter jointly.
enum class ProbabilityScope { IntraOnly, Joint };

// One concrete multi-round communication graph. Edges are stored as index
// pairs into round_node_ids; topo_order[t] lists round t's node indices in
// execution order (the order the sampler drew). Guaranteed acyclic by
// construction: intra edges only run forward along topo_order, inter edges
// only cross a round boundary forward.
struct GraphSample {
    std::vector<std::vector<std::string>> round_node_ids;
    std::vector<std::vector<std::pair<int, int>>> intra_edges; // per round, (src, dst)
    std::vector<std::vector<std::pair<int, int>>> inter_edges; // per boundary, (src in t, dst in t+1)
    std::vector<std::vector<int>> topo_order;
    double log_prob = 0.0;
    LikelihoodMode log_prob_mode = LikelihoodMode::Paper;

    int rounds() const { return int(round_node_ids.size()); }
    bool has_intra_edge(int round, int src, int dst) const;
    bool has_inter_edge(int boundary, int src, int dst) const;
};

// Draws one graph: per round, a uniformly random execution order, then each
// trainable pair that runs forward along that order is included with its
// weight; each trainable inter pair is included with its weight. log_prob is
// the joint likelihood under `mode`. Deterministic given (adj, seed, mode).
GraphSample dag_sample(const AdjacencySet& adj, uint64_t seed,
                       LikelihoodMode mode = LikelihoodMode::Paper);

// Recomputes the sample's likelihood from the adjacency. Throws ContractError
// when the sample does not match the adjacency (shapes, node ids, edges on
// untrainable pairs, or intra edges violating the stored order).
double sampling_probability(const AdjacencySet& adj, const GraphSample& sample,
                            LikelihoodMode mode,
                            ProbabilityScope scope = ProbabilityScope::Joint);

// True when the unrolled multi-round graph has no directed cycle. dag_sample
// output always passes; exposed so tests can check independently.
bool is_acyclic(const GraphSample& sample);

// participating[t][i]: node i runs in round t. A node is skipped when its
// round has two or more nodes and no sampled edge touches it (intra in/out,
// inter in from the previous round, inter out to the next); a single-node
// round always runs its node (degenerate solo case).
std::vector<std::vector<bool>> participating_cells(const GraphSample& sample);

} // namespace commdrop

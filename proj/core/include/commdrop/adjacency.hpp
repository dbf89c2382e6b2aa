#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "commdrop/matrix.hpp"
#include "commdrop/team.hpp"

namespace commdrop {

// Trainable edge weights are clipped to [kEpsilonClip, 1 - kEpsilonClip] so
// log-gradients stay finite and no edge becomes impossible or certain.
inline constexpr double kEpsilonClip = 0.01;

enum class InterShape { UpperTriangular, Full };

// Weighted adjacency for a T-round communication graph. intra[t] holds the
// within-round edge weights for round t (N(t) x N(t)); inter[t] holds the
// weights for edges from round t to round t+1 (N(t) x N(t+1)). Node dropout
// removes rows/columns, so per-round node sets (and matrix shapes) diverge
// over the pipeline; round_node_ids is the authority on who is where.
struct AdjacencySet {
    std::vector<std::vector<std::string>> round_node_ids;
    std::vector<Matrix> intra;
    std::vector<Matrix> inter;
    std::vector<BoolMatrix> intra_mask; // true where the entry is trainable
    std::vector<BoolMatrix> inter_mask;
    InterShape inter_shape = InterShape::UpperTriangular;

    int rounds() const { return int(round_node_ids.size()); }
    int node_count(int round) const { return int(round_node_ids[round].size()); }

    // Index of agent_id within round's node list, -1 if dropped from it.
    int node_index(int round, const std::string& agent_id) const;

    // Shape coherence plus the weight-range invariant: trainable entries in
    // [kEpsilonClip, 1 - kEpsilonClip] or exactly 0.5 pre-clip, untrainable
    // entries exactly 0. Throws ContractError.
    void validate() const;

    std::string to_json_string() const;
    static AdjacencySet from_json_string(const std::string& text); // throws SchemaError
};

// Builds the initial weighted adjacency for a team: every trainable entry
// 0.5, everything else 0. Trainability is set by the team's topology
// (fully_connected: all off-diagonal intra pairs; layered: only layer k ->
// layer k+1 pairs; random: off-diagonal pairs kept independently with the
// configured probability, decided by `seed`) and by `inter_shape` for the
// cross-round matrices (strict upper triangle by default, all off-diagonal
// pairs with Full).
AdjacencySet init_adjacency(const TeamSpec& team,
                            InterShape inter_shape = InterShape::UpperTriangular,
                            uint64_t seed = 0);

// Clamps every trainable entry to [kEpsilonClip, 1 - kEpsilonClip].
void clip_trainable(AdjacencySet& adj);

// Resets every trainable entry to `value`, preserving masks and shapes.
void reinitialize_trainable(AdjacencySet& adj, double value = 0.5);

} // namespace commdrop

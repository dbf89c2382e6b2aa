#include "commdrop/graph_sample.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "commdrop/rng.hpp"

namespace commdrop {

bool GraphSample::has_intra_edge(int round, int src, int dst) const {
    const auto& edges = intra_edges[round];
    return std::find(edges.begin(), edges.end(), std::make_pair(src, dst)) != edges.end();
}

bool GraphSample::has_inter_edge(int boundary, int src, int dst) const {
    const auto& edges = inter_edges[boundary];
    return std::find(edges.begin(), edges.end(), std::make_pair(src, dst)) != edges.end();
}

GraphSample dag_sample(const AdjacencySet& adj, uint64_t seed, LikelihoodMode mode) {
    adj.validate();
    int T = adj.rounds();

    GraphSample s;
    s.round_node_ids = adj.round_node_ids;
    s.intra_edges.resize(T);
    s.inter_edges.resize(std::max(0, T - 1));
    s.topo_order.resize(T);
    s.log_prob_mode = mode;

    double log_prob = 0.0;
    for (int t = 0; t < T; ++t) {
        int n = adj.node_count(t);
        Rng rng(derive_seed(seed, {hash_str("round"), uint64_t(t)}));

        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        s.topo_order[t] = order;

        // Only pairs running forward along the drawn order are candidates
        // this draw; pairs pointing backward are not sampled at all, which is
        // what guarantees acyclicity within the round.
        for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b) {
                int i = order[a], j = order[b];
                if (!adj.intra_mask[t](i, j)) continue;
                double w = adj.intra[t](i, j);
                if (rng.bernoulli(w)) {
                    s.intra_edges[t].emplace_back(i, j);
                    log_prob += std::log(w);
                } else if (mode == LikelihoodMode::Bernoulli) {
                    log_prob += std::log1p(-w);
                }
            }
    }
    for (int t = 0; t + 1 < T; ++t) {
        int r = adj.node_count(t), c = adj.node_count(t + 1);
        Rng rng(derive_seed(seed, {hash_str("boundary"), uint64_t(t)}));
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) {
                if (!adj.inter_mask[t](i, j)) continue;
                double w = adj.inter[t](i, j);
                if (rng.bernoulli(w)) {
                    s.inter_edges[t].emplace_back(i, j);
                    log_prob += std::log(w);
                } else if (mode == LikelihoodMode::Bernoulli) {
                    log_prob += std::log1p(-w);
                }
            }
    }
    s.log_prob = log_prob;
    return s;
}

namespace {

void check_sample_matches(const AdjacencySet& adj, const GraphSample& sample) {
    if (sample.rounds() != adj.rounds())
        throw ContractError("sample round count does not match adjacency");
    for (int t = 0; t < adj.rounds(); ++t) {
        if (sample.round_node_ids[t] != adj.round_node_ids[t])
            throw ContractError("sample node ids do not match adjacency at round " +
                                std::to_string(t + 1));
        int n = adj.node_count(t);
        if (int(sample.topo_order[t].size()) != n)
            throw ContractError("topo_order length mismatch at round " + std::to_string(t + 1));
        std::vector<bool> seen(n, false);
        for (int idx : sample.topo_order[t]) {
            if (idx < 0 || idx >= n || seen[idx])
                throw ContractError("topo_order is not a permutation at round " +
                                    std::to_string(t + 1));
            seen[idx] = true;
        }
    }
}

} // namespace

double sampling_probability(const AdjacencySet& adj, const GraphSample& sample,
                            LikelihoodMode mode, ProbabilityScope scope) {
    check_sample_matches(adj, sample);
    int T = adj.rounds();
    double log_prob = 0.0;

    for (int t = 0; t < T; ++t) {
        int n = adj.node_count(t);
        std::vector<int> pos(n);
        for (int a = 0; a < n; ++a) pos[sample.topo_order[t][a]] = a;

        for (auto [i, j] : sample.intra_edges[t]) {
            if (i < 0 || i >= n || j < 0 || j >= n || !adj.intra_mask[t](i, j))
                throw ContractError("sampled intra edge is not a trainable pair");
            if (pos[i] >= pos[j])
                throw ContractError("sampled intra edge violates the stored order");
            log_prob += std::log(adj.intra[t](i, j));
        }
        if (mode == LikelihoodMode::Bernoulli) {
            for (int a = 0; a < n; ++a)
                for (int b = a + 1; b < n; ++b) {
                    int i = sample.topo_order[t][a], j = sample.topo_order[t][b];
                    if (!adj.intra_mask[t](i, j)) continue;
                    if (!sample.has_intra_edge(t, i, j))
                        log_prob += std::log1p(-adj.intra[t](i, j));
                }
        }
    }
    if (scope == ProbabilityScope::Joint) {
        for (int t = 0; t + 1 < T; ++t) {
            int r = adj.node_count(t), c = adj.node_count(t + 1);
            for (auto [i, j] : sample.inter_edges[t]) {
                if (i < 0 || i >= r || j < 0 || j >= c || !adj.inter_mask[t](i, j))
                    throw ContractError("sampled inter edge is not a trainable pair");
                log_prob += std::log(adj.inter[t](i, j));
            }
            if (mode == LikelihoodMode::Bernoulli) {
                for (int i = 0; i < r; ++i)
                    for (int j = 0; j < c; ++j)
                        if (adj.inter_mask[t](i, j) && !sample.has_inter_edge(t, i, j))
                            log_prob += std::log1p(-adj.inter[t](i, j));
            }
        }
    }
    return std::exp(log_prob);
}

bool is_acyclic(const GraphSample& sample) {
    // Kahn's algorithm over the unrolled graph: cell (t, i) is a vertex.
    int T = sample.rounds();
    std::vector<int> base(T + 1, 0);
    for (int t = 0; t < T; ++t) base[t + 1] = base[t] + int(sample.round_node_ids[t].size());
    int V = base[T];

    std::vector<std::vector<int>> out(V);
    std::vector<int> indeg(V, 0);
    auto add = [&](int u, int v) {
        out[u].push_back(v);
        ++indeg[v];
    };
    for (int t = 0; t < T; ++t)
        for (auto [i, j] : sample.intra_edges[t]) add(base[t] + i, base[t] + j);
    for (int t = 0; t + 1 < T; ++t)
        for (auto [i, j] : sample.inter_edges[t]) add(base[t] + i, base[t + 1] + j);

    std::vector<int> queue;
    for (int v = 0; v < V; ++v)
        if (indeg[v] == 0) queue.push_back(v);
    int removed = 0;
    while (!queue.empty()) {
        int u = queue.back();
        queue.pop_back();
        ++removed;
        for (int v : out[u])
            if (--indeg[v] == 0) queue.push_back(v);
    }
    return removed == V;
}

std::vector<std::vector<bool>> participating_cells(const GraphSample& sample) {
    int T = sample.rounds();
    std::vector<std::vector<bool>> part(T);
    for (int t = 0; t < T; ++t) {
        int n = int(sample.round_node_ids[t].size());
        part[t].assign(n, n == 1); // singleton rounds always run their node
    }
    for (int t = 0; t < T; ++t)
        for (auto [i, j] : sample.intra_edges[t]) {
            part[t][i] = true;
            part[t][j] = true;
        }
    for (int t = 0; t + 1 < T; ++t)
        for (auto [i, j] : sample.inter_edges[t]) {
            part[t][i] = true;
            part[t + 1][j] = true;
        }
    return part;
}

} // namespace commdrop

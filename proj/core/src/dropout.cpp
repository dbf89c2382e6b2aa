#include "commdrop/dropout.hpp"

#include <algorithm>
#include <cmath>

namespace commdrop {

std::vector<int> topk_nodes(const Matrix& m, double keep_fraction) {
    if (m.rows != m.cols) throw ContractError("topk_nodes needs a square matrix");
    if (keep_fraction <= 0.0 || keep_fraction > 1.0)
        throw ConfigError("keep_fraction must lie in (0, 1]");
    int n = m.rows;
    int excluded = int(std::ceil((1.0 - keep_fraction) * n));
    if (excluded >= n) throw ConfigError("keep_fraction excludes every node");

    std::vector<double> degree(n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            degree[i] += m(i, j); // out
            degree[j] += m(i, j); // in
        }

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    // Highest degree first; equal degrees keep the lower index.
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (degree[a] != degree[b]) return degree[a] > degree[b];
        return a < b;
    });
    std::vector<int> kept(order.begin(), order.begin() + (n - excluded));
    std::sort(kept.begin(), kept.end());
    return kept;
}

namespace {

Matrix take_submatrix(const Matrix& m, const std::vector<int>& rows,
                      const std::vector<int>& cols) {
    Matrix out(int(rows.size()), int(cols.size()));
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < cols.size(); ++j) out(int(i), int(j)) = m(rows[i], cols[j]);
    return out;
}

BoolMatrix take_submask(const BoolMatrix& m, const std::vector<int>& rows,
                        const std::vector<int>& cols) {
    BoolMatrix out(int(rows.size()), int(cols.size()));
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < cols.size(); ++j) out.set(int(i), int(j), m(rows[i], cols[j]));
    return out;
}

} // namespace

NodeDropoutResult node_dropout(const AdjacencySet& adj, double alpha) {
    adj.validate();
    if (alpha < 0.0 || alpha >= 1.0) throw ConfigError("alpha must lie in [0, 1)");
    int T = adj.rounds();

    NodeDropoutResult result;
    result.dropped.resize(T);
    std::vector<std::vector<int>> kept_per_round(T);
    for (int t = 0; t < T; ++t) {
        int n = adj.node_count(t);
        int d = int(std::ceil(alpha * n));
        if (d >= n)
            throw ConfigError("alpha*N would drop every node in round " + std::to_string(t + 1));
        std::vector<int> kept = topk_nodes(adj.intra[t], 1.0 - alpha);
        kept_per_round[t] = kept;
        std::vector<bool> is_kept(n, false);
        for (int i : kept) is_kept[i] = true;
        for (int i = 0; i < n; ++i)
            if (!is_kept[i]) result.dropped[t].push_back(adj.round_node_ids[t][i]);
    }

    AdjacencySet out;
    out.inter_shape = adj.inter_shape;
    for (int t = 0; t < T; ++t) {
        const auto& kept = kept_per_round[t];
        std::vector<std::string> ids;
        for (int i : kept) ids.push_back(adj.round_node_ids[t][i]);
        out.round_node_ids.push_back(std::move(ids));
        out.intra.push_back(take_submatrix(adj.intra[t], kept, kept));
        out.intra_mask.push_back(take_submask(adj.intra_mask[t], kept, kept));
    }
    for (int t = 0; t + 1 < T; ++t) {
        out.inter.push_back(
            take_submatrix(adj.inter[t], kept_per_round[t], kept_per_round[t + 1]));
        out.inter_mask.push_back(
            take_submask(adj.inter_mask[t], kept_per_round[t], kept_per_round[t + 1]));
    }
    result.adj = std::move(out);
    return result;
}

EdgeDropoutResult edge_dropout(const AdjacencySet& adj, double beta) {
    adj.validate();
    if (beta < 0.0 || beta >= 1.0) throw ConfigError("beta must lie in [0, 1)");

    EdgeDropoutResult result;
    result.adj = adj;

    struct Entry {
        double weight;
        int row, col;
    };
    auto prune = [&](Matrix& w, BoolMatrix& mask, DroppedEdge::Kind kind, int location,
                     const std::vector<std::string>& src_ids,
                     const std::vector<std::string>& dst_ids) {
        std::vector<Entry> entries;
        for (int i = 0; i < w.rows; ++i)
            for (int j = 0; j < w.cols; ++j)
                if (mask(i, j)) entries.push_back({w(i, j), i, j});
        if (entries.empty()) return;
        int keep = int(std::ceil((1.0 - beta) * double(entries.size())));
        // Largest first; ties keep the lexicographically smaller (row, col).
        std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
            if (a.weight != b.weight) return a.weight > b.weight;
            if (a.row != b.row) return a.row < b.row;
            return a.col < b.col;
        });
        for (size_t k = keep; k < entries.size(); ++k) {
            const Entry& e = entries[k];
            w(e.row, e.col) = 0.0;
            mask.set(e.row, e.col, false);
            result.dropped.push_back({kind, location, src_ids[e.row], dst_ids[e.col]});
        }
    };

    int T = result.adj.rounds();
    for (int t = 0; t < T; ++t)
        prune(result.adj.intra[t], result.adj.intra_mask[t], DroppedEdge::Kind::Intra, t + 1,
              result.adj.round_node_ids[t], result.adj.round_node_ids[t]);
    for (int t = 0; t + 1 < T; ++t)
        prune(result.adj.inter[t], result.adj.inter_mask[t], DroppedEdge::Kind::Inter, t + 2,
              result.adj.round_node_ids[t], result.adj.round_node_ids[t + 1]);
    return result;
}

} // namespace commdrop

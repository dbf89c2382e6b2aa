#include "commdrop/adjacency.hpp"

#include <nlohmann/json.hpp>

#include "commdrop/rng.hpp"

using nlohmann::json;

namespace commdrop {

namespace {

constexpr int kAdjacencyFormatVersion = 1;

json matrix_to_json(const Matrix& m) {
    return json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

json mask_to_json(const BoolMatrix& m) {
    std::vector<int> bits(m.data.begin(), m.data.end());
    return json{{"rows", m.rows}, {"cols", m.cols}, {"data", bits}};
}

Matrix matrix_from_json(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
        throw SchemaError("matrix needs rows/cols/data", where);
    Matrix m;
    m.rows = j.at("rows").get<int>();
    m.cols = j.at("cols").get<int>();
    if (m.rows < 0 || m.cols < 0) throw SchemaError("negative matrix dimension", where);
    const auto& data = j.at("data");
    if (!data.is_array() || int64_t(data.size()) != int64_t(m.rows) * m.cols)
        throw SchemaError("matrix data length does not match rows*cols", where + "/data");
    m.data.reserve(data.size());
    for (const auto& v : data) {
        if (!v.is_number()) throw SchemaError("matrix data must be numeric", where + "/data");
        m.data.push_back(v.get<double>());
    }
    return m;
}

BoolMatrix mask_from_json(const json& j, const std::string& where) {
    Matrix raw = matrix_from_json(j, where);
    BoolMatrix m(raw.rows, raw.cols);
    for (size_t i = 0; i < raw.data.size(); ++i) {
        double v = raw.data[i];
        if (v != 0.0 && v != 1.0) throw SchemaError("mask entries must be 0 or 1", where + "/data");
        m.data[i] = v != 0.0;
    }
    return m;
}

void check_entry_range(double v, bool trainable, const char* which) {
    if (trainable) {
        if (v < kEpsilonClip || v > 1.0 - kEpsilonClip)
            throw ContractError(std::string(which) +
                                " trainable entry outside [eps, 1-eps]: " + std::to_string(v));
    } else if (v != 0.0) {
        throw ContractError(std::string(which) + " untrainable entry must be 0");
    }
}

} // namespace

int AdjacencySet::node_index(int round, const std::string& agent_id) const {
    const auto& ids = round_node_ids[round];
    for (int i = 0; i < int(ids.size()); ++i)
        if (ids[i] == agent_id) return i;
    return -1;
}

void AdjacencySet::validate() const {
    int T = rounds();
    if (T < 1) throw ContractError("adjacency needs at least one round");
    if (int(intra.size()) != T || int(intra_mask.size()) != T)
        throw ContractError("intra matrices/masks must have one entry per round");
    if (int(inter.size()) != T - 1 || int(inter_mask.size()) != T - 1)
        throw ContractError("inter matrices/masks must have T-1 entries");
    for (int t = 0; t < T; ++t) {
        int n = node_count(t);
        if (n < 1) throw ContractError("round " + std::to_string(t + 1) + " has no nodes");
        if (intra[t].rows != n || intra[t].cols != n)
            throw ContractError("intra matrix shape mismatch at round " + std::to_string(t + 1));
        if (intra_mask[t].rows != n || intra_mask[t].cols != n)
            throw ContractError("intra mask shape mismatch at round " + std::to_string(t + 1));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (i == j && intra_mask[t](i, j))
                    throw ContractError("intra diagonal must be untrainable");
                check_entry_range(intra[t](i, j), intra_mask[t](i, j), "intra");
            }
    }
    for (int t = 0; t + 1 < T; ++t) {
        int r = node_count(t), c = node_count(t + 1);
        if (inter[t].rows != r || inter[t].cols != c)
            throw ContractError("inter matrix shape mismatch at boundary " + std::to_string(t + 2));
        if (inter_mask[t].rows != r || inter_mask[t].cols != c)
            throw ContractError("inter mask shape mismatch at boundary " + std::to_string(t + 2));
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j)
                check_entry_range(inter[t](i, j), inter_mask[t](i, j), "inter");
    }
}

std::string AdjacencySet::to_json_string() const {
    json doc;
    doc["version"] = kAdjacencyFormatVersion;
    doc["round_node_ids"] = round_node_ids;
    doc["intra"] = json::array();
    for (const auto& m : intra) doc["intra"].push_back(matrix_to_json(m));
    doc["inter"] = json::array();
    for (const auto& m : inter) doc["inter"].push_back(matrix_to_json(m));
    doc["masks"]["intra"] = json::array();
    for (const auto& m : intra_mask) doc["masks"]["intra"].push_back(mask_to_json(m));
    doc["masks"]["inter"] = json::array();
    for (const auto& m : inter_mask) doc["masks"]["inter"].push_back(mask_to_json(m));
    doc["inter_shape"] = inter_shape == InterShape::UpperTriangular ? "upper_triangular" : "full";
    return doc.dump();
}

AdjacencySet AdjacencySet::from_json_string(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("adjacency JSON parse failed: ") + e.what());
    }
    if (!doc.is_object()) throw SchemaError("adjacency document must be an object", "");
    if (doc.value("version", -1) != kAdjacencyFormatVersion)
        throw SchemaError("unsupported adjacency format version", "/version");

    AdjacencySet adj;
    if (!doc.contains("round_node_ids") || !doc["round_node_ids"].is_array())
        throw SchemaError("missing round_node_ids", "/round_node_ids");
    for (const auto& round : doc["round_node_ids"]) {
        std::vector<std::string> ids;
        for (const auto& id : round) {
            if (!id.is_string()) throw SchemaError("node ids must be strings", "/round_node_ids");
            ids.push_back(id.get<std::string>());
        }
        adj.round_node_ids.push_back(std::move(ids));
    }
    auto get_array = [](const json& parent, const char* key, const std::string& base) -> const json& {
        if (!parent.contains(key) || !parent[key].is_array())
            throw SchemaError(std::string("missing array '") + key + "'", base);
        return parent[key];
    };
    {
        int i = 0;
        for (const auto& m : get_array(doc, "intra", "/intra"))
            adj.intra.push_back(matrix_from_json(m, "/intra/" + std::to_string(i++)));
    }
    {
        int i = 0;
        for (const auto& m : get_array(doc, "inter", "/inter"))
            adj.inter.push_back(matrix_from_json(m, "/inter/" + std::to_string(i++)));
    }
    if (!doc.contains("masks") || !doc["masks"].is_object())
        throw SchemaError("missing masks", "/masks");
    {
        int i = 0;
        for (const auto& m : get_array(doc["masks"], "intra", "/masks/intra"))
            adj.intra_mask.push_back(mask_from_json(m, "/masks/intra/" + std::to_string(i++)));
    }
    {
        int i = 0;
        for (const auto& m : get_array(doc["masks"], "inter", "/masks/inter"))
            adj.inter_mask.push_back(mask_from_json(m, "/masks/inter/" + std::to_string(i++)));
    }

    std::string shape = doc.value("inter_shape", "upper_triangular");
    if (shape == "upper_triangular")
        adj.inter_shape = InterShape::UpperTriangular;
    else if (shape == "full")
        adj.inter_shape = InterShape::Full;
    else
        throw SchemaError("unknown inter_shape '" + shape + "'", "/inter_shape");

    try {
        adj.validate();
    } catch (const ContractError& e) {
        throw SchemaError(std::string("adjacency invariant violated: ") + e.what());
    }
    return adj;
}

AdjacencySet init_adjacency(const TeamSpec& team, InterShape inter_shape, uint64_t seed) {
    team.validate();
    int N = team.size();
    int T = team.rounds;

    // For random topology, trainability of each ordered pair is decided once
    // and shared by every round, so all rounds start structurally identical.
    BoolMatrix pair_trainable(N, N, false);
    Rng rng(derive_seed(seed, {hash_str("topology")}));
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            if (i == j) continue;
            bool on = false;
            switch (team.topology.kind) {
            case TopologyKind::FullyConnected:
                on = true;
                break;
            case TopologyKind::Layered: {
                int li = -1, lj = -1, base = 0, layer = 0;
                for (int sz : team.topology.layer_sizes) {
                    if (i >= base && i < base + sz) li = layer;
                    if (j >= base && j < base + sz) lj = layer;
                    base += sz;
                    ++layer;
                }
                on = lj == li + 1;
                break;
            }
            case TopologyKind::Random:
                on = rng.bernoulli(team.topology.edge_probability);
                break;
            }
            pair_trainable.set(i, j, on);
        }

    AdjacencySet adj;
    adj.inter_shape = inter_shape;
    std::vector<std::string> ids;
    for (const auto& a : team.agents) ids.push_back(a.agent_id);
    for (int t = 0; t < T; ++t) adj.round_node_ids.push_back(ids);

    for (int t = 0; t < T; ++t) {
        Matrix w(N, N, 0.0);
        BoolMatrix m = pair_trainable;
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j)
                if (m(i, j)) w(i, j) = 0.5;
        adj.intra.push_back(std::move(w));
        adj.intra_mask.push_back(std::move(m));
    }
    for (int t = 0; t + 1 < T; ++t) {
        Matrix w(N, N, 0.0);
        BoolMatrix m(N, N, false);
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                if (i == j) continue;
                bool on = inter_shape == InterShape::Full || j > i;
                if (on) {
                    m.set(i, j, true);
                    w(i, j) = 0.5;
                }
            }
        adj.inter.push_back(std::move(w));
        adj.inter_mask.push_back(std::move(m));
    }
    return adj;
}

void clip_trainable(AdjacencySet& adj) {
    auto clip = [](Matrix& w, const BoolMatrix& m) {
        for (int i = 0; i < w.rows; ++i)
            for (int j = 0; j < w.cols; ++j)
                if (m(i, j)) {
                    double v = w(i, j);
                    if (v < kEpsilonClip) v = kEpsilonClip;
                    if (v > 1.0 - kEpsilonClip) v = 1.0 - kEpsilonClip;
                    w(i, j) = v;
                }
    };
    for (size_t t = 0; t < adj.intra.size(); ++t) clip(adj.intra[t], adj.intra_mask[t]);
    for (size_t t = 0; t < adj.inter.size(); ++t) clip(adj.inter[t], adj.inter_mask[t]);
}

void reinitialize_trainable(AdjacencySet& adj, double value) {
    auto reset = [value](Matrix& w, const BoolMatrix& m) {
        for (int i = 0; i < w.rows; ++i)
            for (int j = 0; j < w.cols; ++j)
                w(i, j) = m(i, j) ? value : 0.0;
    };
    for (size_t t = 0; t < adj.intra.size(); ++t) reset(adj.intra[t], adj.intra_mask[t]);
    for (size_t t = 0; t < adj.inter.size(); ++t) reset(adj.inter[t], adj.inter_mask[t]);
}

} // namespace commdrop

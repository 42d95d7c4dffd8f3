#include "supou/graph.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace supou {

GraphSpec::GraphSpec(Matrix adjacency, bool undirected)
    : adjacency_(std::move(adjacency)), undirected_(undirected) {
    if (adjacency_.rows() == 0 || adjacency_.rows() != adjacency_.cols()) {
        throw ConfigError("adjacency matrix must be square and non-empty");
    }
    const auto d = adjacency_.rows();
    for (Eigen::Index i = 0; i < d; ++i) {
        if (adjacency_(i, i) != 0.0) {
            throw ConfigError("adjacency matrix has nonzero diagonal at node " + std::to_string(i));
        }
        for (Eigen::Index j = 0; j < d; ++j) {
            const double a = adjacency_(i, j);
            if (a != 0.0 && a != 1.0) {
                throw ConfigError("adjacency entries must be 0 or 1");
            }
            if (undirected_ && a != adjacency_(j, i)) {
                throw ConfigError("undirected graph requires a symmetric adjacency matrix");
            }
        }
    }
}

GraphSpec GraphSpec::from_edges(int d, const std::vector<std::pair<int, int>>& edges,
                                bool undirected) {
    if (d <= 0) throw ConfigError("graph dimension must be positive");
    Matrix a = Matrix::Zero(d, d);
    std::set<std::pair<int, int>> seen;
    for (const auto& [i, j] : edges) {
        if (i < 0 || j < 0 || i >= d || j >= d) {
            throw ConfigError("edge [" + std::to_string(i) + "," + std::to_string(j) +
                              "] references a node outside 0.." + std::to_string(d - 1));
        }
        if (i == j) throw ConfigError("self-loop at node " + std::to_string(i));
        const std::pair<int, int> key =
            undirected ? std::pair{std::min(i, j), std::max(i, j)} : std::pair{i, j};
        if (!seen.insert(key).second) {
            throw ConfigError("duplicate edge [" + std::to_string(i) + "," + std::to_string(j) + "]");
        }
        a(i, j) = 1.0;
        if (undirected) a(j, i) = 1.0;
    }
    return GraphSpec(std::move(a), undirected);
}

GraphSpec GraphSpec::from_json_text(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("graph JSON: ") + e.what());
    }
    if (!doc.contains("d") || !doc["d"].is_number_integer())
        throw ConfigError("graph JSON: missing integer field 'd'");
    if (!doc.contains("edges") || !doc["edges"].is_array())
        throw ConfigError("graph JSON: missing array field 'edges'");
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : doc["edges"]) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
            throw ConfigError("graph JSON: each edge must be [i, j] with integer nodes");
        edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    const bool undirected = doc.value("undirected", true);
    return from_edges(doc["d"].get<int>(), edges, undirected);
}

GraphSpec GraphSpec::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open graph file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

NormalizedGraph row_normalize(const GraphSpec& g, bool with_symmetric) {
    const Matrix& a = g.adjacency();
    const int d = g.dimension();
    NormalizedGraph out;
    out.divisors.resize(d);
    out.row_normalized.resize(d, d);
    for (int i = 0; i < d; ++i) {
        const double degree = a.row(i).sum();
        out.divisors(i) = std::max(1.0, degree);
        out.row_normalized.row(i) = a.row(i) / out.divisors(i);
    }
    if (with_symmetric) {
        // D_ii is the in-degree plus out-degree; isolated nodes get a zero row and column.
        Vector inv_sqrt(d);
        for (int i = 0; i < d; ++i) {
            const double deg = a.row(i).sum() + a.col(i).sum();
            inv_sqrt(i) = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
        }
        out.symmetric_normalized = inv_sqrt.asDiagonal() * a.transpose() * inv_sqrt.asDiagonal();
    }
    return out;
}

ThetaParams ThetaParams::from_ratio(double c, double theta2) {
    return ThetaParams{c * theta2, theta2};
}

bool ThetaParams::admissible() const {
    return theta2 > 0.0 && theta2 > std::abs(theta1);
}

Matrix build_q(const ThetaParams& theta, const NormalizedGraph& ng) {
    const int d = ng.dimension();
    return -(theta.theta2 * Matrix::Identity(d, d) + theta.theta1 * ng.row_normalized);
}

Matrix direction_matrix(double c, const NormalizedGraph& ng) {
    const int d = ng.dimension();
    return -Matrix::Identity(d, d) - c * ng.row_normalized;
}

double spectral_abscissa(const Matrix& q) {
    if (q.rows() != q.cols()) throw DomainError("spectral abscissa of a non-square matrix");
    Eigen::EigenSolver<Matrix> es(q, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) throw DomainError("eigenvalue iteration did not converge");
    return es.eigenvalues().real().maxCoeff();
}

bool is_stable(const Matrix& q) {
    return spectral_abscissa(q) < 0.0;
}

}  // namespace supou

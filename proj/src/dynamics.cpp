#include "swsynth/dynamics.hpp"

#include <fmt/format.h>

#include "swsynth/errors.hpp"

namespace swsynth {

KnownMap KnownMap::zero(std::size_t dim) { return KnownMap(Kind::zero, dim, {}); }

KnownMap KnownMap::identity(std::size_t dim) { return KnownMap(Kind::identity, dim, {}); }

KnownMap KnownMap::linear(Eigen::MatrixXd matrix) {
    if (matrix.rows() != matrix.cols() || matrix.rows() == 0) {
        throw std::invalid_argument("linear known dynamics needs a square matrix");
    }
    const auto n = static_cast<std::size_t>(matrix.rows());
    return KnownMap(Kind::linear, n, std::move(matrix));
}

Vector KnownMap::operator()(std::span<const double> x) const {
    if (x.size() != dim_) throw std::invalid_argument("known map: dimension mismatch");
    switch (kind_) {
        case Kind::zero:
            return Vector(dim_, 0.0);
        case Kind::identity:
            return Vector(x.begin(), x.end());
        case Kind::linear: {
            Vector y(dim_, 0.0);
            for (std::size_t i = 0; i < dim_; ++i) {
                for (std::size_t j = 0; j < dim_; ++j) y[i] += matrix_(i, j) * x[j];
            }
            return y;
        }
    }
    return {};
}

Box KnownMap::image(const Box& q) const {
    if (q.dim() != dim_) throw std::invalid_argument("known map: dimension mismatch");
    switch (kind_) {
        case Kind::zero:
            return Box(Vector(dim_, 0.0), Vector(dim_, 0.0));
        case Kind::identity:
            return q;
        case Kind::linear: {
            // Center/radius form is exact for a linear image of a box.
            Vector lo(dim_), hi(dim_);
            for (std::size_t i = 0; i < dim_; ++i) {
                double c = 0.0, r = 0.0;
                for (std::size_t j = 0; j < dim_; ++j) {
                    const double mid = 0.5 * (q.lower(j) + q.upper(j));
                    const double rad = 0.5 * (q.upper(j) - q.lower(j));
                    c += matrix_(i, j) * mid;
                    r += std::abs(matrix_(i, j)) * rad;
                }
                lo[i] = c - r;
                hi[i] = c + r;
            }
            return Box(std::move(lo), std::move(hi));
        }
    }
    return q;
}

nlohmann::json to_json(const KnownMap& f) {
    switch (f.kind()) {
        case KnownMap::Kind::zero:
            return {{"kind", "zero"}};
        case KnownMap::Kind::identity:
            return {{"kind", "identity"}};
        case KnownMap::Kind::linear: {
            nlohmann::json rows = nlohmann::json::array();
            for (Eigen::Index i = 0; i < f.matrix().rows(); ++i) {
                std::vector<double> row(f.matrix().cols());
                for (Eigen::Index j = 0; j < f.matrix().cols(); ++j) row[j] = f.matrix()(i, j);
                rows.push_back(row);
            }
            return {{"kind", "linear"}, {"matrix", rows}};
        }
    }
    return {};
}

KnownMap known_map_from_json(const nlohmann::json& j, std::size_t dim) {
    for (const auto& [key, _] : j.items()) {
        if (key != "kind" && key != "matrix") throw ConfigError(fmt::format("unknown key '{}' in known dynamics", key));
    }
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "zero") return KnownMap::zero(dim);
    if (kind == "identity") return KnownMap::identity(dim);
    if (kind == "linear") {
        const auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
        if (rows.size() != dim) throw ConfigError("linear known dynamics: matrix has wrong row count");
        Eigen::MatrixXd m(dim, dim);
        for (std::size_t i = 0; i < dim; ++i) {
            if (rows[i].size() != dim) throw ConfigError("linear known dynamics: matrix has wrong column count");
            for (std::size_t k = 0; k < dim; ++k) m(i, k) = rows[i][k];
        }
        return KnownMap::linear(std::move(m));
    }
    throw ConfigError(fmt::format("unknown known-dynamics kind '{}'", kind));
}

}  // namespace swsynth

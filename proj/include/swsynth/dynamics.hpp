#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "swsynth/geometry.hpp"

namespace swsynth {

/// The a-priori known part f_u of one mode. Only maps with an exact box
/// image are supported: zero, identity and linear.
class KnownMap {
public:
    enum class Kind { zero, identity, linear };

    static KnownMap zero(std::size_t dim);
    static KnownMap identity(std::size_t dim);
    static KnownMap linear(Eigen::MatrixXd matrix);

    Kind kind() const { return kind_; }
    std::size_t dim() const { return dim_; }
    const Eigen::MatrixXd& matrix() const { return matrix_; }

    Vector operator()(std::span<const double> x) const;
    /// Smallest box containing {f(x) : x in q}.
    Box image(const Box& q) const;

private:
    KnownMap(Kind kind, std::size_t dim, Eigen::MatrixXd matrix)
        : kind_(kind), dim_(dim), matrix_(std::move(matrix)) {}

    Kind kind_;
    std::size_t dim_;
    Eigen::MatrixXd matrix_;
};

/// Indexed by mode - 1.
using KnownDynamics = std::vector<KnownMap>;

nlohmann::json to_json(const KnownMap& f);
KnownMap known_map_from_json(const nlohmann::json& j, std::size_t dim);

}  // namespace swsynth

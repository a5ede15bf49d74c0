#pragma once

#include <cmath>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "swsynth/dynamics.hpp"
#include "swsynth/geometry.hpp"

namespace swsynth {

/// One measured transition x --u--> x_plus. Modes are 1-based.
struct Sample {
    Vector x;
    int mode = 1;
    Vector x_plus;
};

using Dataset = std::vector<Sample>;

/// CSV with header `u,x1..xn,xp1..xpn`.
Dataset read_dataset_csv(std::istream& in);
void write_dataset_csv(std::ostream& out, const Dataset& data, std::size_t dim);

// ---------------------------------------------------------------------------
// Noise

enum class NoiseKind { truncated_gaussian, bounded_uniform };

/// Per-dimension i.i.d. noise. A truncated Gaussian with an infinite bound is
/// an ordinary Gaussian.
struct NoiseModel {
    NoiseKind kind = NoiseKind::truncated_gaussian;
    double std_dev = 0.0;  // truncated_gaussian only
    double bound = 0.0;    // support is [-bound, bound]
    double theta = 0.0;    // sub-Gaussian parameter

    static NoiseModel truncated_gaussian(double std_dev, double bound,
                                         std::optional<double> theta = std::nullopt);
    static NoiseModel bounded_uniform(double bound, std::optional<double> theta = std::nullopt);

    /// P[|v| <= eta] for one component.
    double tail(double eta) const;
    /// Smallest eta with tail(eta) >= p. Throws for p = 1 with unbounded support.
    double quantile(double p) const;
};

Vector noise_tail(const NoiseModel& noise, std::span<const double> eta);

nlohmann::json to_json(const NoiseModel& noise);
NoiseModel noise_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Kernel and GP posterior

/// Squared-exponential kernel s^2 exp(-sum_d (x_d - y_d)^2 / (2 l_d^2)).
/// A single length scale applies to every dimension.
struct Kernel {
    double signal_variance = 1.0;
    Vector length_scale{1.0};

    double length(std::size_t d) const { return length_scale.size() == 1 ? length_scale[0] : length_scale[d]; }
    /// sum_d ((x_d - y_d) / l_d)^2
    double scaled_sqdist(const double* x, const double* y, std::size_t n) const;
    double operator()(const double* x, const double* y, std::size_t n) const;
    /// Kernel value from a scaled squared distance.
    double from_scaled_sqdist(double r2) const { return signal_variance * std::exp(-0.5 * r2); }

    void validate(std::size_t dim) const;
};

nlohmann::json to_json(const Kernel& k);
Kernel kernel_from_json(const nlohmann::json& j);

/// Posterior of one scalar output: mean K(x,X)(K+s I)^-1 Y and variance
/// k(x,x) - K(x,X)(K+s I)^-1 K(X,x), with regression noise sigma = 1 + 2/m.
class GaussianProcess {
public:
    /// An empty posterior (prior). Mean 0, variance s^2.
    explicit GaussianProcess(Kernel kernel, std::size_t dim);

    /// Throws NumericError if the Gram system cannot be factorized even
    /// after jitter escalation.
    static GaussianProcess fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                               const Kernel& kernel);

    double mean(std::span<const double> x) const;
    /// Clamped at zero from below.
    double variance(std::span<const double> x) const;
    /// Unclamped value; may be slightly negative from roundoff.
    double raw_variance(std::span<const double> x) const;

    /// 1/2 log det(I + sigma^-2 K): information gain of the realized dataset.
    double information_gain() const { return info_gain_; }
    /// log p(Y | X) under the GP prior with noise sigma.
    double log_marginal_likelihood() const;

    std::size_t size() const { return static_cast<std::size_t>(inputs_.rows()); }
    std::size_t dim() const { return dim_; }
    double noise_sigma() const { return sigma_; }
    double jitter() const { return jitter_; }
    const Kernel& kernel() const { return kernel_; }
    const Eigen::MatrixXd& inputs() const { return inputs_; }
    const Eigen::VectorXd& targets() const { return targets_; }
    const Eigen::VectorXd& weights() const { return weights_; }
    /// Gram matrix K(X,X) + (sigma^2 + jitter) I.
    Eigen::MatrixXd regularized_gram() const;

private:
    Kernel kernel_;
    std::size_t dim_;
    Eigen::MatrixXd inputs_;  // m x n
    Eigen::VectorXd targets_;
    Eigen::MatrixXd chol_;    // lower factor L of K + (sigma^2 + jitter) I
    Eigen::VectorXd weights_;
    double sigma_ = 1.0;
    double jitter_ = 0.0;
    double info_gain_ = 0.0;
};

/// Picks the kernel with the best marginal likelihood from `grid`.
Kernel select_kernel(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                     std::span<const Kernel> grid);

// ---------------------------------------------------------------------------
// Residual datasets and learned modes

/// Inputs x and residual targets x_plus - f_u(x) of one mode.
struct ResidualData {
    int mode = 1;
    Eigen::MatrixXd inputs;   // m x n
    Eigen::MatrixXd targets;  // m x n, column i is output dimension i
};

/// One entry per mode 1..num_modes, possibly with zero rows.
std::vector<ResidualData> build_residuals(const Dataset& data, const KnownDynamics& known);

struct OutputModel {
    GaussianProcess gp;
    double rkhs_bound = 0.0;
    bool rkhs_heuristic = true;
    /// The gamma entering beta: realized information gain, or an external bound.
    double info_gain = 0.0;
};

struct LearnedMode {
    int mode = 1;
    double theta = 0.0;
    std::vector<OutputModel> outputs;

    std::size_t dim() const { return outputs.size(); }
};

struct LearnOptions {
    /// B_i = kappa * max_j |y_j| unless an explicit bound is given.
    double rkhs_kappa = 2.0;
    /// Explicit B per output dimension, overriding the heuristic.
    std::optional<Vector> rkhs_bounds;
    /// External upper bound on gamma per output dimension.
    std::optional<Vector> info_gain_bounds;
};

LearnedMode learn_mode(const ResidualData& data, const Kernel& kernel, double theta,
                       const LearnOptions& options = {});

/// beta = (theta / sqrt(sigma)) (B + theta sqrt(2 (gamma + 1 + log(1/delta)))).
double beta(const LearnedMode& learned, std::size_t dim, double delta);

/// Largest delta with beta(delta) * sigma_sup <= eps, clamped to
/// [delta_min, 1]. Returns 1 when no confidence is achievable.
double invert_confidence(const LearnedMode& learned, std::size_t dim, double eps, double sigma_sup,
                         double delta_min = 1e-6);

nlohmann::json to_json(const LearnedMode& learned);
/// Refits from the stored data; throws if the stored weights disagree.
LearnedMode learned_mode_from_json(const nlohmann::json& j);

}  // namespace swsynth

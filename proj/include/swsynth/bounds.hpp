#pragma once

#include <vector>

#include "swsynth/dynamics.hpp"
#include "swsynth/geometry.hpp"
#include "swsynth/learning.hpp"

namespace swsynth {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

enum class LambdaMaxMode { row_sum, exact };

struct BoundsOptions {
    /// Maximum number of bisections per axis in the branch-and-bound refinement.
    int refinement_depth = 2;
    LambdaMaxMode lambda_max = LambdaMaxMode::row_sum;
};

/// Upper bound on the largest eigenvalue of K + sigma^2 I.
double gram_lambda_max(const GaussianProcess& gp, LambdaMaxMode mode);

/// Sound range bounds of one GP posterior over boxes. Each training point
/// contributes alpha_j k(x, x_j) whose extremes over a box follow from the
/// nearest and farthest box points to x_j; that interval is intersected with
/// a Taylor bound around the box center.
class PosteriorBounder {
public:
    PosteriorBounder(const GaussianProcess& gp, BoundsOptions options);

    /// Interval containing mu(x) for all x in q.
    Interval mean_range(const Box& q) const;
    /// Upper bound on sigma(x) over q: the smaller of the eigenvalue bound
    /// and a Lipschitz bound around the box center.
    double sigma_sup(const Box& q) const;

    /// Unrefined single-box bounds, exposed for testing the refinement.
    Interval mean_range_unrefined(const Box& q) const;
    /// The two ingredients of mean_range_unrefined. Only the kernel interval
    /// shrinks monotonically on arbitrary sub-boxes.
    Interval kernel_interval(const Box& q) const;
    Interval taylor_interval(const Box& q) const;
    double variance_sup_unrefined(const Box& q) const;

private:
    double mean_at(std::span<const double> x) const;

    const GaussianProcess* gp_;
    BoundsOptions options_;
    double lambda_max_;
    double rkhs_norm_ = 0.0;  // |mu|_H = sqrt(alpha' K alpha)
    static constexpr double roundoff_pad_ = 1e-10;
    std::vector<double> inputs_;  // row-major m x n
    std::vector<double> weights_;
};

Interval mean_range_over_box(const GaussianProcess& gp, const Box& q, const BoundsOptions& options = {});
double sigma_sup_over_box(const GaussianProcess& gp, const Box& q, const BoundsOptions& options = {});

/// Bounding box of Im(q) = {f_u(x) + mu(x) : x in q} for one mode, plus the
/// per-dimension sigma suprema needed for the regression error radius.
class ModeImage {
public:
    ModeImage(const KnownMap& known, const LearnedMode& learned, BoundsOptions options);

    Box image(const Box& q) const;
    Vector sigma_sup(const Box& q) const;

private:
    const KnownMap* known_;
    std::vector<PosteriorBounder> bounders_;
    std::vector<std::size_t> sigma_source_;  // output whose sigma bound equals this one's
};

Box image(const Box& q, const KnownMap& known, const LearnedMode& learned, const BoundsOptions& options = {});

}  // namespace swsynth

#include "swsynth/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace swsynth {

namespace {

struct Node {
    double bound;
    int level;
    Box box;
};

struct NodeLess {
    bool operator()(const Node& a, const Node& b) const { return a.bound < b.bound; }
};

/// Branch-and-bound maximization of a function over q. `eval(box)` returns a
/// sound upper bound over the box together with the exact value at its
/// center, which only serves for pruning. Returns the refined upper bound.
template <class EvalFn>
double refine_max(const Box& q, int max_level, EvalFn eval) {
    const std::size_t n = q.dim();
    const auto [root, root_value] = eval(q);
    if (max_level <= 0) return root;
    std::priority_queue<Node, std::vector<Node>, NodeLess> open;
    open.push({root, 0, q});
    double best_seen = root_value;

    while (!open.empty()) {
        Node node = open.top();
        open.pop();
        // Everything left in the queue is bounded by node.bound.
        if (node.level >= max_level || node.bound <= best_seen) return node.bound;

        const std::size_t children = std::size_t{1} << n;
        for (std::size_t mask = 0; mask < children; ++mask) {
            Vector lo(n), hi(n);
            for (std::size_t d = 0; d < n; ++d) {
                const double mid = 0.5 * (node.box.lower(d) + node.box.upper(d));
                if (mask & (std::size_t{1} << d)) {
                    lo[d] = mid;
                    hi[d] = node.box.upper(d);
                } else {
                    lo[d] = node.box.lower(d);
                    hi[d] = mid;
                }
            }
            Box child(std::move(lo), std::move(hi));
            const auto [b, v] = eval(child);
            best_seen = std::max(best_seen, v);
            // A child bound may exceed its parent's; the parent's still holds.
            open.push({std::min(node.bound, b), node.level + 1, std::move(child)});
        }
    }
    return root;
}

// Scaled squared distances from point p to the nearest and farthest points of q.
void distance_range(const Kernel& kernel, const double* p, const Box& q, double& near2, double& far2) {
    near2 = 0.0;
    far2 = 0.0;
    for (std::size_t d = 0; d < q.dim(); ++d) {
        const double l = kernel.length(d);
        const double lo = q.lower(d), hi = q.upper(d);
        const double nd = p[d] < lo ? lo - p[d] : (p[d] > hi ? p[d] - hi : 0.0);
        const double fd = std::max(std::abs(p[d] - lo), std::abs(p[d] - hi));
        near2 += (nd / l) * (nd / l);
        far2 += (fd / l) * (fd / l);
    }
}

}  // namespace

double gram_lambda_max(const GaussianProcess& gp, LambdaMaxMode mode) {
    if (gp.size() == 0) return 0.0;
    const Eigen::MatrixXd a = gp.regularized_gram();
    if (mode == LambdaMaxMode::exact) {
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
        // Round up a little so roundoff in the solver cannot make the bound unsound.
        return es.eigenvalues().maxCoeff() * (1.0 + 1e-12);
    }
    return a.cwiseAbs().rowwise().sum().maxCoeff();
}

PosteriorBounder::PosteriorBounder(const GaussianProcess& gp, BoundsOptions options)
    : gp_(&gp), options_(options), lambda_max_(gram_lambda_max(gp, options.lambda_max)) {
    const std::size_t m = gp.size(), n = gp.dim();
    inputs_.resize(m * n);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t d = 0; d < n; ++d) inputs_[j * n + d] = gp.inputs()(j, d);
    }
    weights_.assign(gp.weights().begin(), gp.weights().end());
    if (m > 0) {
        const Eigen::MatrixXd k = gp.regularized_gram() -
                                  Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)) *
                                      (gp.noise_sigma() * gp.noise_sigma() + gp.jitter());
        const double norm2 = gp.weights().dot(k * gp.weights());
        rkhs_norm_ = std::sqrt(std::max(0.0, norm2)) * (1.0 + 1e-9);
    }
}

double PosteriorBounder::mean_at(std::span<const double> x) const { return gp_->mean(x); }

Interval PosteriorBounder::kernel_interval(const Box& q) const {
    const auto& kernel = gp_->kernel();
    const std::size_t n = gp_->dim();
    Interval out{0.0, 0.0};
    for (std::size_t j = 0; j < weights_.size(); ++j) {
        double near2, far2;
        distance_range(kernel, &inputs_[j * n], q, near2, far2);
        const double kmax = kernel.from_scaled_sqdist(near2);
        const double kmin = kernel.from_scaled_sqdist(far2);
        const double a = weights_[j];
        if (a > 0) {
            out.hi += a * kmax;
            out.lo += a * kmin;
        } else {
            out.hi += a * kmin;
            out.lo += a * kmax;
        }
    }
    return out;
}

Interval PosteriorBounder::taylor_interval(const Box& q) const {
    const auto& kernel = gp_->kernel();
    const std::size_t n = gp_->dim();
    if (weights_.empty()) return {0.0, 0.0};

    // Second bound: first-order expansion at the center. The remainder is
    // at most 1/2 |mu|_H sup |d_u^2 phi| |x - c|^2, and for this kernel
    // |d_u^2 phi|^2 = 3 s^4 (sum_d u_d^2 / l_d^2)^2 / s^2.
    const Vector c = q.center();
    double mu = 0.0;
    Vector grad(n, 0.0);
    for (std::size_t j = 0; j < weights_.size(); ++j) {
        const double* xj = &inputs_[j * n];
        const double k = weights_[j] * kernel.from_scaled_sqdist(kernel.scaled_sqdist(c.data(), xj, n));
        mu += k;
        for (std::size_t d = 0; d < n; ++d) {
            const double l = kernel.length(d);
            grad[d] -= k * (c[d] - xj[d]) / (l * l);
        }
    }
    double linear = 0.0, r2 = 0.0;
    for (std::size_t d = 0; d < n; ++d) {
        const double half = 0.5 * q.width(d);
        linear += std::abs(grad[d]) * half;
        r2 += (half / kernel.length(d)) * (half / kernel.length(d));
    }
    const double remainder = 0.5 * std::sqrt(3.0 * kernel.signal_variance) * rkhs_norm_ * r2;
    const double slack = linear + remainder + 1e-12 * (std::abs(mu) + linear + remainder);
    return {mu - slack, mu + slack};
}

Interval PosteriorBounder::mean_range_unrefined(const Box& q) const {
    const Interval a = kernel_interval(q), b = taylor_interval(q);
    return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
}

double PosteriorBounder::variance_sup_unrefined(const Box& q) const {
    const auto& kernel = gp_->kernel();
    const double s2 = kernel.signal_variance;
    if (weights_.empty()) return s2;
    const std::size_t n = gp_->dim();
    // K(x,X) (K + s I)^-1 K(X,x) >= |K(x,X)|^2 / lambda_max >= sum_j kmin_j^2 / lambda_max.
    double s = 0.0;
    for (std::size_t j = 0; j < weights_.size(); ++j) {
        double near2, far2;
        distance_range(kernel, &inputs_[j * n], q, near2, far2);
        const double kmin = kernel.from_scaled_sqdist(far2);
        s += kmin * kmin;
    }
    double v = s2 - s / lambda_max_;
    if (v < 0) v = s2;
    // sigma(x) is the distance from the feature of x to a fixed subspace, so it
    // is 1-Lipschitz in the feature metric sqrt(2 (s^2 - k(x, y))).
    const Vector c = q.center();
    double r2 = 0.0;
    for (std::size_t d = 0; d < n; ++d) {
        const double t = 0.5 * q.width(d) / kernel.length(d);
        r2 += t * t;
    }
    const double lip = std::sqrt(2.0 * s2 * -std::expm1(-0.5 * r2));
    const double sc = std::sqrt(gp_->variance(c) + roundoff_pad_ * s2) + lip;
    return std::min(v, sc * sc);
}

Interval PosteriorBounder::mean_range(const Box& q) const {
    if (weights_.empty()) return {0.0, 0.0};
    const int depth = options_.refinement_depth;
    const double hi = refine_max(q, depth, [&](const Box& b) {
        return std::pair{mean_range_unrefined(b).hi, mean_at(b.center())};
    });
    const double neg_lo = refine_max(q, depth, [&](const Box& b) {
        return std::pair{-mean_range_unrefined(b).lo, -mean_at(b.center())};
    });
    return {-neg_lo, hi};
}

double PosteriorBounder::sigma_sup(const Box& q) const {
    if (weights_.empty()) return std::sqrt(gp_->kernel().signal_variance);
    const double v = refine_max(q, options_.refinement_depth, [&](const Box& b) {
        return std::pair{variance_sup_unrefined(b), gp_->variance(b.center())};
    });
    return std::sqrt(std::max(0.0, v));
}

Interval mean_range_over_box(const GaussianProcess& gp, const Box& q, const BoundsOptions& options) {
    return PosteriorBounder(gp, options).mean_range(q);
}

double sigma_sup_over_box(const GaussianProcess& gp, const Box& q, const BoundsOptions& options) {
    return PosteriorBounder(gp, options).sigma_sup(q);
}

ModeImage::ModeImage(const KnownMap& known, const LearnedMode& learned, BoundsOptions options)
    : known_(&known) {
    if (known.dim() != learned.dim()) throw std::invalid_argument("known map and learned mode differ in dimension");
    bounders_.reserve(learned.dim());
    for (std::size_t i = 0; i < learned.dim(); ++i) {
        const auto& gp = learned.outputs[i].gp;
        bounders_.emplace_back(gp, options);
        sigma_source_.push_back(i);
        for (std::size_t j = 0; j < i; ++j) {
            const auto& other = learned.outputs[j].gp;
            if (other.kernel().signal_variance == gp.kernel().signal_variance &&
                other.kernel().length_scale == gp.kernel().length_scale && other.jitter() == gp.jitter() &&
                other.inputs() == gp.inputs()) {
                sigma_source_[i] = j;
                break;
            }
        }
    }
}

Box ModeImage::image(const Box& q) const {
    const Box f = known_->image(q);
    Vector lo(q.dim()), hi(q.dim());
    for (std::size_t i = 0; i < q.dim(); ++i) {
        const Interval m = bounders_[i].mean_range(q);
        lo[i] = f.lower(i) + m.lo;
        hi[i] = f.upper(i) + m.hi;
    }
    return Box(std::move(lo), std::move(hi));
}

Vector ModeImage::sigma_sup(const Box& q) const {
    Vector out(bounders_.size());
    for (std::size_t i = 0; i < bounders_.size(); ++i) {
        // The variance does not depend on the targets.
        out[i] = sigma_source_[i] < i ? out[sigma_source_[i]] : bounders_[i].sigma_sup(q);
    }
    return out;
}

Box image(const Box& q, const KnownMap& known, const LearnedMode& learned, const BoundsOptions& options) {
    return ModeImage(known, learned, options).image(q);
}

}  // namespace swsynth

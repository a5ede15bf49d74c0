#include "swsynth/learning.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include <boost/math/special_functions/erf.hpp>
#include <fmt/format.h>

#include "swsynth/errors.hpp"

namespace swsynth {

// ---------------------------------------------------------------------------
// Dataset CSV

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& field, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(field, &used);
        if (used != field.size()) throw std::invalid_argument(field);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(fmt::format("dataset line {}: '{}' is not a number", line_no, field));
    }
}

}  // namespace

Dataset read_dataset_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("dataset: missing header line");
    const auto header = split_csv_line(line);
    if (header.empty() || header[0] != "u") {
        throw ConfigError("dataset: header must start with the mode column 'u'");
    }
    if (header.size() < 3 || (header.size() - 1) % 2 != 0) {
        throw ConfigError("dataset: header must be u,x1..xn,xp1..xpn");
    }
    const std::size_t n = (header.size() - 1) / 2;
    for (std::size_t i = 0; i < n; ++i) {
        if (header[1 + i] != fmt::format("x{}", i + 1) || header[1 + n + i] != fmt::format("xp{}", i + 1)) {
            throw ConfigError("dataset: header must be u,x1..xn,xp1..xpn");
        }
    }

    Dataset data;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw ConfigError(fmt::format("dataset line {}: expected {} fields, got {}", line_no,
                                          header.size(), fields.size()));
        }
        Sample s;
        const double u = parse_number(fields[0], line_no);
        if (u != std::floor(u) || u < 1) {
            throw ConfigError(fmt::format("dataset line {}: mode must be a positive integer", line_no));
        }
        s.mode = static_cast<int>(u);
        s.x.resize(n);
        s.x_plus.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            s.x[i] = parse_number(fields[1 + i], line_no);
            s.x_plus[i] = parse_number(fields[1 + n + i], line_no);
        }
        data.push_back(std::move(s));
    }
    return data;
}

void write_dataset_csv(std::ostream& out, const Dataset& data, std::size_t dim) {
    out << "u";
    for (std::size_t i = 0; i < dim; ++i) out << ",x" << i + 1;
    for (std::size_t i = 0; i < dim; ++i) out << ",xp" << i + 1;
    out << '\n';
    for (const auto& s : data) {
        if (s.x.size() != dim || s.x_plus.size() != dim) throw std::invalid_argument("sample dimension mismatch");
        out << s.mode;
        for (double v : s.x) out << fmt::format(",{:.17g}", v);
        for (double v : s.x_plus) out << fmt::format(",{:.17g}", v);
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Noise

NoiseModel NoiseModel::truncated_gaussian(double std_dev, double bound, std::optional<double> theta) {
    if (!(std_dev > 0) || !(bound > 0)) throw ConfigError("truncated Gaussian noise needs std > 0 and bound > 0");
    return NoiseModel{NoiseKind::truncated_gaussian, std_dev, bound, theta.value_or(std_dev)};
}

NoiseModel NoiseModel::bounded_uniform(double bound, std::optional<double> theta) {
    if (!(bound > 0)) throw ConfigError("uniform noise needs bound > 0");
    return NoiseModel{NoiseKind::bounded_uniform, 0.0, bound, theta.value_or(bound)};
}

double NoiseModel::tail(double eta) const {
    if (eta < 0) throw std::invalid_argument("noise radius must be nonnegative");
    const double e = std::min(eta, bound);
    switch (kind) {
        case NoiseKind::truncated_gaussian: {
            const double denom = std::isinf(bound) ? 1.0 : std::erf(bound / (std_dev * std::numbers::sqrt2));
            return std::min(1.0, std::erf(e / (std_dev * std::numbers::sqrt2)) / denom);
        }
        case NoiseKind::bounded_uniform:
            return e / bound;
    }
    return 0.0;
}

double NoiseModel::quantile(double p) const {
    if (!(p > 0) || p > 1) throw ConfigError("noise coverage must lie in (0, 1]");
    if (p == 1.0) {
        if (std::isinf(bound)) throw ConfigError("coverage 1 is unattainable for noise with unbounded support");
        return bound;
    }
    switch (kind) {
        case NoiseKind::truncated_gaussian: {
            const double mass = std::isinf(bound) ? 1.0 : std::erf(bound / (std_dev * std::numbers::sqrt2));
            double eta = std_dev * std::numbers::sqrt2 * boost::math::erf_inv(p * mass);
            // erf_inv is accurate to a few ulps; nudge so that tail(eta) >= p holds.
            while (tail(eta) < p) eta = std::nextafter(eta, bound);
            return std::min(eta, bound);
        }
        case NoiseKind::bounded_uniform:
            return p * bound;
    }
    return bound;
}

Vector noise_tail(const NoiseModel& noise, std::span<const double> eta) {
    Vector out(eta.size());
    for (std::size_t i = 0; i < eta.size(); ++i) out[i] = noise.tail(eta[i]);
    return out;
}

nlohmann::json to_json(const NoiseModel& noise) {
    nlohmann::json j;
    if (noise.kind == NoiseKind::truncated_gaussian) {
        j["kind"] = "truncated_gaussian";
        j["std"] = noise.std_dev;
    } else {
        j["kind"] = "uniform";
    }
    j["bound"] = std::isinf(noise.bound) ? nlohmann::json("inf") : nlohmann::json(noise.bound);
    j["theta"] = noise.theta;
    return j;
}

NoiseModel noise_from_json(const nlohmann::json& j) {
    for (const auto& [key, _] : j.items()) {
        if (key != "kind" && key != "std" && key != "bound" && key != "theta") {
            throw ConfigError(fmt::format("unknown key '{}' in noise", key));
        }
    }
    std::optional<double> theta;
    if (j.contains("theta")) theta = j.at("theta").get<double>();
    const auto kind = j.at("kind").get<std::string>();
    auto bound_of = [&](double fallback) {
        if (!j.contains("bound")) return fallback;
        const auto& b = j.at("bound");
        if (b.is_string() && b.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
        return b.get<double>();
    };
    if (kind == "truncated_gaussian") {
        const double s = j.at("std").get<double>();
        return NoiseModel::truncated_gaussian(s, bound_of(s), theta);
    }
    if (kind == "uniform") {
        if (!j.contains("bound")) throw ConfigError("uniform noise needs a bound");
        return NoiseModel::bounded_uniform(bound_of(0.0), theta);
    }
    throw ConfigError(fmt::format("unknown noise kind '{}'", kind));
}

// ---------------------------------------------------------------------------
// Kernel

double Kernel::scaled_sqdist(const double* x, const double* y, std::size_t n) const {
    double r2 = 0.0;
    for (std::size_t d = 0; d < n; ++d) {
        const double t = (x[d] - y[d]) / length(d);
        r2 += t * t;
    }
    return r2;
}

double Kernel::operator()(const double* x, const double* y, std::size_t n) const {
    return from_scaled_sqdist(scaled_sqdist(x, y, n));
}

void Kernel::validate(std::size_t dim) const {
    if (!(signal_variance > 0)) throw ConfigError("kernel signal variance must be positive");
    if (length_scale.size() != 1 && length_scale.size() != dim) {
        throw ConfigError("kernel length scale must have one entry or one per dimension");
    }
    for (double l : length_scale) {
        if (!(l > 0)) throw ConfigError("kernel length scale must be positive");
    }
}

nlohmann::json to_json(const Kernel& k) {
    return {{"signal_variance", k.signal_variance}, {"length_scale", k.length_scale}};
}

Kernel kernel_from_json(const nlohmann::json& j) {
    for (const auto& [key, _] : j.items()) {
        if (key != "signal_variance" && key != "length_scale") {
            throw ConfigError(fmt::format("unknown key '{}' in kernel", key));
        }
    }
    Kernel k;
    k.signal_variance = j.at("signal_variance").get<double>();
    const auto& l = j.at("length_scale");
    k.length_scale = l.is_array() ? l.get<Vector>() : Vector{l.get<double>()};
    return k;
}

// ---------------------------------------------------------------------------
// GaussianProcess

GaussianProcess::GaussianProcess(Kernel kernel, std::size_t dim)
    : kernel_(std::move(kernel)), dim_(dim), inputs_(0, dim), targets_(0), chol_(0, 0), weights_(0) {}

GaussianProcess GaussianProcess::fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                                     const Kernel& kernel) {
    const auto m = inputs.rows();
    const auto n = static_cast<std::size_t>(inputs.cols());
    kernel.validate(n);
    if (targets.size() != m) throw std::invalid_argument("GP fit: inputs and targets differ in length");

    GaussianProcess gp(kernel, n);
    if (m == 0) return gp;

    gp.inputs_ = inputs;
    gp.targets_ = targets;
    gp.sigma_ = 1.0 + 2.0 / static_cast<double>(m);

    // Row-major copy so kernel evaluations read contiguous memory.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> x = inputs;
    Eigen::MatrixXd gram(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            gram(i, j) = gram(j, i) = kernel(x.row(i).data(), x.row(j).data(), n);
        }
    }
    const double sigma2 = gp.sigma_ * gp.sigma_;

    double jitter = 0.0;
    for (;;) {
        Eigen::MatrixXd a = gram;
        a.diagonal().array() += sigma2 + jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(a);
        if (llt.info() == Eigen::Success) {
            gp.chol_ = llt.matrixL();
            gp.weights_ = llt.solve(targets);
            gp.jitter_ = jitter;
            break;
        }
        jitter = jitter == 0.0 ? 1e-10 * kernel.signal_variance : jitter * 10.0;
        if (jitter > 1e-4 * kernel.signal_variance * (1.0 + 1e-12)) {
            const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
            const auto ev = es.eigenvalues();
            throw NumericError(fmt::format(
                "GP fit: Gram matrix not positive definite (eigenvalues of K in [{:.3g}, {:.3g}], "
                "regularization {:.3g})",
                ev.minCoeff(), ev.maxCoeff(), sigma2));
        }
    }

    // 1/2 log det(I + K / sigma^2) = sum log L_ii - m log sigma.
    double logdet_half = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) logdet_half += std::log(gp.chol_(i, i));
    gp.info_gain_ = std::max(0.0, logdet_half - static_cast<double>(m) * std::log(gp.sigma_));
    return gp;
}

double GaussianProcess::mean(std::span<const double> x) const {
    if (x.size() != dim_) throw std::invalid_argument("GP mean: dimension mismatch");
    double mu = 0.0;
    for (Eigen::Index j = 0; j < inputs_.rows(); ++j) {
        double r2 = 0.0;
        for (std::size_t d = 0; d < dim_; ++d) {
            const double t = (x[d] - inputs_(j, d)) / kernel_.length(d);
            r2 += t * t;
        }
        mu += weights_[j] * kernel_.from_scaled_sqdist(r2);
    }
    return mu;
}

double GaussianProcess::raw_variance(std::span<const double> x) const {
    if (x.size() != dim_) throw std::invalid_argument("GP variance: dimension mismatch");
    const auto m = inputs_.rows();
    if (m == 0) return kernel_.signal_variance;
    Eigen::VectorXd k(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        double r2 = 0.0;
        for (std::size_t d = 0; d < dim_; ++d) {
            const double t = (x[d] - inputs_(j, d)) / kernel_.length(d);
            r2 += t * t;
        }
        k[j] = kernel_.from_scaled_sqdist(r2);
    }
    chol_.triangularView<Eigen::Lower>().solveInPlace(k);
    return kernel_.signal_variance - k.squaredNorm();
}

double GaussianProcess::variance(std::span<const double> x) const {
    return std::max(0.0, raw_variance(x));
}

double GaussianProcess::log_marginal_likelihood() const {
    const auto m = inputs_.rows();
    if (m == 0) return 0.0;
    double logdet_half = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) logdet_half += std::log(chol_(i, i));
    return -0.5 * targets_.dot(weights_) - logdet_half -
           0.5 * static_cast<double>(m) * std::log(2.0 * std::numbers::pi);
}

Eigen::MatrixXd GaussianProcess::regularized_gram() const {
    return chol_ * chol_.transpose();
}

Kernel select_kernel(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                     std::span<const Kernel> grid) {
    if (grid.empty()) throw ConfigError("kernel grid is empty");
    std::size_t best = 0;
    double best_lml = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double lml = GaussianProcess::fit(inputs, targets, grid[i]).log_marginal_likelihood();
        if (lml > best_lml) {
            best_lml = lml;
            best = i;
        }
    }
    return grid[best];
}

// ---------------------------------------------------------------------------
// Residuals and learned modes

std::vector<ResidualData> build_residuals(const Dataset& data, const KnownDynamics& known) {
    const std::size_t num_modes = known.size();
    if (num_modes == 0) throw std::invalid_argument("build_residuals: no modes");
    const std::size_t n = known.front().dim();

    std::vector<std::size_t> count(num_modes, 0);
    for (const auto& s : data) {
        if (s.mode < 1 || static_cast<std::size_t>(s.mode) > num_modes) {
            throw ConfigError(fmt::format("sample has unknown mode {} (modes are 1..{})", s.mode, num_modes));
        }
        if (s.x.size() != n || s.x_plus.size() != n) {
            throw ConfigError(fmt::format("sample dimension does not match system dimension {}", n));
        }
        ++count[s.mode - 1];
    }

    std::vector<ResidualData> out(num_modes);
    for (std::size_t u = 0; u < num_modes; ++u) {
        out[u].mode = static_cast<int>(u + 1);
        out[u].inputs.resize(static_cast<Eigen::Index>(count[u]), static_cast<Eigen::Index>(n));
        out[u].targets.resize(static_cast<Eigen::Index>(count[u]), static_cast<Eigen::Index>(n));
    }
    std::vector<Eigen::Index> row(num_modes, 0);
    for (const auto& s : data) {
        const auto u = static_cast<std::size_t>(s.mode - 1);
        const Vector fx = known[u](s.x);
        for (std::size_t i = 0; i < n; ++i) {
            out[u].inputs(row[u], i) = s.x[i];
            out[u].targets(row[u], i) = s.x_plus[i] - fx[i];
        }
        ++row[u];
    }
    return out;
}

LearnedMode learn_mode(const ResidualData& data, const Kernel& kernel, double theta,
                       const LearnOptions& options) {
    if (!(theta > 0)) throw ConfigError("sub-Gaussian parameter theta must be positive");
    const auto n = static_cast<std::size_t>(data.inputs.cols());
    if (options.rkhs_bounds && options.rkhs_bounds->size() != n) {
        throw ConfigError("explicit RKHS bounds need one value per state dimension");
    }
    if (options.info_gain_bounds && options.info_gain_bounds->size() != n) {
        throw ConfigError("external information-gain bounds need one value per state dimension");
    }

    LearnedMode out;
    out.mode = data.mode;
    out.theta = theta;
    out.outputs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::VectorXd y = data.targets.col(static_cast<Eigen::Index>(i));
        OutputModel om{GaussianProcess::fit(data.inputs, y, kernel)};
        if (options.rkhs_bounds) {
            om.rkhs_bound = (*options.rkhs_bounds)[i];
            om.rkhs_heuristic = false;
        } else {
            om.rkhs_bound = options.rkhs_kappa * (y.size() ? y.cwiseAbs().maxCoeff() : 0.0);
            om.rkhs_heuristic = true;
        }
        om.info_gain = options.info_gain_bounds ? (*options.info_gain_bounds)[i] : om.gp.information_gain();
        out.outputs.push_back(std::move(om));
    }
    return out;
}

double beta(const LearnedMode& learned, std::size_t dim, double delta) {
    if (!(delta > 0) || !(delta < 1)) throw std::invalid_argument("beta: delta must lie in (0, 1)");
    const auto& o = learned.outputs.at(dim);
    const double theta = learned.theta;
    return theta / std::sqrt(o.gp.noise_sigma()) *
           (o.rkhs_bound + theta * std::sqrt(2.0 * (o.info_gain + 1.0 + std::log(1.0 / delta))));
}

double invert_confidence(const LearnedMode& learned, std::size_t dim, double eps, double sigma_sup,
                         double delta_min) {
    const auto& o = learned.outputs.at(dim);
    if (eps < 0 || sigma_sup < 0) throw std::invalid_argument("invert_confidence: negative radius");
    if (sigma_sup == 0.0) return delta_min;
    if (eps == 0.0) return 1.0;
    const double theta = learned.theta;
    // beta * sigma_sup <= eps  <=>  theta sqrt(2 (gamma + 1 + L)) <= eps sqrt(sigma) / (theta sigma_sup) - B
    const double room = eps * std::sqrt(o.gp.noise_sigma()) / (theta * sigma_sup) - o.rkhs_bound;
    if (room <= 0) return 1.0;
    const double s = room / theta;
    const double log_inv_delta = 0.5 * s * s - o.info_gain - 1.0;
    if (log_inv_delta <= 0) return 1.0;
    return std::max(delta_min, std::exp(-log_inv_delta));
}

nlohmann::json to_json(const LearnedMode& learned) {
    nlohmann::json outputs = nlohmann::json::array();
    for (const auto& o : learned.outputs) {
        const auto& gp = o.gp;
        std::vector<std::vector<double>> inputs(gp.size(), std::vector<double>(gp.dim()));
        for (std::size_t r = 0; r < gp.size(); ++r) {
            for (std::size_t c = 0; c < gp.dim(); ++c) inputs[r][c] = gp.inputs()(r, c);
        }
        outputs.push_back({{"kernel", to_json(gp.kernel())},
                           {"dim", gp.dim()},
                           {"noise_sigma", gp.noise_sigma()},
                           {"jitter", gp.jitter()},
                           {"inputs", inputs},
                           {"targets", std::vector<double>(gp.targets().begin(), gp.targets().end())},
                           {"weights", std::vector<double>(gp.weights().begin(), gp.weights().end())},
                           {"realized_information_gain", gp.information_gain()},
                           {"information_gain", o.info_gain},
                           {"rkhs_bound", o.rkhs_bound},
                           {"rkhs_heuristic", o.rkhs_heuristic}});
    }
    return {{"mode", learned.mode}, {"theta", learned.theta}, {"outputs", std::move(outputs)}};
}

LearnedMode learned_mode_from_json(const nlohmann::json& j) {
    LearnedMode out;
    out.mode = j.at("mode").get<int>();
    out.theta = j.at("theta").get<double>();
    for (const auto& o : j.at("outputs")) {
        const auto kernel = kernel_from_json(o.at("kernel"));
        const auto rows = o.at("inputs").get<std::vector<std::vector<double>>>();
        const auto targets = o.at("targets").get<std::vector<double>>();
        const auto n = o.at("dim").get<std::size_t>();
        Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != n) throw ConfigError("learned model: ragged input rows");
            for (std::size_t c = 0; c < n; ++c) x(r, c) = rows[r][c];
        }
        Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(targets.data(), static_cast<Eigen::Index>(targets.size()));
        OutputModel om{GaussianProcess::fit(x, y, kernel)};
        const auto weights = o.at("weights").get<std::vector<double>>();
        if (weights.size() != static_cast<std::size_t>(om.gp.weights().size())) {
            throw ConfigError("learned model: weight vector has the wrong length");
        }
        for (std::size_t k = 0; k < weights.size(); ++k) {
            if (weights[k] != om.gp.weights()[k]) {
                throw NumericError("learned model: refit weights differ from the stored weights");
            }
        }
        om.rkhs_bound = o.at("rkhs_bound").get<double>();
        om.rkhs_heuristic = o.at("rkhs_heuristic").get<bool>();
        om.info_gain = o.at("information_gain").get<double>();
        out.outputs.push_back(std::move(om));
    }
    return out;
}

}  // namespace swsynth

#include "swsynth/abstraction.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "swsynth/errors.hpp"

namespace swsynth {

namespace {

double product(const Vector& v) {
    double p = 1.0;
    for (double x : v) p *= x;
    return p;
}

double product_of_complements(const Vector& v) {
    double p = 1.0;
    for (double x : v) p *= 1.0 - x;
    return p;
}

Vector radius(const EtaChoice& eta, const EpsChoice& eps) {
    Vector c(eta.eta.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = eps.eps[i] + eta.eta[i];
    return c;
}

}  // namespace

EtaChoice choose_eta(const NoiseModel& noise, std::size_t dim, double coverage) {
    if (!(coverage > 0) || coverage > 1) throw ConfigError("eta coverage must lie in (0, 1]");
    const double per_dim = coverage == 1.0 ? 1.0 : std::pow(coverage, 1.0 / static_cast<double>(dim));
    const double eta = noise.quantile(per_dim);
    return {Vector(dim, eta), Vector(dim, noise.tail(eta))};
}

EtaChoice eta_from_fractions(const NoiseModel& noise, const Vector& fractions) {
    if (std::isinf(noise.bound)) throw ConfigError("eta fractions need noise with bounded support");
    EtaChoice out;
    for (double f : fractions) {
        if (!(f >= 0)) throw ConfigError("eta fractions must be nonnegative");
        out.eta.push_back(f * noise.bound);
        out.p_eta.push_back(noise.tail(f * noise.bound));
    }
    return out;
}

EpsChoice fallback_epsilon(const LearnedMode& learned, const Vector& sigma_sup, const AbstractionOptions& options) {
    EpsChoice out;
    for (std::size_t i = 0; i < sigma_sup.size(); ++i) {
        if (sigma_sup[i] > 0) {
            out.eps.push_back(beta(learned, i, options.delta0) * sigma_sup[i]);
            out.p_eps.push_back(1.0 - options.delta0);
        } else {
            out.eps.push_back(0.0);
            out.p_eps.push_back(1.0 - options.delta_min);
        }
    }
    return out;
}

std::optional<EpsChoice> containment_epsilon(const Box& target, const Box& im, const EtaChoice& eta,
                                             const LearnedMode& learned, const Vector& sigma_sup,
                                             const AbstractionOptions& options) {
    const std::size_t n = target.dim();
    EpsChoice out;
    for (std::size_t i = 0; i < n; ++i) {
        const double slack = std::min(im.lower(i) - target.lower(i), target.upper(i) - im.upper(i));
        if (!(slack > eta.eta[i])) return std::nullopt;
        // The reduced box is open, so the supremum itself is not admissible.
        out.eps.push_back((slack - eta.eta[i]) * (1.0 - 1e-9));
    }
    if (!contained_in(im, reduce_box(target, radius(eta, out)))) return std::nullopt;
    for (std::size_t i = 0; i < n; ++i) {
        const double delta = invert_confidence(learned, i, out.eps[i], sigma_sup[i], options.delta_min);
        out.p_eps.push_back(1.0 - delta);
    }
    return out;
}

EpsChoice choose_epsilon(const Box& target, const Box& im, const EtaChoice& eta, const LearnedMode& learned,
                         const Vector& sigma_sup, const AbstractionOptions& options) {
    EpsChoice fb = fallback_epsilon(learned, sigma_sup, options);
    auto c = containment_epsilon(target, im, eta, learned, sigma_sup, options);
    if (!c) return fb;
    // Failure probabilities enter the upper bound as a product over
    // dimensions, so one vacuous dimension would collapse it. Keep the
    // containment radius only when no dimension is worse off than the fallback.
    for (std::size_t i = 0; i < fb.p_eps.size(); ++i) {
        if (c->p_eps[i] < fb.p_eps[i]) return fb;
    }
    return *c;
}

TransitionInterval transition_interval(const Box& target, const Box& im, const EtaChoice& eta,
                                       const EpsChoice& eps) {
    const Vector c = radius(eta, eps);
    const double p = product(eps.p_eps) * product(eta.p_eta);
    const double slop = product_of_complements(eps.p_eps);
    TransitionInterval out;
    out.hi = (intersects(im, Region{expand_box(target, c), Faces::closed}) ? p : 0.0) + slop;
    out.hi = std::min(1.0, out.hi);
    out.lo = contained_in(im, reduce_box(target, c)) ? p : 0.0;
    out.lo = std::min(out.lo, out.hi);
    return out;
}

TransitionInterval unsafe_interval(const Box& domain, const Box& im, const EtaChoice& eta, const EpsChoice& eps) {
    const Vector c = radius(eta, eps);
    const double p = product(eps.p_eps) * product(eta.p_eta);
    const double slop = product_of_complements(eps.p_eps);
    TransitionInterval out;
    out.lo = 1.0 - (intersects(im, Region{expand_box(domain, c), Faces::closed}) ? p : 0.0) - slop;
    out.lo = std::max(0.0, out.lo);
    out.hi = 1.0 - (contained_in(im, reduce_box(domain, c)) ? p : 0.0);
    out.lo = std::min(out.lo, out.hi);
    return out;
}

// ---------------------------------------------------------------------------

std::size_t ImdpRow::background_count(std::size_t num_cells) const {
    std::size_t listed_cells = 0;
    for (const auto& e : entries) listed_cells += e.target < num_cells;
    return num_cells - listed_cells;
}

double ImdpRow::sum_lo() const {
    double s = 0.0;
    for (const auto& e : entries) s += e.lo;
    return s;
}

double ImdpRow::sum_hi(std::size_t num_cells) const {
    double s = 0.0;
    for (const auto& e : entries) s += e.hi;
    return s + background_hi * static_cast<double>(background_count(num_cells));
}

TransitionInterval ImdpRow::interval(CellIndex target) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), target,
                               [](const Entry& e, CellIndex t) { return e.target < t; });
    if (it != entries.end() && it->target == target) return {it->lo, it->hi};
    return {0.0, background_hi};
}

Imdp::Imdp(Partition partition, std::size_t num_actions, EtaChoice eta, std::vector<ImdpRow> rows)
    : partition_(std::move(partition)), num_actions_(num_actions), eta_(std::move(eta)), rows_(std::move(rows)) {
    if (rows_.size() != partition_.num_states() * num_actions_) {
        throw std::invalid_argument("IMDP row count does not match states x actions");
    }
}

ImdpRow build_row(const Partition& partition, const Box& im, const Vector& sigma_sup,
                  const LearnedMode& learned, const EtaChoice& eta, const AbstractionOptions& options,
                  AbstractionReport* report) {
    const std::size_t n = partition.dim();
    const Box& domain = partition.domain();
    const EpsChoice fb = fallback_epsilon(learned, sigma_sup, options);

    ImdpRow row;
    row.background_hi = product_of_complements(fb.p_eps);
    if (row.background_hi < options.sparsity_floor) row.background_hi = 0.0;

    // Only cells meeting Im(q) expanded by the fallback radius can have an
    // upper bound above the background; containment implies meeting it.
    const Box reach = expand_box(im, radius(eta, fb));
    std::vector<std::size_t> first(n), last(n);
    for (std::size_t d = 0; d < n; ++d) {
        const double step = partition.step()[d];
        const auto count = static_cast<long long>(partition.counts()[d]);
        auto lo = static_cast<long long>(std::floor((reach.lower(d) - domain.lower(d)) / step)) - 1;
        auto hi = static_cast<long long>(std::floor((reach.upper(d) - domain.lower(d)) / step)) + 1;
        lo = std::max(lo, 0LL);
        hi = std::min(hi, count - 1);
        if (lo > hi) {
            first.clear();
            break;
        }
        first[d] = static_cast<std::size_t>(lo);
        last[d] = static_cast<std::size_t>(hi);
    }

    if (!first.empty()) {
        std::vector<std::size_t> k = first;
        while (true) {
            std::size_t index = 0, stride = 1;
            for (std::size_t d = 0; d < n; ++d) {
                index += k[d] * stride;
                stride *= partition.counts()[d];
            }
            const auto target = static_cast<CellIndex>(index);
            const Box cell = partition.cell(target);
            if (intersects(im, Region{expand_box(cell, radius(eta, fb)), Faces::closed})) {
                const EpsChoice eps = choose_epsilon(cell, im, eta, learned, sigma_sup, options);
                const TransitionInterval t = transition_interval(cell, im, eta, eps);
                if (report && t.lo > 0) ++report->containment_pairs;
                if (t.hi >= options.sparsity_floor) row.entries.push_back({target, t.lo, t.hi});
            }
            std::size_t d = 0;
            while (d < n && k[d]++ == last[d]) {
                k[d] = first[d];
                ++d;
            }
            if (d == n) break;
        }
    }
    // Odometer order is dimension 0 fastest, which is cell-index order.

    const EpsChoice eps_u = choose_epsilon(domain, im, eta, learned, sigma_sup, options);
    const TransitionInterval u = unsafe_interval(domain, im, eta, eps_u);
    row.entries.push_back({partition.unsafe_index(), u.lo, u.hi});

    // Interval-consistency repair.
    const double slo = row.sum_lo();
    if (slo > 1.0) {
        for (auto& e : row.entries) e.lo /= slo;
        if (report) ++report->lo_scaled;
    }
    const double shi = row.sum_hi(partition.num_cells());
    if (shi < 1.0) {
        auto& ue = row.entries.back();
        ue.hi = std::min(1.0, ue.hi + (1.0 - shi));
        if (report) ++report->hi_raised;
    }
    return row;
}

namespace {

Imdp assemble(const Partition& partition, const KnownDynamics& known, const std::vector<LearnedMode>& learned,
              const EtaChoice& eta, const AbstractionOptions& options, AbstractionReport* report, bool parallel) {
    const std::size_t modes = learned.size();
    if (known.size() != modes) throw ConfigError("known dynamics and learned modes differ in count");
    if (modes == 0) throw ConfigError("at least one mode is required");
    const std::size_t n = partition.dim();
    if (eta.eta.size() != n) throw ConfigError("eta has the wrong dimension");

    std::vector<ModeImage> images;
    images.reserve(modes);
    for (std::size_t u = 0; u < modes; ++u) images.emplace_back(known[u], learned[u], options.bounds);

    const std::size_t cells = partition.num_cells();
    std::vector<ImdpRow> rows(partition.num_states() * modes);
    std::vector<AbstractionReport> per_cell(cells);

    auto do_cell = [&](std::size_t q) {
        const Box cell = partition.cell(static_cast<CellIndex>(q));
        for (std::size_t u = 0; u < modes; ++u) {
            const Box im = images[u].image(cell);
            const Vector s = images[u].sigma_sup(cell);
            rows[q * modes + u] = build_row(partition, im, s, learned[u], eta, options,
                                            &per_cell[q]);
        }
    };

    if (parallel) {
        const auto count = static_cast<long long>(cells);
#pragma omp parallel for schedule(dynamic, 8)
        for (long long q = 0; q < count; ++q) do_cell(static_cast<std::size_t>(q));
    } else {
        for (std::size_t q = 0; q < cells; ++q) do_cell(q);
    }

    for (std::size_t u = 0; u < modes; ++u) {
        rows[cells * modes + u].entries = {{partition.unsafe_index(), 1.0, 1.0}};
    }

    if (report) {
        AbstractionReport r;
        r.rows = rows.size();
        double width = 0.0;
        std::size_t widths = 0;
        for (const auto& pc : per_cell) {
            r.lo_scaled += pc.lo_scaled;
            r.hi_raised += pc.hi_raised;
            r.containment_pairs += pc.containment_pairs;
        }
        for (const auto& row : rows) {
            r.explicit_entries += row.entries.size();
            r.max_background = std::max(r.max_background, row.background_hi);
            for (const auto& e : row.entries) {
                if (e.target < cells) {
                    width += e.hi - e.lo;
                    ++widths;
                }
            }
        }
        r.mean_width = widths ? width / static_cast<double>(widths) : 0.0;
        *report = r;
    }
    return Imdp(partition, modes, eta, std::move(rows));
}

}  // namespace

Imdp build_imdp(const Partition& partition, const KnownDynamics& known, const std::vector<LearnedMode>& learned,
                const EtaChoice& eta, const AbstractionOptions& options, AbstractionReport* report) {
    return assemble(partition, known, learned, eta, options, report, true);
}

Imdp build_imdp_serial(const Partition& partition, const KnownDynamics& known,
                       const std::vector<LearnedMode>& learned, const EtaChoice& eta,
                       const AbstractionOptions& options, AbstractionReport* report) {
    return assemble(partition, known, learned, eta, options, report, false);
}

// ---------------------------------------------------------------------------
// Text format

void write_imdp(std::ostream& out, const Imdp& imdp) {
    out << "swsynth-imdp 1\n";
    out << "partition " << to_json(imdp.partition()).dump() << '\n';
    out << "actions " << imdp.num_actions() << '\n';
    out << "eta";
    for (double e : imdp.eta().eta) out << fmt::format(" {:.17g}", e);
    out << "\np_eta";
    for (double p : imdp.eta().p_eta) out << fmt::format(" {:.17g}", p);
    out << '\n';
    const std::size_t a = imdp.num_actions();
    for (std::size_t i = 0; i < imdp.rows().size(); ++i) {
        const auto& row = imdp.rows()[i];
        out << fmt::format("row {} {} bg {:.17g} ->", i / a, i % a + 1, row.background_hi);
        for (const auto& e : row.entries) out << fmt::format(" {} {:.17g} {:.17g}", e.target, e.lo, e.hi);
        out << '\n';
    }
}

Imdp read_imdp(std::istream& in) {
    std::string line, word;
    auto expect = [&](const char* key) -> std::istringstream {
        if (!std::getline(in, line)) throw ConfigError(fmt::format("IMDP file: missing '{}' line", key));
        std::istringstream ls(line);
        ls >> word;
        if (word != key) throw ConfigError(fmt::format("IMDP file: expected '{}', found '{}'", key, word));
        return ls;
    };
    {
        auto ls = expect("swsynth-imdp");
        int version = 0;
        ls >> version;
        if (version != 1) throw ConfigError("IMDP file: unsupported version");
    }
    Partition partition = [&] {
        auto ls = expect("partition");
        std::string rest;
        std::getline(ls, rest);
        return partition_from_json(nlohmann::json::parse(rest));
    }();
    std::size_t actions = 0;
    expect("actions") >> actions;
    if (actions == 0) throw ConfigError("IMDP file: no actions");
    EtaChoice eta;
    {
        auto ls = expect("eta");
        for (double v; ls >> v;) eta.eta.push_back(v);
        auto lp = expect("p_eta");
        for (double v; lp >> v;) eta.p_eta.push_back(v);
    }
    std::vector<ImdpRow> rows(partition.num_states() * actions);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto ls = expect("row");
        std::size_t q = 0, u = 0;
        std::string bg, arrow;
        ImdpRow row;
        ls >> q >> u >> bg >> row.background_hi >> arrow;
        if (!ls || bg != "bg" || arrow != "->" || q * actions + u - 1 != i) {
            throw ConfigError(fmt::format("IMDP file: malformed row {}", i));
        }
        ImdpRow::Entry e{};
        while (ls >> e.target >> e.lo >> e.hi) {
            if (e.target >= partition.num_states()) {
                throw ConfigError(fmt::format("IMDP file: successor out of range in row {}", i));
            }
            row.entries.push_back(e);
        }
        if (!ls.eof()) throw ConfigError(fmt::format("IMDP file: malformed entries in row {}", i));
        rows[i] = std::move(row);
    }
    return Imdp(std::move(partition), actions, std::move(eta), std::move(rows));
}

}  // namespace swsynth

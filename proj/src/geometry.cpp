#include "swsynth/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "swsynth/errors.hpp"

namespace swsynth {

namespace {

void check_dims(std::size_t a, std::size_t b) {
    if (a != b) {
        throw std::invalid_argument(fmt::format("dimension mismatch: {} vs {}", a, b));
    }
}

// Endpoint of a 1-D interval with its inclusion flag.
struct Bound {
    double value;
    bool included;
};

bool interval_overlap(double alo, double ahi, bool aclosed, double blo, double bhi, bool bclosed) {
    Bound left = alo > blo   ? Bound{alo, aclosed}
                 : blo > alo ? Bound{blo, bclosed}
                             : Bound{alo, aclosed && bclosed};
    Bound right = ahi < bhi   ? Bound{ahi, aclosed}
                  : bhi < ahi ? Bound{bhi, bclosed}
                              : Bound{ahi, aclosed && bclosed};
    if (left.value < right.value) return true;
    return left.value == right.value && left.included && right.included;
}

}  // namespace

Box::Box(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    check_dims(lower_.size(), upper_.size());
    if (lower_.empty()) throw std::invalid_argument("box must have dimension >= 1");
    for (std::size_t i = 0; i < lower_.size(); ++i) {
        if (!(lower_[i] <= upper_[i])) {
            throw std::invalid_argument(
                fmt::format("box lower bound {} exceeds upper bound {} in dimension {}", lower_[i],
                            upper_[i], i));
        }
    }
}

double Box::volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < dim(); ++i) v *= width(i);
    return v;
}

Vector Box::center() const {
    Vector c(dim());
    for (std::size_t i = 0; i < dim(); ++i) c[i] = 0.5 * (lower_[i] + upper_[i]);
    return c;
}

bool Box::contains(std::span<const double> x) const {
    check_dims(x.size(), dim());
    for (std::size_t i = 0; i < dim(); ++i) {
        if (x[i] < lower_[i] || x[i] > upper_[i]) return false;
    }
    return true;
}

Box expand_box(const Box& q, std::span<const double> c) {
    check_dims(q.dim(), c.size());
    Vector lo = q.lower(), hi = q.upper();
    for (std::size_t i = 0; i < q.dim(); ++i) {
        if (c[i] < 0) throw std::invalid_argument("expansion radius must be nonnegative");
        lo[i] -= c[i];
        hi[i] += c[i];
    }
    return Box(std::move(lo), std::move(hi));
}

RegionOrEmpty reduce_box(const Box& q, std::span<const double> c) {
    check_dims(q.dim(), c.size());
    Vector lo = q.lower(), hi = q.upper();
    for (std::size_t i = 0; i < q.dim(); ++i) {
        if (c[i] < 0) throw std::invalid_argument("reduction radius must be nonnegative");
        lo[i] += c[i];
        hi[i] -= c[i];
        // An open interval (lo, hi) is empty when lo >= hi.
        if (!(lo[i] < hi[i])) return std::nullopt;
    }
    return Region{Box(std::move(lo), std::move(hi)), Faces::open};
}

bool intersects(const RegionOrEmpty& a, const RegionOrEmpty& b) {
    if (!a || !b) return false;
    check_dims(a->box.dim(), b->box.dim());
    const bool aclosed = a->faces == Faces::closed;
    const bool bclosed = b->faces == Faces::closed;
    for (std::size_t i = 0; i < a->box.dim(); ++i) {
        if (!interval_overlap(a->box.lower(i), a->box.upper(i), aclosed, b->box.lower(i),
                              b->box.upper(i), bclosed)) {
            return false;
        }
    }
    return true;
}

bool intersects(const Box& a, const RegionOrEmpty& b) {
    return intersects(RegionOrEmpty(Region{a, Faces::closed}), b);
}

bool contained_in(const Box& a, const RegionOrEmpty& b) {
    if (!b) return false;
    check_dims(a.dim(), b->box.dim());
    const Box& outer = b->box;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        if (b->faces == Faces::closed) {
            if (a.lower(i) < outer.lower(i) || a.upper(i) > outer.upper(i)) return false;
        } else {
            if (!(a.lower(i) > outer.lower(i)) || !(a.upper(i) < outer.upper(i))) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Partition

Partition::Partition(Box domain, Vector step, std::vector<std::size_t> counts,
                     std::vector<std::string> propositions, std::vector<LabelSet> labels)
    : domain_(std::move(domain)),
      step_(std::move(step)),
      counts_(std::move(counts)),
      propositions_(std::move(propositions)),
      labels_(std::move(labels)) {
    check_dims(domain_.dim(), step_.size());
    check_dims(domain_.dim(), counts_.size());
    std::size_t total = 1;
    for (auto c : counts_) total *= c;
    if (total != labels_.size()) throw std::invalid_argument("label vector does not match grid size");
    if (propositions_.size() > 31) throw std::invalid_argument("at most 31 propositions supported");
}

Box Partition::cell(CellIndex q) const {
    if (q >= num_cells()) throw std::out_of_range("cell index out of range");
    Vector lo(dim()), hi(dim());
    std::size_t rem = q;
    for (std::size_t d = 0; d < dim(); ++d) {
        const std::size_t k = rem % counts_[d];
        rem /= counts_[d];
        lo[d] = domain_.lower(d) + static_cast<double>(k) * step_[d];
        // The last cell ends exactly on the domain face.
        hi[d] = (k + 1 == counts_[d]) ? domain_.upper(d)
                                      : domain_.lower(d) + static_cast<double>(k + 1) * step_[d];
    }
    return Box(std::move(lo), std::move(hi));
}

std::vector<std::string> Partition::label_names(CellIndex q) const {
    std::vector<std::string> out;
    const LabelSet l = labels(q);
    for (std::size_t i = 0; i < propositions_.size(); ++i) {
        if (l & (LabelSet{1} << i)) out.push_back(propositions_[i]);
    }
    return out;
}

bool Partition::has_label(CellIndex q, const std::string& name) const {
    auto it = std::find(propositions_.begin(), propositions_.end(), name);
    if (it == propositions_.end()) return false;
    return (labels(q) >> (it - propositions_.begin())) & 1u;
}

CellIndex Partition::locate(std::span<const double> x) const {
    check_dims(x.size(), dim());
    if (!domain_.contains(x)) return unsafe_index();
    std::size_t index = 0;
    std::size_t stride = 1;
    for (std::size_t d = 0; d < dim(); ++d) {
        const double t = (x[d] - domain_.lower(d)) / step_[d];
        // ceil(t) - 1 sends a point on the face between cells k and k+1 to k.
        auto k = static_cast<long long>(std::ceil(t)) - 1;
        k = std::clamp<long long>(k, 0, static_cast<long long>(counts_[d]) - 1);
        index += static_cast<std::size_t>(k) * stride;
        stride *= counts_[d];
    }
    return static_cast<CellIndex>(index);
}

Partition build_partition(const Box& domain, const std::vector<LabeledRegion>& regions,
                          std::span<const double> grid_step) {
    check_dims(domain.dim(), grid_step.size());
    const std::size_t n = domain.dim();
    constexpr double align_tol = 1e-9;

    auto grid_units = [&](double value, std::size_t d, const char* what) {
        const double t = (value - domain.lower(d)) / grid_step[d];
        const double r = std::round(t);
        if (std::abs(t - r) > align_tol * std::max(1.0, std::abs(t))) {
            throw ConfigError(fmt::format("{} {} is not aligned with the grid step {} in dimension {}",
                                          what, value, grid_step[d], d));
        }
        return static_cast<long long>(r);
    };

    std::vector<std::size_t> counts(n);
    for (std::size_t d = 0; d < n; ++d) {
        if (!(grid_step[d] > 0)) throw ConfigError("grid step must be positive");
        const auto c = grid_units(domain.upper(d), d, "domain upper bound");
        if (c < 1) throw ConfigError("domain must span at least one grid cell");
        counts[d] = static_cast<std::size_t>(c);
    }

    std::vector<std::string> props;
    for (const auto& r : regions) {
        check_dims(r.box.dim(), n);
        if (std::find(props.begin(), props.end(), r.label) == props.end()) props.push_back(r.label);
        for (std::size_t d = 0; d < n; ++d) {
            if (r.box.lower(d) < domain.lower(d) || r.box.upper(d) > domain.upper(d)) {
                throw ConfigError(fmt::format("region '{}' is not inside the domain", r.label));
            }
            grid_units(r.box.lower(d), d, "region boundary");
            grid_units(r.box.upper(d), d, "region boundary");
        }
    }
    if (props.size() > 31) throw ConfigError("at most 31 distinct region labels supported");

    std::size_t total = 1;
    for (auto c : counts) total *= c;
    std::vector<LabelSet> labels(total, 0);

    // Label by the integer cell range each region covers.
    for (const auto& r : regions) {
        const auto bit = LabelSet{1} << (std::find(props.begin(), props.end(), r.label) - props.begin());
        std::vector<long long> first(n), last(n);
        bool empty = false;
        for (std::size_t d = 0; d < n; ++d) {
            first[d] = grid_units(r.box.lower(d), d, "region boundary");
            last[d] = grid_units(r.box.upper(d), d, "region boundary");
            if (last[d] <= first[d]) empty = true;
        }
        if (empty) continue;
        std::vector<long long> k = first;
        while (true) {
            std::size_t index = 0, stride = 1;
            for (std::size_t d = 0; d < n; ++d) {
                index += static_cast<std::size_t>(k[d]) * stride;
                stride *= counts[d];
            }
            labels[index] |= bit;
            std::size_t d = 0;
            while (d < n && ++k[d] == last[d]) {
                k[d] = first[d];
                ++d;
            }
            if (d == n) break;
        }
    }

    return Partition(domain, Vector(grid_step.begin(), grid_step.end()), std::move(counts),
                     std::move(props), std::move(labels));
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json to_json(const Box& b) { return {{"lower", b.lower()}, {"upper", b.upper()}}; }

Box box_from_json(const nlohmann::json& j) {
    return Box(j.at("lower").get<Vector>(), j.at("upper").get<Vector>());
}

nlohmann::json to_json(const Partition& p) {
    nlohmann::json cells = nlohmann::json::array();
    for (CellIndex q = 0; q < p.num_cells(); ++q) {
        const Box c = p.cell(q);
        cells.push_back({{"lower", c.lower()}, {"upper", c.upper()}, {"labels", p.label_names(q)}});
    }
    return {{"domain", to_json(p.domain())},
            {"step", p.step()},
            {"counts", p.counts()},
            {"propositions", p.propositions()},
            {"cells", std::move(cells)},
            {"unsafe_index", p.unsafe_index()}};
}

Partition partition_from_json(const nlohmann::json& j) {
    auto props = j.at("propositions").get<std::vector<std::string>>();
    const auto& cells = j.at("cells");
    std::vector<LabelSet> labels;
    labels.reserve(cells.size());
    for (const auto& c : cells) {
        LabelSet l = 0;
        for (const auto& name : c.at("labels")) {
            auto it = std::find(props.begin(), props.end(), name.get<std::string>());
            if (it == props.end()) throw ConfigError("cell label not among partition propositions");
            l |= LabelSet{1} << (it - props.begin());
        }
        labels.push_back(l);
    }
    Partition p(box_from_json(j.at("domain")), j.at("step").get<Vector>(),
                j.at("counts").get<std::vector<std::size_t>>(), std::move(props), std::move(labels));
    if (j.at("unsafe_index").get<std::size_t>() != p.unsafe_index()) {
        throw ConfigError("partition unsafe index does not match its cell count");
    }
    return p;
}

}  // namespace swsynth

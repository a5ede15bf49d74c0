#include "swsynth/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "swsynth/errors.hpp"

namespace swsynth {

namespace {

// Position of each state inside each background group, -1 if absent.
std::vector<std::vector<std::int32_t>> group_positions(const Pimdp& p) {
    std::vector<std::vector<std::int32_t>> local(p.groups.size(), std::vector<std::int32_t>(p.num_states, -1));
    for (std::size_t g = 0; g < p.groups.size(); ++g) {
        for (std::size_t i = 0; i < p.groups[g].size(); ++i) {
            auto& slot = local[g][p.groups[g][i]];
            if (slot >= 0) throw std::invalid_argument(fmt::format("background group {} lists a state twice", g));
            slot = static_cast<std::int32_t>(i);
        }
    }
    return local;
}

bool before(Direction dir, double va, StateIndex a, double vb, StateIndex b) {
    if (va != vb) return dir == Direction::minimize ? va < vb : va > vb;
    return a < b;
}

// Members of one group sorted best-first for the adversary, with prefix sums
// of their values.
struct GroupOrder {
    std::vector<StateIndex> order;
    std::vector<std::uint32_t> rank;  // by position in the group
    std::vector<double> prefix;
};

struct Orders {
    const std::vector<std::vector<std::int32_t>>* local = nullptr;
    std::vector<GroupOrder> groups;
};

Orders make_orders(const Pimdp& p, const std::vector<std::vector<std::int32_t>>& local, std::span<const double> v,
                   Direction dir) {
    Orders o;
    o.local = &local;
    o.groups.resize(p.groups.size());
    for (std::size_t g = 0; g < p.groups.size(); ++g) {
        const auto& members = p.groups[g];
        GroupOrder& go = o.groups[g];
        std::vector<std::uint32_t> idx(members.size());
        std::iota(idx.begin(), idx.end(), 0u);
        std::sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
            return before(dir, v[members[a]], members[a], v[members[b]], members[b]);
        });
        go.order.resize(members.size());
        go.rank.resize(members.size());
        go.prefix.assign(members.size() + 1, 0.0);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            go.order[i] = members[idx[i]];
            go.rank[idx[i]] = static_cast<std::uint32_t>(i);
            go.prefix[i + 1] = go.prefix[i] + v[go.order[i]];
        }
    }
    return o;
}

double fast_row(const ProductRow& row, std::span<const double> v, Direction dir, const Orders& orders) {
    thread_local std::vector<const ProductEntry*> sorted;
    sorted.clear();
    double mass = 1.0, value = 0.0;
    for (const auto& e : row.entries) {
        sorted.push_back(&e);
        mass -= e.lo;
        value += e.lo * v[e.target];
    }
    std::sort(sorted.begin(), sorted.end(), [&](const ProductEntry* a, const ProductEntry* b) {
        return before(dir, v[a->target], a->target, v[b->target], b->target);
    });

    const bool background = row.background_hi > 0 && row.group < orders.groups.size();
    const GroupOrder* go = background ? &orders.groups[row.group] : nullptr;
    const auto* local = background ? &(*orders.local)[row.group] : nullptr;
    const double bg = row.background_hi;

    // Background members in [a, b) of the group order, each up to bg.
    auto take_block = [&](std::size_t a, std::size_t b) {
        if (a >= b || mass <= 0) return;
        const double cap = bg * static_cast<double>(b - a);
        if (mass >= cap) {
            value += bg * (go->prefix[b] - go->prefix[a]);
            mass -= cap;
            return;
        }
        const auto full = std::min(b - a, static_cast<std::size_t>(mass / bg));
        value += bg * (go->prefix[a + full] - go->prefix[a]);
        mass -= bg * static_cast<double>(full);
        if (a + full < b && mass > 0) {
            value += mass * v[go->order[a + full]];
        }
        mass = 0;
    };

    std::size_t pos = 0;
    for (const ProductEntry* e : sorted) {
        if (mass <= 0) break;
        if (go) {
            const std::int32_t li = (*local)[e->target];
            std::size_t at, next;
            if (li >= 0) {
                at = go->rank[static_cast<std::size_t>(li)];
                next = at + 1;
            } else {
                at = static_cast<std::size_t>(
                    std::partition_point(go->order.begin(), go->order.end(),
                                         [&](StateIndex m) { return before(dir, v[m], m, v[e->target], e->target); }) -
                    go->order.begin());
                next = at;
            }
            take_block(pos, at);
            pos = std::max(pos, next);
        }
        const double extra = std::min(e->hi - e->lo, mass);
        if (extra > 0) {
            value += extra * v[e->target];
            mass -= extra;
        }
    }
    if (go) take_block(pos, go->order.size());
    return value;
}

struct SweepSpec {
    Objective objective;
    const std::vector<std::uint32_t>* fixed;
    std::vector<std::uint32_t>* strategy;
};

Direction direction_of(Objective o) {
    return o == Objective::maximin || o == Objective::fixed_min ? Direction::minimize : Direction::maximize;
}

bool pinned(const Pimdp& p, StateIndex z) { return p.accepting[z] || p.absorbing[z]; }

double sweep(const Pimdp& p, const SweepSpec& spec, const Orders& orders, std::span<const double> v,
             std::span<double> out, bool parallel) {
    const Direction dir = direction_of(spec.objective);
    const auto n = static_cast<long long>(p.num_states);
    auto update = [&](long long zi) {
        const auto z = static_cast<StateIndex>(zi);
        if (pinned(p, z)) {
            out[z] = v[z];
            return;
        }
        if (spec.fixed) {
            out[z] = fast_row(p.row(z, (*spec.fixed)[z]), v, dir, orders);
            return;
        }
        std::size_t best = 0;
        double best_value = -1.0, current_value = 0.0;
        const std::size_t current = spec.strategy ? (*spec.strategy)[z] : 0;
        for (std::size_t a = 0; a < p.num_actions; ++a) {
            const double val = fast_row(p.row(z, a), v, dir, orders);
            if (val > best_value) {
                best_value = val;
                best = a;
            }
            if (a == current) current_value = val;
        }
        out[z] = best_value;
        if (spec.strategy && best_value > current_value) (*spec.strategy)[z] = static_cast<std::uint32_t>(best);
    };
    if (parallel) {
#pragma omp parallel for schedule(static)
        for (long long z = 0; z < n; ++z) update(z);
    } else {
        for (long long z = 0; z < n; ++z) update(z);
    }
    double residual = 0.0;
    for (std::size_t z = 0; z < p.num_states; ++z) residual = std::max(residual, std::abs(out[z] - v[z]));
    return residual;
}

std::vector<double> initial_values(const Pimdp& p) {
    std::vector<double> v(p.num_states, 0.0);
    for (std::size_t z = 0; z < p.num_states; ++z) v[z] = p.accepting[z] ? 1.0 : 0.0;
    return v;
}

bool all_pinned(const Pimdp& p) {
    for (StateIndex z = 0; z < p.num_states; ++z) {
        if (!pinned(p, z)) return false;
    }
    return true;
}

}  // namespace

// ---------------------------------------------------------------------------

void Pimdp::validate() const {
    if (rows.size() != num_states * num_actions) throw std::invalid_argument("row count is not states x actions");
    if (accepting.size() != num_states || absorbing.size() != num_states) {
        throw std::invalid_argument("state flags have the wrong size");
    }
    const auto local = group_positions(*this);
    for (const auto& g : groups) {
        for (auto m : g) {
            if (m >= num_states) throw std::invalid_argument("background member out of range");
        }
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        double lo = 0, hi = 0;
        std::size_t listed_members = 0;
        for (std::size_t k = 0; k < r.entries.size(); ++k) {
            const auto& e = r.entries[k];
            if (e.target >= num_states) throw std::invalid_argument(fmt::format("row {}: target out of range", i));
            if (k && r.entries[k - 1].target >= e.target) {
                throw std::invalid_argument(fmt::format("row {}: targets not strictly increasing", i));
            }
            if (!(0 <= e.lo && e.lo <= e.hi && e.hi <= 1)) {
                throw std::invalid_argument(fmt::format("row {}: bad interval", i));
            }
            lo += e.lo;
            hi += e.hi;
            if (r.group < groups.size() && local[r.group][e.target] >= 0) ++listed_members;
        }
        if (r.background_hi > 0) {
            if (r.group >= groups.size()) throw std::invalid_argument(fmt::format("row {}: no such group", i));
            hi += r.background_hi * static_cast<double>(groups[r.group].size() - listed_members);
        }
        if (lo > 1 + 1e-9 || hi < 1 - 1e-9) {
            throw std::invalid_argument(fmt::format("row {}: sum lo {} and sum hi {} do not bracket 1", i, lo, hi));
        }
    }
}

ltlf::Symbol cell_symbol(const Partition& partition, CellIndex q, const ltlf::Dfa& dfa) {
    ltlf::Symbol sym = 0;
    for (std::size_t i = 0; i < dfa.ap.size(); ++i) {
        if (partition.has_label(q, dfa.ap[i])) sym |= 1u << i;
    }
    return sym;
}

Pimdp build_product(const Imdp& imdp, const ltlf::Dfa& dfa) {
    const Partition& part = imdp.partition();
    for (const auto& name : dfa.ap) {
        const auto& props = part.propositions();
        if (std::find(props.begin(), props.end(), name) == props.end()) {
            throw ConfigError(fmt::format("specification proposition '{}' is not a partition label", name));
        }
    }
    const std::size_t cells = part.num_cells(), S = dfa.num_states, A = imdp.num_actions();
    std::vector<ltlf::Symbol> sym(cells);
    for (CellIndex q = 0; q < cells; ++q) sym[q] = cell_symbol(part, q, dfa);

    Pimdp p;
    p.num_cells = cells;
    p.dfa_states = S;
    p.num_states = (cells + 1) * S;
    p.num_actions = A;
    p.accepting.resize(p.num_states);
    p.absorbing.resize(p.num_states);
    p.groups.resize(S);
    for (std::uint32_t s = 0; s < S; ++s) {
        p.groups[s].reserve(cells);
        for (CellIndex c = 0; c < cells; ++c) p.groups[s].push_back(p.index(c, dfa.next(s, sym[c])));
    }
    p.rows.resize(p.num_states * A);
    for (CellIndex q = 0; q <= cells; ++q) {
        for (std::uint32_t s = 0; s < S; ++s) {
            const StateIndex z = p.index(q, s);
            p.accepting[z] = dfa.accepting[s] && q != part.unsafe_index();
            p.absorbing[z] = q == part.unsafe_index();
            for (std::size_t a = 0; a < A; ++a) {
                ProductRow& row = p.rows[z * A + a];
                if (p.absorbing[z]) {
                    row.entries = {{z, 1.0, 1.0}};
                    continue;
                }
                const ImdpRow& src = imdp.row(q, static_cast<int>(a) + 1);
                row.background_hi = src.background_hi;
                row.group = s;
                row.entries.reserve(src.entries.size());
                for (const auto& e : src.entries) {
                    const std::uint32_t s2 = part.is_unsafe(e.target) ? s : dfa.next(s, sym[e.target]);
                    row.entries.push_back({p.index(e.target, s2), e.lo, e.hi});
                }
            }
        }
    }
    p.initial.resize(cells);
    for (CellIndex q = 0; q < cells; ++q) p.initial[q] = p.index(q, dfa.next(dfa.initial, sym[q]));
    return p;
}

AdversaryResult adversary_extreme(std::span<const Successor> successors, Direction direction) {
    double lo = 0, hi = 0;
    for (const auto& s : successors) {
        if (!(0 <= s.lo && s.lo <= s.hi && s.hi <= 1)) throw NumericError("adversary: interval outside [0, 1]");
        lo += s.lo;
        hi += s.hi;
    }
    if (lo > 1 + 1e-12 || hi < 1 - 1e-12) {
        throw NumericError(fmt::format("adversary: infeasible intervals (sum lo {}, sum hi {})", lo, hi));
    }
    std::vector<std::size_t> order(successors.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double va = successors[a].value, vb = successors[b].value;
        return direction == Direction::minimize ? va < vb : va > vb;
    });
    AdversaryResult r;
    r.distribution.resize(successors.size());
    double mass = 1.0;
    for (std::size_t i = 0; i < successors.size(); ++i) {
        r.distribution[i] = successors[i].lo;
        mass -= successors[i].lo;
    }
    for (std::size_t i : order) {
        if (mass <= 0) break;
        const double room = successors[i].hi - successors[i].lo;
        const double extra = std::min(room, mass);
        r.distribution[i] = extra == room ? successors[i].hi : successors[i].lo + extra;
        mass -= extra;
    }
    for (std::size_t i = 0; i < successors.size(); ++i) r.value += r.distribution[i] * successors[i].value;
    return r;
}

double row_value(const Pimdp& pimdp, const ProductRow& row, std::span<const double> values, Direction direction) {
    const auto local = group_positions(pimdp);
    const Orders orders = make_orders(pimdp, local, values, direction);
    return fast_row(row, values, direction, orders);
}

IviResult interval_value_iteration(const Pimdp& p, Objective objective, const IviOptions& options,
                                   const std::vector<std::uint32_t>* strategy) {
    if (!(options.tol > 0)) throw ConfigError("value iteration tolerance must be positive");
    const bool fixed = objective == Objective::fixed_min || objective == Objective::fixed_max;
    if (fixed && (!strategy || strategy->size() != p.num_states)) {
        throw std::invalid_argument("fixed-strategy iteration needs one action per state");
    }
    const auto local = group_positions(p);
    IviResult r;
    r.values = initial_values(p);
    if (!fixed) r.strategy.assign(p.num_states, 0);
    if (all_pinned(p)) {
        r.converged = true;
        return r;
    }
    std::vector<double> next(p.num_states);
    const SweepSpec spec{objective, fixed ? strategy : nullptr, fixed ? nullptr : &r.strategy};
    while (r.sweeps < options.max_sweeps) {
        const Orders orders = make_orders(p, local, r.values, direction_of(objective));
        r.residual = sweep(p, spec, orders, r.values, next, options.parallel);
        r.values.swap(next);
        ++r.sweeps;
        if (r.residual < options.tol) {
            r.converged = true;
            break;
        }
    }
    if (fixed) r.strategy = *strategy;
    return r;
}

const char* to_string(CellClass c) {
    switch (c) {
        case CellClass::yes: return "yes";
        case CellClass::no: return "no";
        case CellClass::maybe: return "maybe";
    }
    return "?";
}

SynthesisResult synthesize(const Pimdp& p, double threshold, const IviOptions& options) {
    if (!(threshold >= 0 && threshold <= 1)) throw ConfigError("threshold must lie in [0, 1]");
    const IviResult maximin = interval_value_iteration(p, Objective::maximin, options);
    if (!maximin.converged) {
        throw NumericError(fmt::format("maximin iteration did not converge in {} sweeps (residual {:.3g})",
                                       maximin.sweeps, maximin.residual));
    }

    SynthesisResult r;
    r.threshold = threshold;
    r.strategy = maximin.strategy;
    r.p_lower = r.p_upper = r.p_upper_star = initial_values(p);
    const auto local = group_positions(p);
    std::vector<double> next(p.num_states);
    const SweepSpec lower{Objective::fixed_min, &r.strategy, nullptr};
    const SweepSpec upper{Objective::fixed_max, &r.strategy, nullptr};
    const SweepSpec star{Objective::maximax, nullptr, nullptr};
    r.converged = all_pinned(p);
    while (!r.converged && r.sweeps < options.max_sweeps) {
        double residual = 0.0;
        for (auto [spec, values] : {std::pair{&lower, &r.p_lower}, {&upper, &r.p_upper}, {&star, &r.p_upper_star}}) {
            const Orders orders = make_orders(p, local, *values, direction_of(spec->objective));
            residual = std::max(residual, sweep(p, *spec, orders, *values, next, options.parallel));
            values->swap(next);
        }
        ++r.sweeps;
        r.residual = residual;
        r.converged = residual < options.tol;
    }
    if (!r.converged) {
        throw NumericError(fmt::format("value iteration did not converge in {} sweeps (residual {:.3g})", r.sweeps,
                                       r.residual));
    }

    r.classes.resize(p.num_cells);
    r.gap.resize(p.num_cells);
    for (CellIndex q = 0; q < p.num_cells; ++q) {
        const double lo = r.lower(p, q), up = r.upper(p, q);
        r.classes[q] = lo >= threshold ? CellClass::yes : up < threshold ? CellClass::no : CellClass::maybe;
        r.gap[q] = r.upper_star(p, q) - lo;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Export

void write_result(std::ostream& out, const Pimdp& p, const Partition& partition, const SynthesisResult& r) {
    if (partition.num_cells() != p.num_cells) throw std::invalid_argument("partition does not match the product");
    out << "swsynth-result 1\n";
    out << fmt::format("threshold {:.17g}\ncells {}\ndfa_states {}\nsweeps {} residual {:.17g}\n", r.threshold,
                       p.num_cells, p.dfa_states, r.sweeps, r.residual);
    out << "# cell class p_lower p_upper p_upper_star gap\n";
    for (CellIndex q = 0; q < p.num_cells; ++q) {
        out << fmt::format("cell {} {} {:.17g} {:.17g} {:.17g} {:.17g}\n", q, to_string(r.classes[q]), r.lower(p, q),
                           r.upper(p, q), r.upper_star(p, q), r.gap[q]);
    }
    out << "# strategy: cell, then the mode for each automaton state (0 where no action is needed)\n";
    for (CellIndex q = 0; q < p.num_cells; ++q) {
        out << "strategy " << q;
        for (std::uint32_t s = 0; s < p.dfa_states; ++s) {
            const StateIndex z = p.index(q, s);
            out << ' ' << (pinned(p, z) ? 0u : r.strategy[z] + 1);
        }
        out << '\n';
    }
}

void write_heatmap_csv(std::ostream& out, const Pimdp& p, const Partition& partition, const SynthesisResult& r) {
    for (std::size_t d = 0; d < partition.dim(); ++d) out << 'x' << d + 1 << ',';
    out << "p_lower,p_upper,p_upper_star,gap,class\n";
    for (CellIndex q = 0; q < p.num_cells; ++q) {
        for (double c : partition.cell(q).center()) out << fmt::format("{:.17g},", c);
        out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{}\n", r.lower(p, q), r.upper(p, q), r.upper_star(p, q),
                           r.gap[q], to_string(r.classes[q]));
    }
}

StoredResult read_result(std::istream& in) {
    StoredResult r;
    std::string line, word;
    std::size_t cells = 0;
    auto fail = [](const std::string& what) { throw ConfigError("result file: " + what); };
    if (!std::getline(in, line) || line != "swsynth-result 1") fail("bad header");
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        ls >> word;
        if (word == "threshold") {
            ls >> r.threshold;
        } else if (word == "cells") {
            ls >> cells;
            r.lower.resize(cells);
            r.upper.resize(cells);
            r.upper_star.resize(cells);
            r.gap.resize(cells);
            r.classes.resize(cells);
        } else if (word == "dfa_states") {
            ls >> r.dfa_states;
            r.modes.assign(cells * r.dfa_states, 0);
        } else if (word == "sweeps") {
            continue;
        } else if (word == "cell") {
            std::size_t q = 0;
            std::string cls;
            ls >> q >> cls;
            if (!ls || q >= cells) fail("bad cell line");
            ls >> r.lower[q] >> r.upper[q] >> r.upper_star[q] >> r.gap[q];
            r.classes[q] = cls == "yes" ? CellClass::yes : cls == "no" ? CellClass::no : CellClass::maybe;
        } else if (word == "strategy") {
            std::size_t q = 0;
            ls >> q;
            if (!ls || q >= cells || r.modes.empty()) fail("bad strategy line");
            for (std::size_t s = 0; s < r.dfa_states; ++s) ls >> r.modes[q * r.dfa_states + s];
        } else {
            fail("unknown line '" + word + "'");
        }
        if (ls.fail()) fail("malformed line '" + line + "'");
    }
    if (cells == 0 || r.dfa_states == 0) fail("missing sizes");
    return r;
}

}  // namespace swsynth

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace swsynth {

using Vector = std::vector<double>;
using CellIndex = std::uint32_t;

/// Closed axis-aligned box [lower, upper] in state space.
class Box {
public:
    Box() = default;
    Box(Vector lower, Vector upper);

    std::size_t dim() const { return lower_.size(); }
    const Vector& lower() const { return lower_; }
    const Vector& upper() const { return upper_; }
    double lower(std::size_t i) const { return lower_[i]; }
    double upper(std::size_t i) const { return upper_[i]; }

    double width(std::size_t i) const { return upper_[i] - lower_[i]; }
    double volume() const;
    Vector center() const;
    bool contains(std::span<const double> x) const;

    friend bool operator==(const Box&, const Box&) = default;

private:
    Vector lower_;
    Vector upper_;
};

/// A box together with how its faces are treated. Reductions are open.
enum class Faces { closed, open };

struct Region {
    Box box;
    Faces faces = Faces::closed;
};

/// std::nullopt is the empty set.
using RegionOrEmpty = std::optional<Region>;

Box expand_box(const Box& q, std::span<const double> c);
RegionOrEmpty reduce_box(const Box& q, std::span<const double> c);

bool intersects(const RegionOrEmpty& a, const RegionOrEmpty& b);
bool intersects(const Box& a, const RegionOrEmpty& b);
bool contained_in(const Box& a, const RegionOrEmpty& b);

struct LabeledRegion {
    Box box;
    std::string label;
};

/// Bitmask over Partition::propositions().
using LabelSet = std::uint32_t;

/// Uniform grid over a compact box. Cell indices run with dimension 0
/// fastest; the unsafe state (everything outside the domain) is the index
/// one past the last cell.
class Partition {
public:
    Partition(Box domain, Vector step, std::vector<std::size_t> counts,
              std::vector<std::string> propositions, std::vector<LabelSet> labels);

    const Box& domain() const { return domain_; }
    const Vector& step() const { return step_; }
    const std::vector<std::size_t>& counts() const { return counts_; }
    std::size_t dim() const { return domain_.dim(); }

    std::size_t num_cells() const { return labels_.size(); }
    /// Cells plus the unsafe state.
    std::size_t num_states() const { return labels_.size() + 1; }
    CellIndex unsafe_index() const { return static_cast<CellIndex>(labels_.size()); }
    bool is_unsafe(CellIndex q) const { return q == unsafe_index(); }

    Box cell(CellIndex q) const;
    LabelSet labels(CellIndex q) const { return is_unsafe(q) ? 0 : labels_[q]; }
    std::vector<std::string> label_names(CellIndex q) const;
    const std::vector<std::string>& propositions() const { return propositions_; }
    bool has_label(CellIndex q, const std::string& name) const;

    /// Point location z(x). Points on shared faces go to the smallest
    /// index; points outside the domain map to the unsafe state.
    CellIndex locate(std::span<const double> x) const;

    friend bool operator==(const Partition&, const Partition&) = default;

private:
    Box domain_;
    Vector step_;
    std::vector<std::size_t> counts_;
    std::vector<std::string> propositions_;
    std::vector<LabelSet> labels_;
};

Partition build_partition(const Box& domain, const std::vector<LabeledRegion>& regions,
                          std::span<const double> grid_step);

nlohmann::json to_json(const Box& b);
Box box_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Partition& p);
Partition partition_from_json(const nlohmann::json& j);

}  // namespace swsynth

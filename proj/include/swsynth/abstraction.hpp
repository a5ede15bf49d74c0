#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "swsynth/bounds.hpp"
#include "swsynth/dynamics.hpp"
#include "swsynth/geometry.hpp"
#include "swsynth/learning.hpp"

namespace swsynth {

struct TransitionInterval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Noise radius per dimension and P[|v_i| <= eta_i].
struct EtaChoice {
    Vector eta;
    Vector p_eta;
};

/// Regression radius per dimension and its confidence 1 - delta_i.
struct EpsChoice {
    Vector eps;
    Vector p_eps;
};

/// Smallest per-dimension eta whose tail reaches coverage^(1/n).
EtaChoice choose_eta(const NoiseModel& noise, std::size_t dim, double coverage);
/// eta_i = fraction_i * noise bound.
EtaChoice eta_from_fractions(const NoiseModel& noise, const Vector& fractions);

struct AbstractionOptions {
    double delta0 = 0.01;
    double delta_min = 1e-6;
    double sparsity_floor = 1e-12;
    BoundsOptions bounds;
};

/// Regression radius when Im(q) sits strictly inside q' shrunk by eta: the
/// largest admissible eps with its inverted confidence. Empty if no eps >= 0
/// gives containment.
std::optional<EpsChoice> containment_epsilon(const Box& target, const Box& im, const EtaChoice& eta,
                                             const LearnedMode& learned, const Vector& sigma_sup,
                                             const AbstractionOptions& options);
/// eps_i = beta(delta0) sigma_sup_i with confidence 1 - delta0 (1 - delta_min when sigma_sup_i = 0).
EpsChoice fallback_epsilon(const LearnedMode& learned, const Vector& sigma_sup, const AbstractionOptions& options);

/// The containment choice when it exists, otherwise the fallback.
EpsChoice choose_epsilon(const Box& target, const Box& im, const EtaChoice& eta, const LearnedMode& learned,
                         const Vector& sigma_sup, const AbstractionOptions& options);

/// Bounds on P(x+ in target | x in q) for one (eps, eta) pair.
TransitionInterval transition_interval(const Box& target, const Box& im, const EtaChoice& eta,
                                       const EpsChoice& eps);
/// Bounds on P(x+ outside domain | x in q).
TransitionInterval unsafe_interval(const Box& domain, const Box& im, const EtaChoice& eta, const EpsChoice& eps);

/// Explicit successors of one (q, u) row sorted by target. Every cell that is
/// not listed has the interval [0, background_hi]. The unsafe successor is
/// always listed.
struct ImdpRow {
    struct Entry {
        CellIndex target;
        double lo;
        double hi;
    };
    std::vector<Entry> entries;
    double background_hi = 0.0;

    /// Number of unlisted cells for a partition with `num_cells` cells.
    std::size_t background_count(std::size_t num_cells) const;
    double sum_lo() const;
    double sum_hi(std::size_t num_cells) const;
    TransitionInterval interval(CellIndex target) const;
};

struct AbstractionReport {
    std::size_t rows = 0;
    std::size_t explicit_entries = 0;
    std::size_t lo_scaled = 0;   // rows whose lower bounds summed above 1
    std::size_t hi_raised = 0;   // rows whose upper bounds summed below 1
    std::size_t containment_pairs = 0;
    double mean_width = 0.0;     // over explicit cell successors
    double max_background = 0.0;
};

class Imdp {
public:
    Imdp(Partition partition, std::size_t num_actions, EtaChoice eta, std::vector<ImdpRow> rows);

    const Partition& partition() const { return partition_; }
    std::size_t num_states() const { return partition_.num_states(); }
    std::size_t num_actions() const { return num_actions_; }
    const EtaChoice& eta() const { return eta_; }
    /// Modes are 1-based.
    const ImdpRow& row(CellIndex q, int mode) const { return rows_[q * num_actions_ + (mode - 1)]; }
    const std::vector<ImdpRow>& rows() const { return rows_; }

private:
    Partition partition_;
    std::size_t num_actions_;
    EtaChoice eta_;
    std::vector<ImdpRow> rows_;
};

/// Row of one (q, u) from the cell's image box and sigma suprema.
ImdpRow build_row(const Partition& partition, const Box& im, const Vector& sigma_sup,
                  const LearnedMode& learned, const EtaChoice& eta, const AbstractionOptions& options,
                  AbstractionReport* report = nullptr);

/// Rows for all cells and modes, in parallel over cells. Learned modes are
/// indexed by mode - 1 like the known dynamics.
Imdp build_imdp(const Partition& partition, const KnownDynamics& known, const std::vector<LearnedMode>& learned,
                const EtaChoice& eta, const AbstractionOptions& options, AbstractionReport* report = nullptr);
/// Single-threaded reference with identical output.
Imdp build_imdp_serial(const Partition& partition, const KnownDynamics& known,
                       const std::vector<LearnedMode>& learned, const EtaChoice& eta,
                       const AbstractionOptions& options, AbstractionReport* report = nullptr);

void write_imdp(std::ostream& out, const Imdp& imdp);
Imdp read_imdp(std::istream& in);

}  // namespace swsynth

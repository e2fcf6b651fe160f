#pragma once

#include <optional>
#include <string>
#include <vector>

#include "minsuff/common.hpp"
#include "minsuff/model.hpp"

namespace minsuff {

// Outcome of the likelihood-proportionality membership test for a pair (x, y)
// over a finite parameter grid.
struct ProportionalityVerdict {
    bool in_D = false;
    std::optional<double> h;           // proportionality constant when in_D
    double log_spread = 0.0;           // max - min of finite log ratios
    std::optional<Vec> witness_theta;  // grid theta refuting constancy
    std::optional<Vec> zero_pattern_conflict;  // theta where exactly one density is zero
};

struct Partition {
    std::string corpus_label;
    std::vector<std::vector<int>> blocks;  // blocks sorted by least index, indices ascending
    bool tolerance_ambiguity = false;      // non-transitive closeness was collapsed
};

struct MixtureSpec {
    std::vector<double> weights;  // positive, sum within 1e-12 of 1
    ParamGrid grid;

    // Dyadic weights 2^-(n+1) renormalized over the grid length.
    static MixtureSpec dyadic(ParamGrid grid);
};

// Membership test: y is proportional to x when zero patterns of f_theta(x)
// and f_theta(y) agree at every grid theta and the log ratios over the
// both-positive thetas have spread <= tol.  h is exp(mean log ratio); a pair
// with both densities vanishing at every grid theta is proportional with h=1.
ProportionalityVerdict proportional(const Model& m, const ParamGrid& grid, const Vec& x,
                                    const Vec& y, double tol);

// Connected components of the proportionality graph over corpus indices;
// pair tests may run in parallel (capped by MINSUFF_THREADS), merges are
// applied sequentially in lexicographic pair order.
Partition ratio_partition(const Model& m, const ParamGrid& grid, const Corpus& corpus, double tol);

// Groups corpus points with equal statistic values.  When closeness at the
// statistic's tolerance is not transitive, falls back to transitive closure
// and sets tolerance_ambiguity.
Partition statistic_partition(const Statistic& s, const Corpus& corpus);

// Every block of p contained in some block of q.  Throws SpecError when the
// corpus labels differ.
bool refines(const Partition& p, const Partition& q);

// Component densities of the weighted mixture, normalized by the mixture
// density: g_n(x) = f_{theta_n}(x) / f(x) when f(x) is positive and finite,
// and g_n(x) = f_{theta_n}(x) when f(x) = 0.  Computed via log-sum-exp.
Vec canonical_statistic(const Model& m, const MixtureSpec& mix, const Vec& x);

// Effective parallelism cap: MINSUFF_THREADS when set, else hardware.
int thread_cap();

}  // namespace minsuff

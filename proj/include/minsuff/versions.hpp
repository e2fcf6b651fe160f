#pragma once

#include <nlohmann/json.hpp>

#include "minsuff/criteria.hpp"
#include "minsuff/model.hpp"

namespace minsuff::versions {

// A finite choice of density versions: at each listed (theta, x) pair the
// density is replaced by 0.  Thetas are pairwise distinct; under Lebesgue
// measure each replacement changes the density only on a null singleton, so
// the induced measures are untouched.
struct VersionAssignment {
    std::vector<std::pair<Vec, Vec>> pairs;  // (theta, x)
};

VersionAssignment load_assignment(const nlohmann::json& doc);

// Returns m with zero overrides installed at exactly the assignment's pairs.
// Throws SpecError when m already carries an override at one of them.
Model perturb(const Model& m, const VersionAssignment& a);

struct DemoResult {
    bool ok = false;
    nlohmann::json report;
};

// Builds the i.i.d. unit-variance normal location model in dimension n and a
// version assignment with one distinct theta per corpus point, then shows:
// equal-coordinate-sum pairs are proportional over the assignment thetas
// before the perturbation and lose proportionality after it (a zero-pattern
// conflict at an assignment theta), while log densities differ on exactly
// |assignment| cells, each a Lebesgue-null singleton.  The ratio-implication
// check for the sum statistic over a disjoint theta0 is byte-identical
// before and after.
DemoResult version_demo(int n, const Corpus& corpus, const ParamGrid& theta0_disjoint,
                        double tol);

// i.i.d. N(theta, 1)^n pieces reused by the demo and tests.
Model normal_location_model(int n);
Statistic sum_statistic(int n);
criteria::FactorizationSpec sum_factorization(const Model& m, const Statistic& s);

}  // namespace minsuff::versions

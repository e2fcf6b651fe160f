#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "minsuff/ratio.hpp"

namespace minsuff::finite {

// No floating point anywhere in this module: the counterexample machinery
// depends on exact equalities.
using Rational = boost::multiprecision::cpp_rational;

Rational parse_rational(const std::string& text);  // "p/q" or "p"
std::string rational_str(const Rational& r);

inline constexpr const char* kCorpusLabel = "finite-model";

struct FiniteModel {
    std::vector<std::string> points;            // sample-point labels
    std::vector<std::string> probe;             // parameter labels, rational strings
    std::vector<std::vector<Rational>> pmf;     // [probe][point]; rows sum to exactly 1

    Rational probe_value(std::size_t i) const { return parse_rational(probe[i]); }
    std::size_t point_index(const std::string& label) const;
    std::size_t probe_index(const std::string& label) const;
};

FiniteModel load_finite_model(const nlohmann::json& doc);

// The 4-point model with masses theta/3, 2theta/3, (1-theta)/3, 2(1-theta)/3
// probed at theta in {1/4, 1/2, 3/4}.
FiniteModel pfanzagl_model();

struct LabelStatistic {
    std::map<std::string, std::string> map;  // point label -> value label
};

// Partition induced by equal value labels, blocks in first-occurrence order.
Partition statistic_partition(const LabelStatistic& t, const FiniteModel& fm);

struct SufficiencyWitness {
    std::size_t block;
    std::size_t theta_a, theta_b;  // probe indices with differing conditionals
    std::size_t point;
};

struct SufficiencyResult {
    bool sufficient = false;
    std::optional<SufficiencyWitness> witness;
};

// Exact conditional check: within each block, the conditional masses
// pmf(theta, x) / blockmass(theta) must agree across every probe theta with
// positive block mass (this forces zero entries to be zero at all such
// thetas).  Thetas where the whole block has zero mass impose no constraint.
SufficiencyResult is_sufficient_partition(const FiniteModel& fm, const Partition& p);

// Coarsest partition consistent with the probe: points are grouped when
// their zero patterns match and the mass ratio is exactly constant across
// the positive-mass probe thetas.
Partition minimal_partition(const FiniteModel& fm);

struct FunctionOfResult {
    bool is_function = false;
    std::optional<std::pair<std::string, std::string>> witness;  // s-equal, t-distinct pair
};

// t factors through s: s(x) = s(y) implies t(x) = t(y) on all point pairs.
FunctionOfResult is_function_of(const LabelStatistic& t, const LabelStatistic& s,
                                const FiniteModel& fm);

Rational tv_distance(const FiniteModel& fm, const std::string& theta_a,
                     const std::string& theta_b);

struct DemoResult {
    bool ok = false;
    nlohmann::json report;
};

// Self-contained reproduction on the 4-point model: the indicator statistic
// induces a sufficient partition, the identity passes the countable
// separation hypothesis yet is not a function of the indicator, and the
// exact ratio partition equals the indicator's.  A separation-based
// minimality criterion without extra hypotheses is thereby refuted.  The
// optional variant scales all masses by 4, turning the dominating measure
// into a probability measure; every ratio is unchanged.
DemoResult pfanzagl_demo(bool include_scaled_variant);

}  // namespace minsuff::finite

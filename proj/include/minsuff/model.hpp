#pragma once

#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "minsuff/common.hpp"
#include "minsuff/expr.hpp"

namespace minsuff {

enum class MeasureTag { lebesgue, counting };

// A pointwise density replacement at one (theta, x) pair.  Overrides model
// the freedom to pick a different density version on a null set.
struct Override {
    Vec theta;
    Vec x;
    double value;
};

struct Model {
    std::string name;
    int sample_dim = 0;
    int param_dim = 0;
    expr::Expr density;
    MeasureTag measure = MeasureTag::lebesgue;
    std::vector<Override> overrides;
};

struct ParamGrid {
    std::string label;
    std::vector<Vec> points;
};

struct Corpus {
    std::string label;
    std::vector<Vec> points;
};

// Vector-valued statistic: plain components evaluated in order, followed by
// sorted components, each of which expands to sample_dim ascending values of
// an elementwise expression over the reserved binder `i`.
struct Statistic {
    std::string name;
    std::vector<expr::Expr> components;
    std::vector<expr::Expr> sorted_components;
    int sample_dim = 0;
    int codomain_dim = 0;
    double equality_tolerance = 1e-12;
};

// Loaders validate against the JSON schemas documented in the README and run
// the load-time checks (density non-negativity smoke grid, grid distinctness,
// point dimensions).  All throw SpecError on violation.
Model load_model(const nlohmann::json& doc);
Statistic load_statistic(const nlohmann::json& doc, int sample_dim, int param_dim);
ParamGrid load_grid(const nlohmann::json& doc);
Corpus load_corpus(const nlohmann::json& doc);

Model parse_model(const std::string& text);
Statistic parse_statistic(const std::string& text, int sample_dim, int param_dim);
ParamGrid parse_grid(const std::string& text);
Corpus parse_corpus(const std::string& text);

// log f_theta(x); -inf encodes a zero density.  Overrides are matched
// bit-exactly and take precedence over the density expression.
double log_density(const Model& m, const Vec& theta, const Vec& x);

Vec apply_statistic(const Statistic& s, const Vec& x);

// Componentwise absolute-or-relative rule at the statistic's tolerance.
bool statistic_equal(const Statistic& s, const Vec& a, const Vec& b);

}  // namespace minsuff

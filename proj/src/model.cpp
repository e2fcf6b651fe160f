#include "minsuff/model.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

namespace minsuff {

namespace {

using nlohmann::json;

Vec vec_from_json(const json& arr, const char* what) {
    if (!arr.is_array() || arr.empty())
        throw SpecError(std::string(what) + " must be a non-empty array of numbers");
    Vec v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number()) throw SpecError(std::string(what) + " must contain numbers only");
        v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    }
    return v;
}

std::vector<Vec> points_from_json(const json& arr, const char* what) {
    if (!arr.is_array() || arr.empty())
        throw SpecError(std::string(what) + " must be a non-empty array of points");
    std::vector<Vec> pts;
    pts.reserve(arr.size());
    for (const json& p : arr) pts.push_back(vec_from_json(p, what));
    for (const Vec& p : pts)
        if (p.size() != pts.front().size())
            throw SpecError(std::string(what) + " points must all have the same length");
    return pts;
}

const json& require(const json& doc, const char* key) {
    auto it = doc.find(key);
    if (it == doc.end()) throw SpecError(std::string("missing required field \"") + key + "\"");
    return *it;
}

// Default smoke grid: 8 sample points and 8 parameter points with coordinates
// cycled through fixed small values of mixed sign.
std::vector<Vec> default_smoke_points(int dim, bool param) {
    static const double sx[8] = {-2, -1, -0.5, -0.1, 0.1, 0.5, 1, 2};
    static const double st[8] = {-1.5, -1, -0.5, -0.1, 0.1, 0.5, 1, 1.5};
    const double* base = param ? st : sx;
    std::vector<Vec> pts;
    for (int i = 0; i < 8; ++i) {
        Vec v(dim);
        for (int c = 0; c < dim; ++c) v[c] = base[(i + c) % 8];
        pts.push_back(std::move(v));
    }
    return pts;
}

void smoke_check(const Model& m, const std::vector<Vec>& xs, const std::vector<Vec>& thetas) {
    for (const Vec& theta : thetas) {
        for (const Vec& x : xs) {
            expr::LogEvalResult r;
            try {
                r = expr::eval_log(m.density, x, theta);
            } catch (const NegativeDensityError&) {
                throw SpecError("model \"" + m.name + "\": negative density at smoke point");
            }
            if (r.nan_seen && std::isnan(r.log_value))
                throw SpecError("model \"" + m.name + "\": density is NaN at a smoke point");
            if (r.log_value == std::numeric_limits<double>::infinity())
                throw SpecError("model \"" + m.name + "\": density is infinite at a smoke point");
        }
    }
}

}  // namespace

Model load_model(const json& doc) {
    if (!doc.is_object()) throw SpecError("model document must be a JSON object");
    Model m;
    m.name = require(doc, "name").get<std::string>();
    m.sample_dim = require(doc, "sample_dim").get<int>();
    m.param_dim = require(doc, "param_dim").get<int>();
    if (m.sample_dim < 1 || m.param_dim < 1)
        throw SpecError("sample_dim and param_dim must be positive");
    std::string measure = require(doc, "measure").get<std::string>();
    if (measure == "lebesgue") m.measure = MeasureTag::lebesgue;
    else if (measure == "counting") m.measure = MeasureTag::counting;
    else throw SpecError("measure must be \"lebesgue\" or \"counting\"");
    m.density = expr::parse(require(doc, "density").get<std::string>(), m.sample_dim, m.param_dim);

    if (doc.contains("overrides")) {
        for (const json& o : doc.at("overrides")) {
            Override ov;
            ov.theta = vec_from_json(require(o, "theta"), "override theta");
            ov.x = vec_from_json(require(o, "x"), "override x");
            ov.value = require(o, "value").get<double>();
            if (static_cast<int>(ov.theta.size()) != m.param_dim ||
                static_cast<int>(ov.x.size()) != m.sample_dim)
                throw SpecError("override dimensions do not match the model");
            if (ov.value < 0) throw SpecError("override value must be non-negative");
            m.overrides.push_back(std::move(ov));
        }
    }

    std::vector<Vec> smoke_x, smoke_theta;
    if (doc.contains("smoke")) {
        const json& s = doc.at("smoke");
        smoke_x = points_from_json(require(s, "x"), "smoke x");
        smoke_theta = points_from_json(require(s, "theta"), "smoke theta");
        for (const Vec& p : smoke_x)
            if (static_cast<int>(p.size()) != m.sample_dim)
                throw SpecError("smoke x dimension mismatch");
        for (const Vec& p : smoke_theta)
            if (static_cast<int>(p.size()) != m.param_dim)
                throw SpecError("smoke theta dimension mismatch");
    } else {
        smoke_x = default_smoke_points(m.sample_dim, false);
        smoke_theta = default_smoke_points(m.param_dim, true);
    }
    smoke_check(m, smoke_x, smoke_theta);
    return m;
}

Statistic load_statistic(const json& doc, int sample_dim, int param_dim) {
    if (!doc.is_object()) throw SpecError("statistic document must be a JSON object");
    Statistic s;
    s.name = require(doc, "name").get<std::string>();
    s.sample_dim = sample_dim;
    if (doc.contains("components")) {
        for (const json& c : doc.at("components"))
            s.components.push_back(expr::parse(c.get<std::string>(), sample_dim, param_dim));
    }
    if (doc.contains("sorted")) {
        for (const json& c : doc.at("sorted"))
            s.sorted_components.push_back(
                expr::parse_with_binders(c.get<std::string>(), sample_dim, param_dim, {"i"}));
    }
    for (const expr::Expr& e : s.components)
        if (e.references_param())
            throw SpecError("statistic \"" + s.name + "\" must not reference parameters");
    for (const expr::Expr& e : s.sorted_components)
        if (e.references_param())
            throw SpecError("statistic \"" + s.name + "\" must not reference parameters");
    s.codomain_dim = static_cast<int>(s.components.size()) +
                     static_cast<int>(s.sorted_components.size()) * sample_dim;
    if (s.codomain_dim < 1) throw SpecError("statistic \"" + s.name + "\" has no components");
    if (doc.contains("tolerance")) {
        s.equality_tolerance = doc.at("tolerance").get<double>();
        if (s.equality_tolerance < 0) throw SpecError("tolerance must be non-negative");
    }
    return s;
}

ParamGrid load_grid(const json& doc) {
    ParamGrid g;
    g.label = require(doc, "label").get<std::string>();
    g.points = points_from_json(require(doc, "points"), "grid");
    for (std::size_t i = 0; i < g.points.size(); ++i)
        for (std::size_t j = i + 1; j < g.points.size(); ++j)
            if (vec_equal_exact(g.points[i], g.points[j]))
                throw SpecError("grid \"" + g.label + "\" has duplicate points");
    return g;
}

Corpus load_corpus(const json& doc) {
    Corpus c;
    c.label = require(doc, "label").get<std::string>();
    c.points = points_from_json(require(doc, "points"), "corpus");
    return c;
}

Model parse_model(const std::string& text) { return load_model(json::parse(text)); }
Statistic parse_statistic(const std::string& text, int sample_dim, int param_dim) {
    return load_statistic(json::parse(text), sample_dim, param_dim);
}
ParamGrid parse_grid(const std::string& text) { return load_grid(json::parse(text)); }
Corpus parse_corpus(const std::string& text) { return load_corpus(json::parse(text)); }

double log_density(const Model& m, const Vec& theta, const Vec& x) {
    if (static_cast<int>(theta.size()) != m.param_dim)
        throw SpecError("model \"" + m.name + "\": parameter dimension mismatch");
    if (static_cast<int>(x.size()) != m.sample_dim)
        throw SpecError("model \"" + m.name + "\": sample dimension mismatch");
    for (const Override& ov : m.overrides) {
        if (vec_equal_exact(ov.theta, theta) && vec_equal_exact(ov.x, x)) {
            if (ov.value == 0.0) return -std::numeric_limits<double>::infinity();
            return std::log(ov.value);
        }
    }
    return expr::eval_log(m.density, x, theta).log_value;
}

Vec apply_statistic(const Statistic& s, const Vec& x) {
    if (static_cast<int>(x.size()) != s.sample_dim)
        throw SpecError("statistic \"" + s.name + "\": sample dimension mismatch");
    Vec out(s.codomain_dim);
    Eigen::Index k = 0;
    for (const expr::Expr& e : s.components) {
        Vec theta = Vec::Zero(e.param_dim());  // statistics are parameter-free
        out[k++] = expr::eval(e, x, theta).value;
    }
    static const std::string binder = "i";
    for (const expr::Expr& e : s.sorted_components) {
        std::vector<double> vals(static_cast<std::size_t>(s.sample_dim));
        Vec theta = Vec::Zero(e.param_dim());
        for (int i = 0; i < s.sample_dim; ++i)
            vals[static_cast<std::size_t>(i)] = expr::eval_bound(e, x, theta, binder, i).value;
        std::sort(vals.begin(), vals.end());
        for (double v : vals) out[k++] = v;
    }
    return out;
}

bool statistic_equal(const Statistic& s, const Vec& a, const Vec& b) {
    return vec_close(a, b, s.equality_tolerance);
}

}  // namespace minsuff

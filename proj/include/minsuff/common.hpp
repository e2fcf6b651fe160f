#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace minsuff {

using Vec = Eigen::VectorXd;

// Malformed input: schema violations, dimension mismatches, unknown labels.
struct SpecError : std::runtime_error {
    explicit SpecError(const std::string& what) : std::runtime_error(what) {}
};

// A density expression evaluated to a negative value.
struct NegativeDensityError : std::runtime_error {
    explicit NegativeDensityError(const std::string& what) : std::runtime_error(what) {}
};

inline bool vec_equal_exact(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) return false;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

// Componentwise absolute-or-relative closeness: |a-b| <= tol*max(1,|a|,|b|).
// tol == 0 degenerates to exact equality.
inline bool scalar_close(double a, double b, double tol) {
    if (a == b) return true;
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

inline bool vec_close(const Vec& a, const Vec& b, double tol) {
    if (a.size() != b.size()) return false;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        if (!scalar_close(a[i], b[i], tol)) return false;
    return true;
}

}  // namespace minsuff

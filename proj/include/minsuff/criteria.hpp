#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "minsuff/model.hpp"
#include "minsuff/ratio.hpp"

namespace minsuff::criteria {

enum class Status { refuted, verified_on_probe, inconclusive };

const char* status_name(Status s);

struct Finding {
    std::string kind;
    nlohmann::json detail;
};

struct Verdict {
    Status status = Status::inconclusive;
    std::vector<Finding> findings;
    std::string narrative;

    nlohmann::json to_json() const;
};

// Factorization split f_theta(x) = g(T(x), theta) * h(x).  In g, the sample
// variables x[0..] address the statistic's codomain slots; h is an
// expression over the sample and must be parameter-free.
struct FactorizationSpec {
    expr::Expr g;
    expr::Expr h;
};

FactorizationSpec load_factorization(const nlohmann::json& doc, const Model& m,
                                     const Statistic& s);

// Pointwise validation of the split over grid x corpus: zero patterns must
// match exactly and log differences stay within tol on the positive part.
Verdict check_factorization(const Model& m, const Statistic& s, const FactorizationSpec& fact,
                            const ParamGrid& grid, const Corpus& corpus, double tol);

// Sufficiency is a hypothesis of the ratio-implication check, never a
// conclusion; it is either certified by the caller or validated by a
// factorization split first.
struct SufficiencyEvidence {
    std::optional<FactorizationSpec> factorization;  // absent = certified by user

    static SufficiencyEvidence certified() { return {}; }
    static SufficiencyEvidence validated(FactorizationSpec f) { return {std::move(f)}; }
};

// Pair test over the countable stand-in grid: proportionality of (x, y) over
// theta0 must imply equal statistic values.  Refuted with a witness pair
// otherwise; inconclusive when the sufficiency hypothesis is unmet.
Verdict check_ratio_implication(const Model& m, const Statistic& s, const ParamGrid& theta0,
                                const Corpus& corpus, double tol,
                                const std::optional<SufficiencyEvidence>& evidence);

struct SatoOptions {
    double tol = 1e-9;         // pair-test log-spread tolerance
    int neighbor_count = 3;
    double radius = 0.5;       // sparsity guard: max allowed nearest-neighbor distance
    double approx_tol = 0.25;  // closeness bound for the last neighbor, log-density scale
    double mono_slack = 1e-6;  // slack in the monotone-approach comparison
};

// Two phases: (a) for each probe theta, log densities along the
// nearest-neighbor sequence from theta0 must approach log f_theta on every
// corpus point; (b) statistic equality must be equivalent to proportionality
// over theta0 united with the probe.  Phase (b) violations refute; phase (a)
// problems (sparsity, missing convergence, unresolved zero branch) yield
// inconclusive.
Verdict check_sato(const Model& m, const Statistic& s, const ParamGrid& theta0,
                   const ParamGrid& theta_probe, const Corpus& corpus, const SatoOptions& opt);

// Exponential-family components f_theta = exp(sum eta_i(theta) T_i(x) -
// B(theta)) h(x); eta and B are parameter-only, T and h sample-only.
struct ExpFamSpec {
    int k = 0;
    std::vector<expr::Expr> eta;
    expr::Expr B;
    std::vector<expr::Expr> T;
    expr::Expr h;
    int sample_dim = 0;
    int param_dim = 0;
};

ExpFamSpec load_expfam(const nlohmann::json& doc);

// Affine-independence witness: rank of the probe x (k+1) matrix with rows
// (1, eta_1(theta), ..., eta_k(theta)) via fully pivoted elimination.  Full
// rank certifies independence over the whole parameter space (any affine
// relation would have to vanish on a nonsingular system), so this check is
// exact; rank deficiency on a probe proves nothing and yields inconclusive,
// never refuted.
Verdict check_expfam_rank(const ExpFamSpec& ef, const ParamGrid& probe, double pivot_tol);

nlohmann::json json_vec(const Vec& v);

}  // namespace minsuff::criteria

#include "minsuff/criteria.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace minsuff::criteria {

namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

json json_pair_detail(const Corpus& corpus, int i, int j) {
    json d;
    d["pair"] = {i, j};
    d["x"] = json_vec(corpus.points[static_cast<std::size_t>(i)]);
    d["y"] = json_vec(corpus.points[static_cast<std::size_t>(j)]);
    return d;
}

}  // namespace

json json_vec(const Vec& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

const char* status_name(Status s) {
    switch (s) {
        case Status::refuted: return "refuted";
        case Status::verified_on_probe: return "verified_on_probe";
        case Status::inconclusive: return "inconclusive";
    }
    return "unknown";
}

json Verdict::to_json() const {
    json j;
    j["status"] = status_name(status);
    j["narrative"] = narrative;
    json fl = json::array();
    for (const Finding& f : findings) fl.push_back(json{{"kind", f.kind}, {"detail", f.detail}});
    j["findings"] = fl;
    return j;
}

FactorizationSpec load_factorization(const json& doc, const Model& m, const Statistic& s) {
    FactorizationSpec f;
    if (!doc.contains("g") || !doc.contains("h"))
        throw SpecError("factorization document needs \"g\" and \"h\"");
    f.g = expr::parse(doc.at("g").get<std::string>(), s.codomain_dim, m.param_dim);
    f.h = expr::parse(doc.at("h").get<std::string>(), m.sample_dim, m.param_dim);
    if (f.h.references_param())
        throw SpecError("factorization h must not reference parameters");
    return f;
}

Verdict check_factorization(const Model& m, const Statistic& s, const FactorizationSpec& fact,
                            const ParamGrid& grid, const Corpus& corpus, double tol) {
    if (fact.g.sample_dim() != s.codomain_dim)
        throw SpecError("factorization g expects a statistic of dimension " +
                        std::to_string(fact.g.sample_dim()) + ", got " +
                        std::to_string(s.codomain_dim));
    if (fact.h.sample_dim() != m.sample_dim)
        throw SpecError("factorization h dimension mismatch");

    Verdict v;
    std::size_t checked = 0;
    for (std::size_t gi = 0; gi < grid.points.size(); ++gi) {
        const Vec& theta = grid.points[gi];
        for (std::size_t ci = 0; ci < corpus.points.size(); ++ci) {
            const Vec& x = corpus.points[ci];
            double lhs = log_density(m, theta, x);
            Vec t = apply_statistic(s, x);
            double rhs = expr::eval_log(fact.g, t, theta).log_value +
                         expr::eval_log(fact.h, x, theta).log_value;
            ++checked;
            bool zero_mismatch = (lhs == -kInf) != (rhs == -kInf);
            bool value_mismatch = lhs != -kInf && rhs != -kInf &&
                                  !(std::abs(lhs - rhs) <= tol);
            if (zero_mismatch || value_mismatch || std::isnan(rhs)) {
                json d;
                d["theta_index"] = gi;
                d["corpus_index"] = ci;
                d["theta"] = json_vec(theta);
                d["x"] = json_vec(x);
                d["log_density"] = lhs;
                d["log_split"] = rhs;
                v.findings.push_back({"factorization_mismatch", std::move(d)});
            }
        }
    }
    if (!v.findings.empty()) {
        v.status = Status::refuted;
        v.narrative = "factorization split disagrees with the density at " +
                      std::to_string(v.findings.size()) + " of " + std::to_string(checked) +
                      " probed (theta, x) cells";
        return v;
    }
    v.status = Status::verified_on_probe;
    v.narrative = "split matches the density on all " + std::to_string(checked) +
                  " probed (theta, x) cells (zero patterns exact, log gap <= " +
                  std::to_string(tol) + ")";
    json probe;
    probe["grid"] = grid.label;
    probe["corpus"] = corpus.label;
    probe["cells"] = checked;
    probe["tol"] = tol;
    v.findings.push_back({"probe_summary", std::move(probe)});
    return v;
}

Verdict check_ratio_implication(const Model& m, const Statistic& s, const ParamGrid& theta0,
                                const Corpus& corpus, double tol,
                                const std::optional<SufficiencyEvidence>& evidence) {
    Verdict v;
    if (!evidence) {
        v.status = Status::inconclusive;
        v.narrative =
            "no sufficiency evidence supplied: the check's hypothesis is unmet, so minimality "
            "can be neither verified nor refuted";
        return v;
    }
    if (evidence->factorization) {
        Verdict fv = check_factorization(m, s, *evidence->factorization, theta0, corpus, tol);
        if (fv.status != Status::verified_on_probe) {
            v.status = Status::inconclusive;
            v.narrative =
                "sufficiency validation failed: the supplied factorization split does not "
                "reproduce the density, so the hypothesis is unmet (" +
                fv.narrative + ")";
            for (Finding& f : fv.findings) v.findings.push_back(std::move(f));
            return v;
        }
        json d;
        d["narrative"] = fv.narrative;
        v.findings.push_back({"sufficiency_validated_by_factorization", std::move(d)});
    } else {
        v.findings.push_back({"sufficiency_certified_by_user", json::object()});
    }

    const int n = static_cast<int>(corpus.points.size());
    std::vector<Vec> values;
    values.reserve(static_cast<std::size_t>(n));
    for (const Vec& x : corpus.points) values.push_back(apply_statistic(s, x));

    std::size_t violations = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            ProportionalityVerdict pv = proportional(m, theta0, corpus.points[static_cast<std::size_t>(i)],
                                                     corpus.points[static_cast<std::size_t>(j)], tol);
            if (!pv.in_D) continue;
            if (statistic_equal(s, values[static_cast<std::size_t>(i)], values[static_cast<std::size_t>(j)]))
                continue;
            json d = json_pair_detail(corpus, i, j);
            d["statistic_x"] = json_vec(values[static_cast<std::size_t>(i)]);
            d["statistic_y"] = json_vec(values[static_cast<std::size_t>(j)]);
            d["h"] = pv.h ? json(*pv.h) : json();
            d["log_spread"] = pv.log_spread;
            v.findings.push_back({"proportional_pair_with_distinct_statistic", std::move(d)});
            ++violations;
        }
    }
    if (violations > 0) {
        v.status = Status::refuted;
        v.narrative = "found " + std::to_string(violations) +
                      " proportional corpus pair(s) with distinct statistic values over grid \"" +
                      theta0.label + "\"";
        return v;
    }
    v.status = Status::verified_on_probe;
    v.narrative = "proportionality over grid \"" + theta0.label +
                  "\" implies statistic equality on all corpus pairs (probe-relative)";
    json probe;
    probe["grid"] = theta0.label;
    probe["corpus"] = corpus.label;
    probe["pairs"] = n * (n - 1) / 2;
    probe["tol"] = tol;
    v.findings.push_back({"probe_summary", std::move(probe)});
    return v;
}

Verdict check_sato(const Model& m, const Statistic& s, const ParamGrid& theta0,
                   const ParamGrid& theta_probe, const Corpus& corpus, const SatoOptions& opt) {
    if (opt.neighbor_count < 1) throw SpecError("neighbor count must be positive");
    Verdict v;
    bool approx_trouble = false;

    // Phase (a): pointwise approximation along nearest-neighbor sequences.
    for (std::size_t pi = 0; pi < theta_probe.points.size(); ++pi) {
        const Vec& target = theta_probe.points[pi];
        std::vector<std::pair<double, std::size_t>> by_dist;
        for (std::size_t gi = 0; gi < theta0.points.size(); ++gi)
            by_dist.emplace_back((theta0.points[gi] - target).norm(), gi);
        std::sort(by_dist.begin(), by_dist.end());
        if (by_dist.empty() || by_dist.front().first > opt.radius) {
            json d;
            d["theta"] = json_vec(target);
            d["nearest_distance"] = by_dist.empty() ? kInf : by_dist.front().first;
            d["radius"] = opt.radius;
            v.findings.push_back({"theta0_too_sparse", std::move(d)});
            approx_trouble = true;
            continue;
        }
        std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(opt.neighbor_count),
                                                  by_dist.size());
        // farthest first, so the sequence walks toward the probe point
        std::vector<std::size_t> seq;
        for (std::size_t r = 0; r < count; ++r) seq.push_back(by_dist[count - 1 - r].second);

        double worst_last_gap = 0.0;
        for (std::size_t ci = 0; ci < corpus.points.size(); ++ci) {
            const Vec& x = corpus.points[ci];
            double target_log = log_density(m, target, x);
            std::vector<double> seq_log;
            for (std::size_t gi : seq) seq_log.push_back(log_density(m, theta0.points[gi], x));

            if (target_log == -kInf) {
                // zero branch: the sequence must end at -inf, otherwise the
                // limit cannot be checked from the grid
                if (seq_log.back() != -kInf) {
                    json d;
                    d["theta"] = json_vec(target);
                    d["corpus_index"] = ci;
                    d["last_log_density"] = seq_log.back();
                    v.findings.push_back({"zero_branch_unresolved", std::move(d)});
                    approx_trouble = true;
                }
                continue;
            }
            std::vector<double> gaps;
            for (double l : seq_log)
                gaps.push_back(l == -kInf ? kInf : std::abs(l - target_log));
            bool monotone = true;
            for (std::size_t r = 0; r + 1 < gaps.size(); ++r)
                if (!(gaps[r + 1] <= gaps[r] + opt.mono_slack)) monotone = false;
            bool close = gaps.back() <= opt.approx_tol;
            worst_last_gap = std::max(worst_last_gap, gaps.back());
            if (!monotone || !close) {
                json d;
                d["theta"] = json_vec(target);
                d["corpus_index"] = ci;
                d["gaps"] = gaps;
                d["monotone"] = monotone;
                d["last_gap"] = gaps.back();
                d["approx_tol"] = opt.approx_tol;
                v.findings.push_back({"missing_convergence", std::move(d)});
                approx_trouble = true;
            }
        }
        json d;
        d["theta"] = json_vec(target);
        d["neighbors"] = count;
        d["worst_last_gap"] = worst_last_gap;
        v.findings.push_back({"approximation_summary", std::move(d)});
    }

    // Phase (b): biconditional over theta0 united with the probe.
    ParamGrid joint;
    joint.label = theta0.label + "+" + theta_probe.label;
    joint.points = theta0.points;
    for (const Vec& p : theta_probe.points) {
        bool dup = false;
        for (const Vec& q : joint.points)
            if (vec_equal_exact(p, q)) dup = true;
        if (!dup) joint.points.push_back(p);
    }

    const int n = static_cast<int>(corpus.points.size());
    std::vector<Vec> values;
    for (const Vec& x : corpus.points) values.push_back(apply_statistic(s, x));
    std::size_t violations = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            bool eq = statistic_equal(s, values[static_cast<std::size_t>(i)], values[static_cast<std::size_t>(j)]);
            ProportionalityVerdict pv = proportional(m, joint, corpus.points[static_cast<std::size_t>(i)],
                                                     corpus.points[static_cast<std::size_t>(j)], opt.tol);
            if (eq == pv.in_D) continue;
            json d = json_pair_detail(corpus, i, j);
            d["statistic_x"] = json_vec(values[static_cast<std::size_t>(i)]);
            d["statistic_y"] = json_vec(values[static_cast<std::size_t>(j)]);
            d["log_spread"] = pv.log_spread;
            v.findings.push_back({eq ? "equal_statistic_without_proportionality"
                                     : "proportional_pair_with_distinct_statistic",
                                  std::move(d)});
            ++violations;
        }
    }

    if (violations > 0) {
        v.status = Status::refuted;
        v.narrative = "statistic equality and proportionality disagree on " +
                      std::to_string(violations) + " corpus pair(s)";
    } else if (approx_trouble) {
        v.status = Status::inconclusive;
        v.narrative =
            "the pointwise-limit hypothesis could not be confirmed from theta0 (see findings); "
            "the pair biconditional held on the corpus";
    } else {
        v.status = Status::verified_on_probe;
        v.narrative =
            "densities at probe parameters are approached along theta0 neighbor sequences and "
            "statistic equality is equivalent to proportionality on all corpus pairs "
            "(probe-relative; limits checked only on the corpus)";
    }
    return v;
}

ExpFamSpec load_expfam(const json& doc) {
    ExpFamSpec ef;
    ef.k = doc.at("k").get<int>();
    if (ef.k < 1) throw SpecError("exponential family needs k >= 1");
    if (!doc.contains("eta") || !doc.at("eta").is_array() ||
        doc.at("eta").size() != static_cast<std::size_t>(ef.k))
        throw SpecError("\"eta\" must list exactly k expressions");
    if (!doc.contains("T") || !doc.at("T").is_array() ||
        doc.at("T").size() != static_cast<std::size_t>(ef.k))
        throw SpecError("\"T\" must list exactly k expressions");

    // Dimensions: explicit fields win; otherwise inferred from the largest
    // indices used.  'n' requires an explicit sample_dim.
    expr::TextScan scan;
    auto merge = [&scan](const std::string& text) {
        expr::TextScan t = expr::scan_indices(text);
        scan.max_x_index = std::max(scan.max_x_index, t.max_x_index);
        scan.max_theta_index = std::max(scan.max_theta_index, t.max_theta_index);
        scan.uses_n = scan.uses_n || t.uses_n;
    };
    for (const json& e : doc.at("eta")) merge(e.get<std::string>());
    for (const json& e : doc.at("T")) merge(e.get<std::string>());
    merge(doc.at("B").get<std::string>());
    merge(doc.at("h").get<std::string>());

    if (doc.contains("sample_dim")) ef.sample_dim = doc.at("sample_dim").get<int>();
    else if (scan.uses_n)
        throw SpecError("expressions use 'n'; the document must declare sample_dim");
    else ef.sample_dim = std::max(1, scan.max_x_index + 1);
    if (doc.contains("param_dim")) ef.param_dim = doc.at("param_dim").get<int>();
    else ef.param_dim = std::max(1, scan.max_theta_index + 1);

    for (const json& e : doc.at("eta"))
        ef.eta.push_back(expr::parse(e.get<std::string>(), ef.sample_dim, ef.param_dim));
    ef.B = expr::parse(doc.at("B").get<std::string>(), ef.sample_dim, ef.param_dim);
    for (const json& e : doc.at("T"))
        ef.T.push_back(expr::parse(e.get<std::string>(), ef.sample_dim, ef.param_dim));
    ef.h = expr::parse(doc.at("h").get<std::string>(), ef.sample_dim, ef.param_dim);

    for (const expr::Expr& e : ef.eta)
        if (e.references_sample()) throw SpecError("eta components must not reference the sample");
    if (ef.B.references_sample()) throw SpecError("B must not reference the sample");
    for (const expr::Expr& e : ef.T)
        if (e.references_param()) throw SpecError("T components must not reference parameters");
    if (ef.h.references_param()) throw SpecError("h must not reference parameters");
    return ef;
}

Verdict check_expfam_rank(const ExpFamSpec& ef, const ParamGrid& probe, double pivot_tol) {
    const int rows = static_cast<int>(probe.points.size());
    const int cols = ef.k + 1;
    if (rows < cols)
        throw SpecError("probe too small: need at least k+1 = " + std::to_string(cols) +
                        " parameter points, got " + std::to_string(rows));

    Eigen::MatrixXd M(rows, cols);
    Vec dummy_x = Vec::Zero(ef.sample_dim);
    for (int r = 0; r < rows; ++r) {
        const Vec& theta = probe.points[static_cast<std::size_t>(r)];
        M(r, 0) = 1.0;
        for (int c = 1; c < cols; ++c) {
            expr::EvalResult res = expr::eval(ef.eta[static_cast<std::size_t>(c - 1)], dummy_x, theta);
            if (res.nan_seen || !std::isfinite(res.value))
                throw SpecError("eta_" + std::to_string(c) + " is not finite at a probe point");
            M(r, c) = res.value;
        }
    }

    double threshold = pivot_tol;
    if (threshold <= 0) {
        double max_col_norm = 0.0;
        for (int c = 0; c < cols; ++c) max_col_norm = std::max(max_col_norm, M.col(c).norm());
        threshold = 1e-10 * max_col_norm;
    }

    // Fully pivoted elimination; original pivot rows give the witness subset.
    Eigen::MatrixXd W = M;
    std::vector<int> row_of(static_cast<std::size_t>(rows));
    for (int r = 0; r < rows; ++r) row_of[static_cast<std::size_t>(r)] = r;
    int rank = 0;
    for (int step = 0; step < cols; ++step) {
        int pr = -1, pc = -1;
        double best = threshold;
        for (int r = step; r < rows; ++r)
            for (int c = step; c < cols; ++c)
                if (std::abs(W(r, c)) > best) {
                    best = std::abs(W(r, c));
                    pr = r;
                    pc = c;
                }
        if (pr < 0) break;
        W.row(step).swap(W.row(pr));
        std::swap(row_of[static_cast<std::size_t>(step)], row_of[static_cast<std::size_t>(pr)]);
        W.col(step).swap(W.col(pc));
        for (int r = step + 1; r < rows; ++r) {
            double f = W(r, step) / W(step, step);
            W.row(r).tail(cols - step) -= f * W.row(step).tail(cols - step);
        }
        ++rank;
    }

    Verdict v;
    json d;
    d["rank"] = rank;
    d["required"] = cols;
    d["pivot_threshold"] = threshold;
    if (rank == cols) {
        std::vector<int> witness(row_of.begin(), row_of.begin() + cols);
        std::sort(witness.begin(), witness.end());
        Eigen::MatrixXd sub(cols, cols);
        json wit_thetas = json::array();
        for (int r = 0; r < cols; ++r) {
            sub.row(r) = M.row(witness[static_cast<std::size_t>(r)]);
            wit_thetas.push_back(json_vec(probe.points[static_cast<std::size_t>(witness[static_cast<std::size_t>(r)])]));
        }
        d["witness_rows"] = witness;
        d["witness_thetas"] = wit_thetas;
        d["witness_determinant_magnitude"] = std::abs(sub.determinant());
        v.findings.push_back({"rank_witness", std::move(d)});
        v.status = Status::verified_on_probe;
        v.narrative =
            "the probe contains k+1 parameter points whose (1, eta) rows are nonsingular; no "
            "nontrivial affine relation among {1, eta_1, ..., eta_k} can hold on any superset, "
            "so this full-rank witness is an exact certificate";
    } else {
        v.findings.push_back({"rank_deficient_probe", std::move(d)});
        v.status = Status::inconclusive;
        v.narrative =
            "the probe matrix has rank " + std::to_string(rank) + " < " + std::to_string(cols) +
            "; a deficient probe cannot prove an affine dependence over the whole parameter "
            "space, so the condition is undecided";
    }
    return v;
}

}  // namespace minsuff::criteria

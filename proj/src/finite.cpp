#include "minsuff/finite.hpp"

#include <algorithm>

namespace minsuff::finite {

namespace {

using nlohmann::json;

std::vector<Rational> column(const FiniteModel& fm, std::size_t point) {
    std::vector<Rational> col;
    col.reserve(fm.probe.size());
    for (const auto& row : fm.pmf) col.push_back(row[point]);
    return col;
}

// Zero pattern plus the column normalized by its first positive entry; two
// points share a signature exactly when their masses are proportional with a
// positive constant across the probe.
std::vector<Rational> ratio_signature(const std::vector<Rational>& col) {
    Rational pivot = 0;
    for (const Rational& v : col)
        if (v != 0) {
            pivot = v;
            break;
        }
    if (pivot == 0) return col;  // all-zero column stands for itself
    std::vector<Rational> sig;
    sig.reserve(col.size());
    for (const Rational& v : col) sig.push_back(v / pivot);
    return sig;
}

Partition partition_from_table(const std::vector<std::vector<Rational>>& pmf,
                               std::size_t n_points) {
    std::vector<std::vector<Rational>> sigs;
    std::vector<std::vector<int>> blocks;
    for (std::size_t p = 0; p < n_points; ++p) {
        std::vector<Rational> col;
        col.reserve(pmf.size());
        for (const auto& row : pmf) col.push_back(row[p]);
        bool all_zero = std::all_of(col.begin(), col.end(), [](const Rational& v) { return v == 0; });
        std::vector<Rational> sig = ratio_signature(col);
        // zero columns must not merge with a positive column whose signature
        // happens to normalize to zeros (impossible, but keep patterns apart)
        bool placed = false;
        for (std::size_t b = 0; b < sigs.size(); ++b) {
            if (sigs[b] == sig) {
                bool block_zero = std::all_of(sigs[b].begin(), sigs[b].end(),
                                              [](const Rational& v) { return v == 0; });
                if (block_zero == all_zero) {
                    blocks[b].push_back(static_cast<int>(p));
                    placed = true;
                    break;
                }
            }
        }
        if (!placed) {
            sigs.push_back(std::move(sig));
            blocks.push_back({static_cast<int>(p)});
        }
    }
    Partition out;
    out.corpus_label = kCorpusLabel;
    out.blocks = std::move(blocks);
    std::sort(out.blocks.begin(), out.blocks.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return out;
}

void check_partition_shape(const FiniteModel& fm, const Partition& p) {
    std::vector<char> seen(fm.points.size(), 0);
    for (const auto& blk : p.blocks) {
        for (int i : blk) {
            if (i < 0 || static_cast<std::size_t>(i) >= fm.points.size() || seen[static_cast<std::size_t>(i)])
                throw SpecError("partition does not cover the finite model's points exactly once");
            seen[static_cast<std::size_t>(i)] = 1;
        }
    }
    for (char c : seen)
        if (!c) throw SpecError("partition does not cover the finite model's points exactly once");
}

}  // namespace

Rational parse_rational(const std::string& text) {
    auto slash = text.find('/');
    try {
        if (slash == std::string::npos)
            return Rational(boost::multiprecision::cpp_int(text));
        boost::multiprecision::cpp_int num(text.substr(0, slash));
        boost::multiprecision::cpp_int den(text.substr(slash + 1));
        if (den == 0) throw SpecError("rational \"" + text + "\" has zero denominator");
        return Rational(num, den);
    } catch (const std::runtime_error&) {
        throw SpecError("malformed rational \"" + text + "\"");
    }
}

std::string rational_str(const Rational& r) {
    boost::multiprecision::cpp_int num = numerator(r);
    boost::multiprecision::cpp_int den = denominator(r);
    if (den == 1) return num.str();
    return num.str() + "/" + den.str();
}

std::size_t FiniteModel::point_index(const std::string& label) const {
    for (std::size_t i = 0; i < points.size(); ++i)
        if (points[i] == label) return i;
    throw SpecError("unknown point label \"" + label + "\"");
}

std::size_t FiniteModel::probe_index(const std::string& label) const {
    Rational want = parse_rational(label);
    for (std::size_t i = 0; i < probe.size(); ++i)
        if (parse_rational(probe[i]) == want) return i;
    throw SpecError("unknown probe label \"" + label + "\"");
}

FiniteModel load_finite_model(const json& doc) {
    FiniteModel fm;
    for (const json& p : doc.at("points")) fm.points.push_back(p.get<std::string>());
    for (const json& p : doc.at("probe")) fm.probe.push_back(p.get<std::string>());
    if (fm.points.empty() || fm.probe.empty())
        throw SpecError("finite model needs points and probe parameters");
    for (std::size_t i = 0; i < fm.probe.size(); ++i)
        for (std::size_t j = i + 1; j < fm.probe.size(); ++j)
            if (parse_rational(fm.probe[i]) == parse_rational(fm.probe[j]))
                throw SpecError("probe labels must be pairwise distinct");
    const json& rows = doc.at("pmf");
    if (rows.size() != fm.probe.size())
        throw SpecError("pmf must have one row per probe parameter");
    for (const json& row : rows) {
        if (row.size() != fm.points.size())
            throw SpecError("pmf row length must match the point count");
        std::vector<Rational> r;
        Rational sum = 0;
        for (const json& cell : row) {
            Rational v = parse_rational(cell.get<std::string>());
            if (v < 0) throw SpecError("pmf entries must be non-negative");
            sum += v;
            r.push_back(std::move(v));
        }
        if (sum != 1)
            throw SpecError("pmf row sums to " + rational_str(sum) + ", expected exactly 1");
        fm.pmf.push_back(std::move(r));
    }
    return fm;
}

FiniteModel pfanzagl_model() {
    FiniteModel fm;
    fm.points = {"1", "2", "3", "4"};
    fm.probe = {"1/4", "1/2", "3/4"};
    for (const char* t : {"1/4", "1/2", "3/4"}) {
        Rational theta = parse_rational(t);
        fm.pmf.push_back({theta / 3, 2 * theta / 3, (1 - theta) / 3, 2 * (1 - theta) / 3});
    }
    return fm;
}

Partition statistic_partition(const LabelStatistic& t, const FiniteModel& fm) {
    std::vector<std::string> value_order;
    std::vector<std::vector<int>> blocks;
    for (std::size_t p = 0; p < fm.points.size(); ++p) {
        auto it = t.map.find(fm.points[p]);
        if (it == t.map.end())
            throw SpecError("statistic is not total: missing point \"" + fm.points[p] + "\"");
        auto pos = std::find(value_order.begin(), value_order.end(), it->second);
        if (pos == value_order.end()) {
            value_order.push_back(it->second);
            blocks.push_back({static_cast<int>(p)});
        } else {
            blocks[static_cast<std::size_t>(pos - value_order.begin())].push_back(static_cast<int>(p));
        }
    }
    Partition out;
    out.corpus_label = kCorpusLabel;
    out.blocks = std::move(blocks);
    std::sort(out.blocks.begin(), out.blocks.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return out;
}

SufficiencyResult is_sufficient_partition(const FiniteModel& fm, const Partition& p) {
    check_partition_shape(fm, p);
    for (std::size_t b = 0; b < p.blocks.size(); ++b) {
        const auto& blk = p.blocks[b];
        std::vector<Rational> mass(fm.probe.size(), Rational(0));
        for (std::size_t t = 0; t < fm.probe.size(); ++t)
            for (int i : blk) mass[t] += fm.pmf[t][static_cast<std::size_t>(i)];
        std::vector<std::size_t> positive;
        for (std::size_t t = 0; t < fm.probe.size(); ++t)
            if (mass[t] > 0) positive.push_back(t);
        if (positive.size() < 2) continue;
        std::size_t ref = positive.front();
        for (std::size_t pi = 1; pi < positive.size(); ++pi) {
            std::size_t t = positive[pi];
            for (int i : blk) {
                // conditional equality without division: cross-multiplied
                if (fm.pmf[ref][static_cast<std::size_t>(i)] * mass[t] !=
                    fm.pmf[t][static_cast<std::size_t>(i)] * mass[ref]) {
                    SufficiencyResult r;
                    r.sufficient = false;
                    r.witness = SufficiencyWitness{b, ref, t, static_cast<std::size_t>(i)};
                    return r;
                }
            }
        }
    }
    return {true, std::nullopt};
}

Partition minimal_partition(const FiniteModel& fm) {
    return partition_from_table(fm.pmf, fm.points.size());
}

FunctionOfResult is_function_of(const LabelStatistic& t, const LabelStatistic& s,
                                const FiniteModel& fm) {
    for (const std::string& p : fm.points) {
        if (!t.map.count(p) || !s.map.count(p))
            throw SpecError("statistic is not total: missing point \"" + p + "\"");
    }
    for (std::size_t i = 0; i < fm.points.size(); ++i) {
        for (std::size_t j = i + 1; j < fm.points.size(); ++j) {
            const std::string& a = fm.points[i];
            const std::string& b = fm.points[j];
            if (s.map.at(a) == s.map.at(b) && t.map.at(a) != t.map.at(b))
                return {false, std::make_pair(a, b)};
        }
    }
    return {true, std::nullopt};
}

Rational tv_distance(const FiniteModel& fm, const std::string& theta_a,
                     const std::string& theta_b) {
    std::size_t a = fm.probe_index(theta_a);
    std::size_t b = fm.probe_index(theta_b);
    Rational acc = 0;
    for (std::size_t p = 0; p < fm.points.size(); ++p) {
        Rational d = fm.pmf[a][p] - fm.pmf[b][p];
        if (d < 0) d = -d;
        acc += d;
    }
    return acc / 2;
}

DemoResult pfanzagl_demo(bool include_scaled_variant) {
    FiniteModel fm = pfanzagl_model();
    DemoResult out;
    json& rep = out.report;
    bool ok = true;

    json pmf_json = json::array();
    for (const auto& row : fm.pmf) {
        json r = json::array();
        for (const Rational& v : row) r.push_back(rational_str(v));
        pmf_json.push_back(r);
    }
    rep["model"] = {{"points", fm.points}, {"probe", fm.probe}, {"pmf", pmf_json}};

    auto blocks_by_label = [&fm](const Partition& p) {
        json arr = json::array();
        for (const auto& blk : p.blocks) {
            json b = json::array();
            for (int i : blk) b.push_back(fm.points[static_cast<std::size_t>(i)]);
            arr.push_back(b);
        }
        return arr;
    };

    // (1) the two-valued indicator statistic induces a sufficient partition
    LabelStatistic indicator;
    indicator.map = {{"1", "1"}, {"2", "1"}, {"3", "0"}, {"4", "0"}};
    Partition ind_part = statistic_partition(indicator, fm);
    SufficiencyResult ind_suff = is_sufficient_partition(fm, ind_part);
    ok = ok && ind_suff.sufficient;
    {
        json step;
        step["blocks"] = blocks_by_label(ind_part);
        step["sufficient"] = ind_suff.sufficient;
        json cond = json::object();
        for (const auto& blk : ind_part.blocks) {
            for (int i : blk) {
                Rational mass = 0;
                for (int j : blk) mass += fm.pmf[0][static_cast<std::size_t>(j)];
                cond[fm.points[static_cast<std::size_t>(i)]] =
                    rational_str(fm.pmf[0][static_cast<std::size_t>(i)] / mass);
            }
        }
        step["conditionals"] = cond;  // theta-free by (1); shown at the first probe theta
        rep["indicator_statistic"] = step;
    }

    // (2) the identity statistic induces a sufficient partition
    LabelStatistic identity;
    for (const std::string& p : fm.points) identity.map[p] = p;
    Partition id_part = statistic_partition(identity, fm);
    SufficiencyResult id_suff = is_sufficient_partition(fm, id_part);
    ok = ok && id_suff.sufficient;
    rep["identity_statistic"] = {{"blocks", blocks_by_label(id_part)},
                                 {"sufficient", id_suff.sufficient}};

    // (3) countable separation hypothesis for the identity: the probe density
    // vectors distinguish every pair of points
    {
        json table = json::object();
        bool separated = true;
        for (std::size_t i = 0; i < fm.points.size(); ++i) {
            json col = json::array();
            for (std::size_t t = 0; t < fm.probe.size(); ++t)
                col.push_back(rational_str(fm.pmf[t][i]));
            table[fm.points[i]] = col;
        }
        for (std::size_t i = 0; i < fm.points.size(); ++i)
            for (std::size_t j = i + 1; j < fm.points.size(); ++j)
                if (column(fm, i) == column(fm, j)) separated = false;
        ok = ok && separated;
        rep["separation"] = {{"density_vectors", table}, {"pairwise_distinct", separated}};
    }

    // (4) yet the identity is not a function of the indicator statistic
    FunctionOfResult fo = is_function_of(identity, indicator, fm);
    ok = ok && !fo.is_function;
    rep["identity_function_of_indicator"] = {
        {"holds", fo.is_function},
        {"witness", fo.witness ? json({fo.witness->first, fo.witness->second}) : json()}};

    // (5) the exact ratio partition coincides with the indicator's, and the
    // identity partition strictly refines it: a criterion certifying the
    // identity as minimal is refuted on this model
    Partition min_part = minimal_partition(fm);
    bool min_equals_indicator = min_part.blocks == ind_part.blocks;
    bool id_refines = refines(id_part, min_part);
    bool strict = id_refines && id_part.blocks != min_part.blocks;
    SufficiencyResult min_suff = is_sufficient_partition(fm, min_part);
    ok = ok && min_equals_indicator && strict && min_suff.sufficient;
    rep["minimal_partition"] = {{"blocks", blocks_by_label(min_part)},
                                {"equals_indicator_partition", min_equals_indicator},
                                {"identity_strictly_refines", strict},
                                {"sufficient", min_suff.sufficient}};

    if (include_scaled_variant) {
        // scaling every mass by 4 makes the dominating measure a probability
        // measure; all ratios, hence the partition, are unchanged
        std::vector<std::vector<Rational>> scaled = fm.pmf;
        for (auto& row : scaled)
            for (Rational& v : row) v *= 4;
        json table = json::array();
        for (const auto& row : scaled) {
            json r = json::array();
            for (const Rational& v : row) r.push_back(rational_str(v));
            table.push_back(r);
        }
        Partition scaled_part = partition_from_table(scaled, fm.points.size());
        bool same = scaled_part.blocks == min_part.blocks;
        ok = ok && same;
        rep["scaled_variant"] = {{"densities", table}, {"partition_unchanged", same}};
    }

    rep["status"] = ok ? "criterion refuted, counterexample reproduced"
                       : "reproduction failed";
    out.ok = ok;
    return out;
}

}  // namespace minsuff::finite

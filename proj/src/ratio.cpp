#include "minsuff/ratio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <thread>

namespace minsuff {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class UnionFind {
  public:
    explicit UnionFind(int n) : parent_(n), size_(n, 1) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }

    int find(int a) {
        while (parent_[a] != a) {
            parent_[a] = parent_[parent_[a]];
            a = parent_[a];
        }
        return a;
    }

    void merge(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (size_[a] < size_[b]) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
    }

  private:
    std::vector<int> parent_;
    std::vector<int> size_;
};

Partition blocks_from_roots(UnionFind& uf, int n, const std::string& label) {
    std::vector<std::vector<int>> by_root(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) by_root[static_cast<std::size_t>(uf.find(i))].push_back(i);
    Partition p;
    p.corpus_label = label;
    for (auto& blk : by_root)
        if (!blk.empty()) p.blocks.push_back(std::move(blk));
    std::sort(p.blocks.begin(), p.blocks.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return p;
}

template <typename F>
void parallel_index_for(std::size_t count, F&& body) {
    int threads = std::min<int>(thread_cap(), static_cast<int>(count));
    if (threads <= 1 || count < 16) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::size_t chunk = (count + static_cast<std::size_t>(threads) - 1) / static_cast<std::size_t>(threads);
    for (int t = 0; t < threads; ++t) {
        std::size_t lo = static_cast<std::size_t>(t) * chunk;
        std::size_t hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&body, lo, hi] {
            for (std::size_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace

int thread_cap() {
    if (const char* env = std::getenv("MINSUFF_THREADS")) {
        int v = std::atoi(env);
        if (v >= 1) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

MixtureSpec MixtureSpec::dyadic(ParamGrid grid) {
    MixtureSpec mix;
    const std::size_t m = grid.points.size();
    if (m == 0) throw SpecError("mixture grid must be non-empty");
    mix.grid = std::move(grid);
    mix.weights.resize(m);
    double norm = 1.0 - std::ldexp(1.0, -static_cast<int>(m));  // sum of 2^-(n+1), n < m
    for (std::size_t n = 0; n < m; ++n)
        mix.weights[n] = std::ldexp(1.0, -static_cast<int>(n) - 1) / norm;
    return mix;
}

ProportionalityVerdict proportional(const Model& m, const ParamGrid& grid, const Vec& x,
                                    const Vec& y, double tol) {
    if (tol <= 0) throw SpecError("tolerance must be positive");
    if (grid.points.empty()) throw SpecError("parameter grid must be non-empty");

    ProportionalityVerdict v;
    std::vector<double> ratios;            // log f_theta(y) - log f_theta(x), both positive
    std::vector<std::size_t> ratio_theta;  // grid index per entry
    ratios.reserve(grid.points.size());

    for (std::size_t g = 0; g < grid.points.size(); ++g) {
        const Vec& theta = grid.points[g];
        double lx = log_density(m, theta, x);
        double ly = log_density(m, theta, y);
        bool zx = lx == -kInf;
        bool zy = ly == -kInf;
        if (zx != zy) {
            if (!v.zero_pattern_conflict) v.zero_pattern_conflict = theta;
            continue;
        }
        if (zx) continue;  // both zero at this theta
        ratios.push_back(ly - lx);
        ratio_theta.push_back(g);
    }

    if (!ratios.empty()) {
        double lo = *std::min_element(ratios.begin(), ratios.end());
        double hi = *std::max_element(ratios.begin(), ratios.end());
        v.log_spread = (std::isnan(lo) || std::isnan(hi)) ? kInf : hi - lo;
    }

    if (v.zero_pattern_conflict) {
        v.in_D = false;
        return v;
    }
    if (ratios.empty()) {
        // densities vanish at every grid theta for both points
        v.in_D = true;
        v.h = 1.0;
        v.log_spread = 0.0;
        return v;
    }
    double mean = std::accumulate(ratios.begin(), ratios.end(), 0.0) /
                  static_cast<double>(ratios.size());
    if (!(v.log_spread <= tol)) {  // catches NaN spread as well
        v.in_D = false;
        std::size_t worst = 0;
        double worst_dev = -1.0;
        for (std::size_t i = 0; i < ratios.size(); ++i) {
            double dev = std::isnan(ratios[i]) ? kInf : std::abs(ratios[i] - mean);
            if (dev > worst_dev) {
                worst_dev = dev;
                worst = i;
            }
        }
        v.witness_theta = grid.points[ratio_theta[worst]];
        return v;
    }
    v.in_D = true;
    v.h = std::exp(mean);
    return v;
}

Partition ratio_partition(const Model& m, const ParamGrid& grid, const Corpus& corpus,
                          double tol) {
    const int n = static_cast<int>(corpus.points.size());
    if (n == 0) throw SpecError("corpus must be non-empty");

    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);

    std::vector<char> edge(pairs.size(), 0);
    parallel_index_for(pairs.size(), [&](std::size_t k) {
        auto [i, j] = pairs[k];
        edge[k] = proportional(m, grid, corpus.points[static_cast<std::size_t>(i)],
                               corpus.points[static_cast<std::size_t>(j)], tol)
                      .in_D
                      ? 1
                      : 0;
    });

    UnionFind uf(n);
    for (std::size_t k = 0; k < pairs.size(); ++k)
        if (edge[k]) uf.merge(pairs[k].first, pairs[k].second);
    return blocks_from_roots(uf, n, corpus.label);
}

Partition statistic_partition(const Statistic& s, const Corpus& corpus) {
    const int n = static_cast<int>(corpus.points.size());
    if (n == 0) throw SpecError("corpus must be non-empty");
    std::vector<Vec> values;
    values.reserve(static_cast<std::size_t>(n));
    for (const Vec& x : corpus.points) values.push_back(apply_statistic(s, x));

    std::vector<char> eq(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0);
    auto at = [n](int i, int j) { return static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j); };
    UnionFind uf(n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (statistic_equal(s, values[static_cast<std::size_t>(i)], values[static_cast<std::size_t>(j)])) {
                eq[at(i, j)] = 1;
                uf.merge(i, j);
            }

    Partition p = blocks_from_roots(uf, n, corpus.label);
    // Closeness at a tolerance need not be transitive; the union-find already
    // took the transitive closure, so flag any same-block pair that is not
    // directly equal.
    for (const auto& blk : p.blocks)
        for (std::size_t a = 0; a < blk.size() && !p.tolerance_ambiguity; ++a)
            for (std::size_t b = a + 1; b < blk.size() && !p.tolerance_ambiguity; ++b)
                if (!eq[at(blk[a], blk[b])]) p.tolerance_ambiguity = true;
    return p;
}

bool refines(const Partition& p, const Partition& q) {
    if (p.corpus_label != q.corpus_label)
        throw SpecError("cannot compare partitions of different corpora (\"" + p.corpus_label +
                        "\" vs \"" + q.corpus_label + "\")");
    int max_index = -1;
    for (const auto& blk : q.blocks)
        for (int i : blk) max_index = std::max(max_index, i);
    std::vector<int> block_of(static_cast<std::size_t>(max_index + 1), -1);
    for (std::size_t b = 0; b < q.blocks.size(); ++b)
        for (int i : q.blocks[b]) block_of[static_cast<std::size_t>(i)] = static_cast<int>(b);
    for (const auto& blk : p.blocks) {
        if (blk.empty()) continue;
        if (blk.front() > max_index) return false;
        int target = block_of[static_cast<std::size_t>(blk.front())];
        for (int i : blk)
            if (i > max_index || block_of[static_cast<std::size_t>(i)] != target) return false;
    }
    return true;
}

Vec canonical_statistic(const Model& m, const MixtureSpec& mix, const Vec& x) {
    const std::size_t k = mix.grid.points.size();
    if (mix.weights.size() != k)
        throw SpecError("mixture weight count does not match grid size");
    double wsum = std::accumulate(mix.weights.begin(), mix.weights.end(), 0.0);
    if (std::abs(wsum - 1.0) > 1e-12) throw SpecError("mixture weights must sum to 1");

    std::vector<double> comp_log(k);
    double max_term = -kInf;
    for (std::size_t i = 0; i < k; ++i) {
        if (mix.weights[i] <= 0) throw SpecError("mixture weights must be positive");
        comp_log[i] = log_density(m, mix.grid.points[i], x);
        if (comp_log[i] == kInf)
            throw SpecError("model \"" + m.name + "\": infinite density under the mixture");
        max_term = std::max(max_term, comp_log[i] + std::log(mix.weights[i]));
    }

    Vec out(static_cast<Eigen::Index>(k));
    if (max_term == -kInf) {
        out.setZero();  // mixture density is zero: every component vanishes
        return out;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        acc += std::exp(comp_log[i] + std::log(mix.weights[i]) - max_term);
    double log_f = max_term + std::log(acc);
    for (std::size_t i = 0; i < k; ++i)
        out[static_cast<Eigen::Index>(i)] = std::exp(comp_log[i] - log_f);
    return out;
}

}  // namespace minsuff

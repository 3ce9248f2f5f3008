#include "lclfqa/kmeans.hpp"

#include <limits>

#include "lclfqa/error.hpp"
#include "lclfqa/random.hpp"

namespace lclfqa {

std::vector<std::vector<std::size_t>> KMeansResult::members() const {
    std::vector<std::vector<std::size_t>> out(k);
    for (std::size_t i = 0; i < labels.size(); ++i) out[labels[i]].push_back(i);
    return out;
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i] - b[i];
        d += x * x;
    }
    return d;
}

namespace {

std::vector<std::vector<double>> seed_centroids(const std::vector<std::vector<double>>& points, std::size_t k,
                                                Rng& rng) {
    std::vector<std::vector<double>> centroids;
    centroids.push_back(points[uniform_below(rng, points.size())]);
    std::vector<double> nearest(points.size(), std::numeric_limits<double>::infinity());
    while (centroids.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            nearest[i] = std::min(nearest[i], squared_distance(points[i], centroids.back()));
            total += nearest[i];
        }
        std::size_t pick = points.size() - 1;
        if (total > 0.0) {
            const double target = uniform01(rng) * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < points.size(); ++i) {
                acc += nearest[i];
                if (target < acc && nearest[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = uniform_below(rng, points.size());
        }
        centroids.push_back(points[pick]);
    }
    return centroids;
}

}  // namespace

KMeansResult kmeans(const std::vector<std::vector<double>>& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iterations) {
    if (k < 1 || k > points.size()) {
        throw PreconditionError("k-means needs 1 <= k <= " + std::to_string(points.size()) + ", got k = " +
                                std::to_string(k));
    }
    const std::size_t dim = points.front().size();
    for (const auto& p : points) {
        if (p.size() != dim) throw PreconditionError("k-means points have mixed dimensions");
    }

    Rng rng(seed);
    KMeansResult r;
    r.k = k;
    r.centroids = seed_centroids(points, k, rng);
    r.labels.assign(points.size(), k);

    for (std::size_t iter = 0; iter < max_iterations; ++iter) {
        bool changed = false;
        double inertia = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            std::size_t best = 0;
            double best_d = squared_distance(points[i], r.centroids[0]);
            for (std::size_t c = 1; c < k; ++c) {
                const double d = squared_distance(points[i], r.centroids[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (r.labels[i] != best) changed = true;
            r.labels[i] = best;
            inertia += best_d;
        }
        r.inertia_history.push_back(inertia);
        r.iterations = iter + 1;
        if (!changed) {
            r.converged = true;
            break;
        }

        std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            ++counts[r.labels[i]];
            for (std::size_t d = 0; d < dim; ++d) sums[r.labels[i]][d] += points[i][d];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            for (std::size_t d = 0; d < dim; ++d) r.centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
        }
    }
    return r;
}

}  // namespace lclfqa

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace lclfqa {

struct KMeansResult {
    std::size_t k = 0;
    std::vector<std::size_t> labels;                 ///< one per point, in [0, k)
    std::vector<std::vector<double>> centroids;
    std::vector<double> inertia_history;             ///< after each assignment step
    std::size_t iterations = 0;
    bool converged = false;

    [[nodiscard]] double inertia() const { return inertia_history.empty() ? 0.0 : inertia_history.back(); }
    [[nodiscard]] std::vector<std::vector<std::size_t>> members() const;
};

/// Squared Euclidean distance.
double squared_distance(const std::vector<double>& a, const std::vector<double>& b);

/// Lloyd's algorithm with k-means++ seeding. Stops when no label changes or after
/// max_iterations. An empty cluster keeps its previous centroid. Ties go to the
/// lower cluster index. Throws PreconditionError unless 1 <= k <= points.size().
KMeansResult kmeans(const std::vector<std::vector<double>>& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iterations = 100);

}  // namespace lclfqa

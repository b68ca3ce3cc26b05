#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "fairim/common.hpp"
#include "fairim/rng.hpp"

namespace fairim {

struct Clustering {
    Eigen::MatrixXd centroids;             // k x d
    std::vector<std::size_t> assignment;   // point index -> cluster index
    double objective = 0.0;                // sum of squared distances
    std::vector<double> iteration_objectives;
    bool converged = false;
};

namespace detail {

inline std::size_t nearest_centroid(const Eigen::RowVectorXd& point,
                                    const Eigen::MatrixXd& centroids) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
        const double d = (centroids.row(c) - point).squaredNorm();
        if (d < best_d) {  // strict: ties keep the lowest index
            best_d = d;
            best = static_cast<std::size_t>(c);
        }
    }
    return best;
}

inline Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& points, std::size_t k,
                                     SplitMix64& rng) {
    const auto n = static_cast<std::size_t>(points.rows());
    Eigen::MatrixXd centroids(k, points.cols());
    std::vector<std::uint8_t> chosen(n, 0);

    const std::size_t first = rng.next_index(n);
    centroids.row(0) = points.row(static_cast<Eigen::Index>(first));
    chosen[first] = 1;

    Eigen::VectorXd min_dist(n);
    for (std::size_t i = 0; i < n; ++i)
        min_dist(i) = (points.row(i) - centroids.row(0)).squaredNorm();

    for (std::size_t j = 1; j < k; ++j) {
        const double total = min_dist.sum();
        std::size_t pick = n;
        if (total > 0.0) {
            const double threshold = rng.next_unit() * total;
            double cum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                cum += min_dist(i);
                if (cum > threshold && min_dist(i) > 0.0) {
                    pick = i;
                    break;
                }
            }
            if (pick == n) {  // threshold fell on the trailing zero mass
                for (std::size_t i = n; i-- > 0;)
                    if (min_dist(i) > 0.0) {
                        pick = i;
                        break;
                    }
            }
        }
        if (pick == n) {  // all remaining points coincide with a centroid
            for (std::size_t i = 0; i < n; ++i)
                if (!chosen[i]) {
                    pick = i;
                    break;
                }
        }
        centroids.row(j) = points.row(static_cast<Eigen::Index>(pick));
        chosen[pick] = 1;
        for (std::size_t i = 0; i < n; ++i)
            min_dist(i) = std::min(min_dist(i),
                                   (points.row(i) - centroids.row(j)).squaredNorm());
    }
    return centroids;
}

}  // namespace detail

namespace detail {

// One Lloyd run from a single k-means++ seeding. Assignment ties go to the
// lowest cluster index; empty clusters are repaired by stealing the point
// farthest from its centroid (ties to the lowest point index). Stops on
// assignment fixpoint, 300 iterations, or objective improvement below 1e-6.
inline Clustering lloyd_run(const Eigen::MatrixXd& points, std::size_t k,
                            std::uint64_t rng_seed) {
    const auto n = static_cast<std::size_t>(points.rows());
    SplitMix64 rng(rng_seed);
    Clustering result;
    result.centroids = detail::kmeanspp_init(points, k, rng);

    std::vector<std::size_t> prev_assignment;
    double prev_objective = std::numeric_limits<double>::infinity();
    constexpr std::size_t kMaxIterations = 300;
    constexpr double kImprovementTol = 1e-6;

    for (std::size_t iter = 0; iter < kMaxIterations; ++iter) {
        std::vector<std::size_t> assignment(n);
        std::vector<std::size_t> cluster_size(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            assignment[i] = detail::nearest_centroid(points.row(i), result.centroids);
            ++cluster_size[assignment[i]];
        }

        bool repaired = false;
        for (std::size_t c = 0; c < k; ++c) {
            if (cluster_size[c] != 0) continue;
            // steal the point farthest from its centroid, from any donor
            // cluster that can spare one
            std::size_t steal = n;
            double steal_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (cluster_size[assignment[i]] < 2) continue;
                const double d =
                    (points.row(i) - result.centroids.row(assignment[i])).squaredNorm();
                if (d > steal_d) {
                    steal_d = d;
                    steal = i;
                }
            }
            --cluster_size[assignment[steal]];
            assignment[steal] = c;
            ++cluster_size[c];
            result.centroids.row(c) = points.row(static_cast<Eigen::Index>(steal));
            repaired = true;
        }

        double objective = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            objective += (points.row(i) - result.centroids.row(assignment[i])).squaredNorm();
        result.iteration_objectives.push_back(objective);

        const bool fixpoint = assignment == prev_assignment;
        const bool tiny_improvement =
            !repaired && iter > 0 && prev_objective - objective < kImprovementTol;
        result.assignment = assignment;
        result.objective = objective;
        if (fixpoint || tiny_improvement) {
            result.converged = true;
            break;
        }
        prev_assignment = std::move(assignment);
        prev_objective = objective;

        // centroid update: mean of each cluster
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
        for (std::size_t i = 0; i < n; ++i)
            sums.row(prev_assignment[i]) += points.row(i);
        for (std::size_t c = 0; c < k; ++c)
            result.centroids.row(c) = sums.row(c) / static_cast<double>(cluster_size[c]);
    }
    return result;
}

}  // namespace detail

// Lloyd can stall in a poor local optimum from a single seeding, so each call
// runs several independent k-means++ restarts (seeds derived from rng_seed)
// and keeps the lowest objective; ties keep the earliest restart. Still
// bit-deterministic for a fixed seed.
inline constexpr std::size_t kKmeansRestarts = 16;

inline Clustering kmeans(const Eigen::MatrixXd& points, std::size_t k,
                         std::uint64_t rng_seed) {
    const auto n = static_cast<std::size_t>(points.rows());
    if (k == 0) throw config_error("kmeans: k must be positive");
    if (k > n)
        throw config_error("kmeans: k=" + std::to_string(k) + " exceeds point count " +
                           std::to_string(n));

    Clustering best;
    double best_objective = std::numeric_limits<double>::infinity();
    for (std::size_t restart = 0; restart < kKmeansRestarts; ++restart) {
        Clustering run = detail::lloyd_run(points, k, derive_seed(rng_seed, restart));
        if (run.objective < best_objective) {
            best_objective = run.objective;
            best = std::move(run);
        }
    }
    return best;
}

// Indices of the s candidates nearest to the query, sorted by distance then
// index (equidistant candidates keep ascending index order).
inline std::vector<std::size_t> knn(std::size_t s, const Eigen::RowVectorXd& query,
                                    const Eigen::MatrixXd& candidates) {
    const auto n = static_cast<std::size_t>(candidates.rows());
    if (s > n)
        throw config_error("knn: s=" + std::to_string(s) + " exceeds candidate count " +
                           std::to_string(n));
    std::vector<std::pair<double, std::size_t>> ranked(n);
    for (std::size_t i = 0; i < n; ++i)
        ranked[i] = {(candidates.row(i) - query).squaredNorm(), i};
    std::sort(ranked.begin(), ranked.end());
    std::vector<std::size_t> out(s);
    for (std::size_t i = 0; i < s; ++i) out[i] = ranked[i].second;
    return out;
}

// Nearest non-excluded row of Z to the query; ties go to the lowest id.
// An empty mask excludes nothing.
inline NodeId nearest_node(const Eigen::RowVectorXd& query, const Eigen::MatrixXd& Z,
                           const std::vector<std::uint8_t>& excluded = {}) {
    const auto n = static_cast<std::size_t>(Z.rows());
    NodeId best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t u = 0; u < n; ++u) {
        if (!excluded.empty() && excluded[u]) continue;
        const double d = (Z.row(u) - query).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<NodeId>(u);
            found = true;
        }
    }
    if (!found) throw data_error("nearest_node: every node is excluded");
    return best;
}

// Same, but restricted to an explicit candidate id list (ids index rows of Z).
inline NodeId nearest_node_among(const Eigen::RowVectorXd& query, const Eigen::MatrixXd& Z,
                                 const std::vector<NodeId>& candidates,
                                 const std::vector<std::uint8_t>& excluded) {
    NodeId best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    bool found = false;
    for (NodeId u : candidates) {
        if (!excluded.empty() && excluded[u]) continue;
        const double d = (Z.row(u) - query).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = u;
            found = true;
        }
    }
    if (!found) throw data_error("nearest_node_among: every candidate is excluded");
    return best;
}

}  // namespace fairim

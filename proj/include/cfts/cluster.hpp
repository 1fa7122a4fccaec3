#pragma once

#include <vector>

#include "cfts/rng.hpp"
#include "cfts/tensor.hpp"

namespace cfts::cluster {

struct CentroidModel {
    std::vector<std::vector<double>> centroids;  // K x d
    std::vector<double> wcss_trace;              // per-iteration, non-increasing
    int dim() const { return centroids.empty() ? 0 : static_cast<int>(centroids[0].size()); }
    int k() const { return static_cast<int>(centroids.size()); }
};

// Diagonal-covariance Gaussian mixture.
struct MixtureModel {
    std::vector<double> weights;                 // simplex over K
    std::vector<std::vector<double>> means;      // K x d
    std::vector<std::vector<double>> variances;  // K x d, floored
    std::vector<double> loglik_trace;            // per EM iteration, non-decreasing
    int dim() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }
    int k() const { return static_cast<int>(means.size()); }
};

// Treatment-agnostic cluster structure plus per-treatment weights
// w[k][a] = n[k][a] / n[a].  Absent treatment groups are flagged rather than
// encoded as NaN.
struct SubgroupAssignment {
    std::vector<int> labels;
    std::vector<std::vector<int>> counts;     // K x A
    std::vector<std::vector<double>> weights; // K x A; 0 where the group is absent
    std::vector<bool> treatment_present;      // A
    int k() const { return static_cast<int>(counts.size()); }
};

CentroidModel fit_kmeans(const Tensor& points, int k, int max_iter, Rng& rng);

MixtureModel fit_gmm(const Tensor& points, int k, int max_iter, double tol, Rng& rng,
                     double variance_floor = 1e-6);

// Argmax responsibility / nearest centroid; ties break to the lowest index.
std::vector<int> assign_clusters(const MixtureModel& model, const Tensor& points);
std::vector<int> assign_clusters(const CentroidModel& model, const Tensor& points);

// Per-point responsibilities (n x K), rows on the simplex.
Tensor responsibilities(const MixtureModel& model, const Tensor& points);

SubgroupAssignment subgroup_weights(const std::vector<int>& labels,
                                    const std::vector<int>& treatments, int k, int n_treatments);

// max_k tr(Sigma_k); the epsilon feeding the 4*sqrt(epsilon) slack term.
double covariance_trace_bound(const MixtureModel& model);

}  // namespace cfts::cluster

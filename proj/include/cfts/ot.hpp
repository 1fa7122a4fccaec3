#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cfts/cluster.hpp"
#include "cfts/rng.hpp"
#include "cfts/tape.hpp"

namespace cfts::ot {

using ad::Tape;

struct TransportConfig {
    double reg = 0.01;           // entropic regularization (absolute)
    int max_iters = 2000;
    double convergence_tol = 1e-6;  // max marginal violation
};

struct SinkhornResult {
    Tensor plan;      // (m x n), marginals match within tol when converged
    double distance;  // <plan, cost>, no entropy term
    bool converged;
    int iterations;
};

// Euclidean cost matrix between point clouds (rows are points).
Tensor pairwise_cost(const Tensor& a_points, const Tensor& b_points);
double mean_cost(const Tensor& cost);

// Log-domain stabilized Sinkhorn iterations over fixed marginals.
SinkhornResult sinkhorn(const Tensor& cost, const std::vector<double>& a_weights,
                        const std::vector<double>& b_weights, const TransportConfig& config);

// Sinkhorn with uniform weights and regularization scaled to the instance:
// reg = reg_scale * mean(cost).
SinkhornResult sinkhorn_uniform(const Tensor& a_points, const Tensor& b_points, double reg_scale,
                                const TransportConfig& base = TransportConfig{});

// Sorted-matching / quantile W1 between 1-D samples with uniform weights.
double exact_w1_1d(std::vector<double> samples_a, std::vector<double> samples_b);

// Exact optimal transport cost for small instances (<= 16 atoms per side),
// solved with the transportation simplex.
double exact_transport_small(const Tensor& cost, std::vector<double> a_weights,
                             std::vector<double> b_weights);

// Indices (into the concatenation of the groups, in group order) forming the
// shuffled 1/|A| subsample that defines the cross-treatment mixture.
std::vector<int> uniform_mixture_indices(const std::vector<int>& group_sizes, Rng& rng);
Tensor uniform_mixture_sample(const std::vector<Tensor>& subgroup_reps_by_treatment, Rng& rng);

// ---- alignment loss --------------------------------------------------------

struct SgaConfig {
    double reg_scale = 0.05;  // Sinkhorn reg relative to the term's mean cost
    int max_iters = 500;
    double convergence_tol = 1e-6;
};

struct SgaTerm {
    int k = -1, a = -1;
    double weight = 0.0;
    double distance = 0.0;
};

// Transport plans + mixture index draws for one sga_loss evaluation.  Reusing
// a filled cache freezes the plans, which is exactly the envelope-gradient
// semantics the loss differentiates under.
struct SgaPlanCache {
    struct Entry {
        int k, a;
        double weight;
        std::vector<int> x_idx, y_idx;  // rows of the representation matrix
        Tensor plan;
    };
    std::vector<Entry> entries;
    bool filled = false;
};

// Weighted sum of Sinkhorn distances from each (treatment, cluster) group to
// the cluster's uniform cross-treatment mixture.  points is the (n x d)
// representation matrix on the tape; gradient flows to it through the fixed
// plans.  mix_seed should be derived from (run seed, epoch, t).
Tape::Id sga_loss(Tape& tape, Tape::Id points, const cluster::SubgroupAssignment& assignment,
                  const SgaConfig& cfg, std::uint64_t mix_seed, std::vector<SgaTerm>* terms = nullptr,
                  SgaPlanCache* cache = nullptr);

// Value-only convenience wrapper (fresh tape internally).
double sga_loss_value(const Tensor& points, const cluster::SubgroupAssignment& assignment,
                      const SgaConfig& cfg, std::uint64_t mix_seed,
                      SgaPlanCache* cache = nullptr);

// ---- mixture-level distance and bound diagnostics ---------------------------

// W1 between two Gaussian components (means + diagonal variances).
using ComponentW1 =
    std::function<double(const std::vector<double>&, const std::vector<double>&,
                         const std::vector<double>&, const std::vector<double>&)>;

// Default estimator: Sinkhorn on n_samples seeded draws per component, with a
// mean-distance shortcut when both traces are below 1e-4.
ComponentW1 sampled_component_w1(std::uint64_t seed, int n_samples = 256, double reg_scale = 0.01);

// Exact coupling over component-pair W1 costs.
double mw1_gaussian_mixtures(const cluster::MixtureModel& gmm0, const cluster::MixtureModel& gmm1,
                             const ComponentW1& component_w1_estimator);

struct AlignmentReport {
    double marginal_w1 = 0.0;            // mean over unordered treatment pairs
    double weighted_subgroup_sum = 0.0;  // mean over pairs of sum_k w_k W1(paired)
    double delta_c = 0.0;                // 4 * sqrt(max component trace)
    double inequality_slack = 0.0;       // marginal + delta_c - weighted sum
    double cf_risk_proxy = 0.0;          // filled by the evaluation layer
    int n_pairs = 0;
    bool complete = false;  // false when < 2 treatment groups were present
};

// Measurable terms of the sub-group bound at one timestep.  Pair weights pool
// cluster proportions over the two arms of each pair.
AlignmentReport bound_terms(const Tensor& points, const cluster::SubgroupAssignment& assignment,
                            const cluster::MixtureModel& gmm, const TransportConfig& tcfg,
                            double reg_scale = 0.01);

struct PairedDistanceRow {
    int t = 0, k = 0, treat_a = 0, treat_b = 0;
    double paired_w1 = 0.0;
    double avg_nonpaired_w1 = 0.0;
    bool paired_less = false;
};

// Checks W1(paired sub-groups) <= average W1(non-paired) per (k, treatment
// pair) at one timestep.
std::vector<PairedDistanceRow> paired_distance_audit(const Tensor& points,
                                                     const cluster::SubgroupAssignment& assignment,
                                                     int t_tag, const TransportConfig& tcfg,
                                                     double reg_scale = 0.01);

}  // namespace cfts::ot

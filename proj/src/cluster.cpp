#include "cfts/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cfts/errors.hpp"

namespace cfts::cluster {

namespace {

double sq_dist(const double* a, const double* b, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
        const double diff = a[i] - b[i];
        s += diff * diff;
    }
    return s;
}

const double* row(const Tensor& pts, int i) { return &pts.data[static_cast<std::size_t>(i) * pts.cols()]; }

void check_points(const Tensor& pts, int k, const char* who) {
    if (pts.rank() != 2) throw ShapeError(std::string(who) + ": points must be a matrix");
    if (pts.rows() == 0) throw DomainError(std::string(who) + ": empty input");
    if (k < 1) throw ConfigError(std::string(who) + ": k must be >= 1");
    if (pts.rows() < k) throw DegenerateInput(std::string(who) + ": fewer points than clusters");
}

}  // namespace

CentroidModel fit_kmeans(const Tensor& points, int k, int max_iter, Rng& rng) {
    check_points(points, k, "fit_kmeans");
    const int n = points.rows(), d = points.cols();
    CentroidModel model;
    model.centroids.assign(k, std::vector<double>(d, 0.0));

    // k-means++ seeding.
    std::vector<double> min_d2(n, std::numeric_limits<double>::max());
    {
        const int first = static_cast<int>(rng.uniform_index(n));
        std::copy(row(points, first), row(points, first) + d, model.centroids[0].begin());
        for (int c = 1; c < k; ++c) {
            double total = 0.0;
            for (int i = 0; i < n; ++i) {
                min_d2[i] = std::min(min_d2[i], sq_dist(row(points, i), model.centroids[c - 1].data(), d));
                total += min_d2[i];
            }
            int pick = 0;
            if (total > 0.0) {
                double u = rng.uniform() * total;
                for (int i = 0; i < n; ++i) {
                    u -= min_d2[i];
                    if (u <= 0.0) {
                        pick = i;
                        break;
                    }
                    pick = i;
                }
            } else {
                pick = static_cast<int>(rng.uniform_index(n));
            }
            std::copy(row(points, pick), row(points, pick) + d, model.centroids[c].begin());
        }
    }

    std::vector<int> labels(n, -1);
    for (int iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double bd = sq_dist(row(points, i), model.centroids[0].data(), d);
            for (int c = 1; c < k; ++c) {
                const double dd = sq_dist(row(points, i), model.centroids[c].data(), d);
                if (dd < bd) {
                    bd = dd;
                    best = c;
                }
            }
            if (labels[i] != best) {
                labels[i] = best;
                changed = true;
            }
        }
        std::vector<int> counts(k, 0);
        std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
        for (int i = 0; i < n; ++i) {
            ++counts[labels[i]];
            const double* p = row(points, i);
            for (int j = 0; j < d; ++j) sums[labels[i]][j] += p[j];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                for (int j = 0; j < d; ++j) model.centroids[c][j] = sums[c][j] / counts[c];
            } else {
                // Re-seed an empty cluster at the point farthest from its
                // nearest centroid, keeping K fixed.
                int far = 0;
                double far_d = -1.0;
                for (int i = 0; i < n; ++i) {
                    double nd = std::numeric_limits<double>::max();
                    for (int c2 = 0; c2 < k; ++c2)
                        if (c2 != c) nd = std::min(nd, sq_dist(row(points, i), model.centroids[c2].data(), d));
                    if (nd > far_d) {
                        far_d = nd;
                        far = i;
                    }
                }
                std::copy(row(points, far), row(points, far) + d, model.centroids[c].begin());
                labels[far] = c;
                changed = true;
            }
        }
        double wcss = 0.0;
        for (int i = 0; i < n; ++i) wcss += sq_dist(row(points, i), model.centroids[labels[i]].data(), d);
        model.wcss_trace.push_back(wcss);
        if (!changed) break;
    }
    return model;
}

namespace {
double log_gauss_diag(const double* x, const std::vector<double>& mean,
                      const std::vector<double>& var) {
    constexpr double kLog2Pi = 1.8378770664093453;
    double s = 0.0;
    for (std::size_t j = 0; j < mean.size(); ++j) {
        const double diff = x[j] - mean[j];
        s += kLog2Pi + std::log(var[j]) + diff * diff / var[j];
    }
    return -0.5 * s;
}
}  // namespace

MixtureModel fit_gmm(const Tensor& points, int k, int max_iter, double tol, Rng& rng,
                     double variance_floor) {
    check_points(points, k, "fit_gmm");
    const int n = points.rows(), d = points.cols();
    MixtureModel m;
    m.weights.assign(k, 1.0 / k);
    m.means.assign(k, std::vector<double>(d, 0.0));
    m.variances.assign(k, std::vector<double>(d, 1.0));

    // Initialize from a k-means pass.
    CentroidModel km = fit_kmeans(points, k, 25, rng);
    std::vector<int> labels = assign_clusters(km, points);
    {
        std::vector<int> counts(k, 0);
        for (int i = 0; i < n; ++i) ++counts[labels[i]];
        for (int c = 0; c < k; ++c) {
            m.weights[c] = std::max(1, counts[c]) / static_cast<double>(n);
            m.means[c] = km.centroids[c];
        }
        double wsum = 0.0;
        for (double w : m.weights) wsum += w;
        for (double& w : m.weights) w /= wsum;
        std::vector<std::vector<double>> acc(k, std::vector<double>(d, 0.0));
        for (int i = 0; i < n; ++i) {
            const double* p = row(points, i);
            for (int j = 0; j < d; ++j) {
                const double diff = p[j] - m.means[labels[i]][j];
                acc[labels[i]][j] += diff * diff;
            }
        }
        std::vector<int> counts2(k, 0);
        for (int i = 0; i < n; ++i) ++counts2[labels[i]];
        for (int c = 0; c < k; ++c)
            for (int j = 0; j < d; ++j)
                m.variances[c][j] =
                    std::max(variance_floor, counts2[c] > 1 ? acc[c][j] / counts2[c] : 1.0);
    }

    std::vector<std::vector<double>> resp(n, std::vector<double>(k, 0.0));
    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < max_iter; ++iter) {
        // E-step (log domain).
        double ll = 0.0;
        for (int i = 0; i < n; ++i) {
            const double* x = row(points, i);
            double mx = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                resp[i][c] = std::log(m.weights[c]) + log_gauss_diag(x, m.means[c], m.variances[c]);
                mx = std::max(mx, resp[i][c]);
            }
            double z = 0.0;
            for (int c = 0; c < k; ++c) z += std::exp(resp[i][c] - mx);
            const double log_z = mx + std::log(z);
            ll += log_z;
            for (int c = 0; c < k; ++c) resp[i][c] = std::exp(resp[i][c] - log_z);
        }
        m.loglik_trace.push_back(ll);
        // M-step.
        for (int c = 0; c < k; ++c) {
            double rsum = 0.0;
            for (int i = 0; i < n; ++i) rsum += resp[i][c];
            if (rsum < 1e-12) {
                // Component died: re-seed at the point with the lowest total
                // likelihood under the current mixture.
                int far = 0;
                double worst = std::numeric_limits<double>::max();
                for (int i = 0; i < n; ++i) {
                    double best = -std::numeric_limits<double>::infinity();
                    for (int c2 = 0; c2 < k; ++c2)
                        best = std::max(best,
                                        log_gauss_diag(row(points, i), m.means[c2], m.variances[c2]));
                    if (best < worst) {
                        worst = best;
                        far = i;
                    }
                }
                std::copy(row(points, far), row(points, far) + d, m.means[c].begin());
                m.variances[c].assign(d, 1.0);
                m.weights[c] = 1.0 / n;
                continue;
            }
            m.weights[c] = rsum / n;
            for (int j = 0; j < d; ++j) {
                double mu = 0.0;
                for (int i = 0; i < n; ++i) mu += resp[i][c] * points.at(i, j);
                mu /= rsum;
                double var = 0.0;
                for (int i = 0; i < n; ++i) {
                    const double diff = points.at(i, j) - mu;
                    var += resp[i][c] * diff * diff;
                }
                m.means[c][j] = mu;
                m.variances[c][j] = std::max(variance_floor, var / rsum);
            }
        }
        double wsum = 0.0;
        for (double w : m.weights) wsum += w;
        for (double& w : m.weights) w /= wsum;
        if (iter > 0 && ll - prev_ll < tol && ll >= prev_ll) break;
        prev_ll = ll;
    }
    return m;
}

std::vector<int> assign_clusters(const MixtureModel& model, const Tensor& points) {
    if (points.rank() != 2 || points.cols() != model.dim())
        throw ShapeError("assign_clusters: dimension mismatch");
    const int n = points.rows();
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
        int best = 0;
        double bv = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < model.k(); ++c) {
            const double v = std::log(model.weights[c]) +
                             log_gauss_diag(row(points, i), model.means[c], model.variances[c]);
            if (v > bv) {
                bv = v;
                best = c;
            }
        }
        labels[i] = best;
    }
    return labels;
}

std::vector<int> assign_clusters(const CentroidModel& model, const Tensor& points) {
    if (points.rank() != 2 || points.cols() != model.dim())
        throw ShapeError("assign_clusters: dimension mismatch");
    const int n = points.rows(), d = points.cols();
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
        int best = 0;
        double bd = sq_dist(row(points, i), model.centroids[0].data(), d);
        for (int c = 1; c < model.k(); ++c) {
            const double dd = sq_dist(row(points, i), model.centroids[c].data(), d);
            if (dd < bd) {
                bd = dd;
                best = c;
            }
        }
        labels[i] = best;
    }
    return labels;
}

Tensor responsibilities(const MixtureModel& model, const Tensor& points) {
    if (points.rank() != 2 || points.cols() != model.dim())
        throw ShapeError("responsibilities: dimension mismatch");
    const int n = points.rows(), k = model.k();
    Tensor r({n, k});
    for (int i = 0; i < n; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            r.at(i, c) = std::log(model.weights[c]) +
                         log_gauss_diag(row(points, i), model.means[c], model.variances[c]);
            mx = std::max(mx, r.at(i, c));
        }
        double z = 0.0;
        for (int c = 0; c < k; ++c) z += std::exp(r.at(i, c) - mx);
        for (int c = 0; c < k; ++c) r.at(i, c) = std::exp(r.at(i, c) - mx) / z;
    }
    return r;
}

SubgroupAssignment subgroup_weights(const std::vector<int>& labels,
                                    const std::vector<int>& treatments, int k, int n_treatments) {
    if (labels.size() != treatments.size())
        throw ShapeError("subgroup_weights: labels/treatments length mismatch");
    SubgroupAssignment a;
    a.labels = labels;
    a.counts.assign(k, std::vector<int>(n_treatments, 0));
    a.weights.assign(k, std::vector<double>(n_treatments, 0.0));
    a.treatment_present.assign(n_treatments, false);
    std::vector<int> totals(n_treatments, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= k) throw std::out_of_range("subgroup_weights: label");
        if (treatments[i] < 0 || treatments[i] >= n_treatments)
            throw std::out_of_range("subgroup_weights: treatment");
        ++a.counts[labels[i]][treatments[i]];
        ++totals[treatments[i]];
    }
    for (int t = 0; t < n_treatments; ++t) {
        a.treatment_present[t] = totals[t] > 0;
        if (totals[t] == 0) continue;
        for (int c = 0; c < k; ++c) a.weights[c][t] = static_cast<double>(a.counts[c][t]) / totals[t];
    }
    return a;
}

double covariance_trace_bound(const MixtureModel& model) {
    double eps = 0.0;
    for (const auto& var : model.variances) {
        double tr = 0.0;
        for (double v : var) tr += v;
        eps = std::max(eps, tr);
    }
    return eps;
}

}  // namespace cfts::cluster

#include "cfts/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cfts::sim {

namespace {
constexpr double kPi = 3.14159265358979323846;

ParamDist dist(double mean, double std, double lo, double hi) { return {mean, std, lo, hi}; }

void validate_dist(const ParamDist& d, const char* name, double min_lo) {
    if (d.std < 0.0) throw ConfigError(std::string(name) + ": std < 0");
    if (d.lo > d.hi) throw ConfigError(std::string(name) + ": empty truncation interval");
    if (d.lo < min_lo) throw ConfigError(std::string(name) + ": lower bound below admissible range");
}
}  // namespace

double diameter_from_volume(double volume) {
    if (volume < 0.0) throw DomainError("diameter_from_volume: negative volume");
    return std::cbrt(6.0 * volume / kPi);
}

double volume_from_diameter(double diameter) {
    if (diameter < 0.0) throw DomainError("volume_from_diameter: negative diameter");
    return kPi * diameter * diameter * diameter / 6.0;
}

void HeterogeneitySpec::validate() const {
    if (components.empty()) throw ConfigError("heterogeneity spec has no components");
    double wsum = 0.0;
    for (const auto& c : components) {
        if (c.weight <= 0.0) throw ConfigError("component weight must be positive");
        wsum += c.weight;
        validate_dist(c.rho, "rho", 1e-12);
        validate_dist(c.carrying_capacity, "carrying_capacity", 1e-12);
        validate_dist(c.beta_c, "beta_c", 0.0);
        validate_dist(c.alpha_r, "alpha_r", 0.0);
        validate_dist(c.beta_r, "beta_r", 0.0);
        validate_dist(c.init_diameter, "init_diameter", 1e-12);
    }
    if (wsum <= 0.0) throw ConfigError("component weights must sum to a positive value");
}

HeterogeneitySpec HeterogeneitySpec::defaults() {
    // Three growth phenotypes; chemo/radio sensitivity scales with growth so
    // treated trajectories stay dynamic instead of collapsing to the floor.
    HeterogeneitySpec s;
    HeterogeneityComponent slow;
    slow.weight = 0.35;
    slow.rho = dist(0.055, 0.010, 0.02, 0.12);
    slow.carrying_capacity = dist(14137.0, 250.0, 12000.0, 16000.0);
    slow.beta_c = dist(0.045, 0.008, 0.0, 0.12);
    slow.alpha_r = dist(0.035, 0.006, 0.0, 0.12);
    slow.beta_r = dist(0.008, 0.002, 0.0, 0.05);
    slow.init_diameter = dist(3.5, 0.8, 1.0, 11.0);
    HeterogeneityComponent medium = slow;
    medium.weight = 0.35;
    medium.rho = dist(0.080, 0.010, 0.02, 0.15);
    medium.beta_c = dist(0.060, 0.008, 0.0, 0.15);
    medium.alpha_r = dist(0.045, 0.006, 0.0, 0.15);
    medium.init_diameter = dist(4.5, 0.8, 1.0, 11.0);
    HeterogeneityComponent fast = slow;
    fast.weight = 0.30;
    fast.rho = dist(0.110, 0.012, 0.02, 0.20);
    fast.beta_c = dist(0.080, 0.010, 0.0, 0.20);
    fast.alpha_r = dist(0.060, 0.008, 0.0, 0.20);
    fast.beta_r = dist(0.012, 0.003, 0.0, 0.05);
    fast.init_diameter = dist(5.5, 1.0, 1.0, 11.0);
    s.components = {slow, medium, fast};
    return s;
}

double SimulationConfig::d_max() const { return diameter_from_volume(v_max); }

void SimulationConfig::validate() const {
    if (n_units < 1) throw ConfigError("n_units must be positive");
    if (horizon < 2) throw ConfigError("horizon must be at least 2");
    if (noise_std < 0.0) throw ConfigError("noise_std must be non-negative");
    if (chemo_decay < 0.0 || chemo_decay >= 1.0) throw ConfigError("chemo_decay must be in [0,1)");
    if (chemo_dose < 0.0 || radio_dose < 0.0) throw ConfigError("doses must be non-negative");
    if (diameter_window < 1) throw ConfigError("diameter_window must be >= 1");
    if (v_max <= 0.0 || volume_floor <= 0.0 || volume_floor >= v_max)
        throw ConfigError("need 0 < volume_floor < v_max");
    const double fsum = split_fractions[0] + split_fractions[1] + split_fractions[2];
    if (std::abs(fsum - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
    for (double f : split_fractions)
        if (f < 0.0) throw ConfigError("split fractions must be non-negative");
    heterogeneity.validate();
}

double chemo_concentration(double prev_concentration, bool chemo_given,
                           const SimulationConfig& config) {
    if (prev_concentration < 0.0) throw DomainError("chemo_concentration: negative concentration");
    return config.chemo_decay * prev_concentration + (chemo_given ? config.chemo_dose : 0.0);
}

double tumor_step(double volume, double concentration, bool radio_given,
                  const PatientParams& params, double noise, const SimulationConfig& config) {
    if (volume <= 0.0) throw DomainError("tumor_step: volume must be positive");
    const double d = radio_given ? config.radio_dose : 0.0;
    const double growth = params.rho * std::log(params.carrying_capacity / volume);
    const double chemo = params.beta_c * concentration;
    const double radio = params.alpha_r * d + params.beta_r * d * d;
    const double next = (1.0 + growth - chemo - radio + noise) * volume;
    return std::clamp(next, config.volume_floor, config.v_max);
}

double treatment_probability(double avg_diameter, double gamma, double d_max) {
    if (d_max <= 0.0) throw DomainError("treatment_probability: d_max must be positive");
    if (avg_diameter < 0.0) throw DomainError("treatment_probability: negative diameter");
    const double x = gamma / d_max * (avg_diameter - d_max / 2.0);
    return 1.0 / (1.0 + std::exp(-x));
}

PatientParams sample_patient_params(Rng& rng, const HeterogeneitySpec& spec) {
    spec.validate();
    double wsum = 0.0;
    for (const auto& c : spec.components) wsum += c.weight;
    double u = rng.uniform() * wsum;
    std::size_t pick = spec.components.size() - 1;
    for (std::size_t i = 0; i < spec.components.size(); ++i) {
        u -= spec.components[i].weight;
        if (u < 0.0) {
            pick = i;
            break;
        }
    }
    const HeterogeneityComponent& c = spec.components[pick];
    auto draw = [&rng](const ParamDist& d) {
        return rng.truncated_normal(d.mean, d.std, d.lo, d.hi);
    };
    PatientParams p;
    p.rho = draw(c.rho);
    p.carrying_capacity = draw(c.carrying_capacity);
    p.beta_c = draw(c.beta_c);
    p.alpha_r = draw(c.alpha_r);
    p.beta_r = draw(c.beta_r);
    p.init_volume = volume_from_diameter(draw(c.init_diameter));
    p.mixture_component = static_cast<int>(pick);
    return p;
}

namespace {
double rolling_avg_diameter(const std::vector<double>& volumes, int t, int window) {
    const int lo = std::max(0, t - window + 1);
    double s = 0.0;
    for (int i = lo; i <= t; ++i) s += diameter_from_volume(volumes[i]);
    return s / (t - lo + 1);
}
}  // namespace

Trajectory simulate_trajectory(const PatientParams& params, const SimulationConfig& config,
                               Rng& rng) {
    config.validate();
    const int H = config.horizon;
    Trajectory tr;
    tr.params = params;
    tr.volumes.reserve(H);
    tr.volumes.push_back(std::clamp(params.init_volume, config.volume_floor, config.v_max));
    const double d_max = config.d_max();
    double conc_prev = 0.0;
    for (int t = 0; t < H - 1; ++t) {
        const double dbar = rolling_avg_diameter(tr.volumes, t, config.diameter_window);
        const double p = treatment_probability(dbar, config.gamma, d_max);
        const bool chemo = rng.bernoulli(p);
        const bool radio = rng.bernoulli(p);
        const double conc = chemo_concentration(conc_prev, chemo, config);
        const double eps = config.noise_std > 0.0 ? rng.normal(0.0, config.noise_std) : 0.0;
        const double next = tumor_step(tr.volumes[t], conc, radio, params, eps, config);
        tr.avg_diameters.push_back(dbar);
        tr.assignment_probs.push_back(p);
        tr.chemo_flags.push_back(chemo ? 1 : 0);
        tr.radio_flags.push_back(radio ? 1 : 0);
        tr.concentrations.push_back(conc);
        tr.noise_draws.push_back(eps);
        tr.volumes.push_back(next);
        conc_prev = conc;
    }
    return tr;
}

PanelDataset generate_dataset(const SimulationConfig& config) {
    config.validate();
    const int n = config.n_units;
    auto count_for = [n](double f) { return static_cast<int>(std::lround(f * n)); };
    int n_train = count_for(config.split_fractions[0]);
    int n_val = count_for(config.split_fractions[1]);
    int n_test = n - n_train - n_val;
    if ((config.split_fractions[0] > 0.0 && n_train < 1) ||
        (config.split_fractions[1] > 0.0 && n_val < 1) ||
        (config.split_fractions[2] > 0.0 && n_test < 1) || n_test < 0)
        throw ConfigError("n_units too small for the requested split fractions");

    PanelDataset ds;
    ds.config = config;
    ds.units.reserve(n);
    for (int u = 0; u < n; ++u) {
        Rng unit_rng = Rng::stream(config.seed, {0x756e6974ULL, static_cast<std::uint64_t>(u)});
        PatientParams p = sample_patient_params(unit_rng, config.heterogeneity);
        ds.units.push_back(simulate_trajectory(p, config, unit_rng));
    }
    std::vector<int> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    Rng split_rng = Rng::stream(config.seed, {0x73706c6974ULL});
    split_rng.shuffle(ids);
    ds.train_ids.assign(ids.begin(), ids.begin() + n_train);
    ds.val_ids.assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
    ds.test_ids.assign(ids.begin() + n_train + n_val, ids.end());
    std::sort(ds.train_ids.begin(), ds.train_ids.end());
    std::sort(ds.val_ids.begin(), ds.val_ids.end());
    std::sort(ds.test_ids.begin(), ds.test_ids.end());
    return ds;
}

namespace {
// Continuation under a plan, starting at anchor t and reusing the factual
// noise draws so plan differences isolate treatment effects.
std::vector<double> continue_under_plan(const Trajectory& traj, int t, const TreatmentPlan& plan,
                                        const SimulationConfig& config) {
    const int steps = static_cast<int>(plan.chemo.size());
    std::vector<double> out;
    out.reserve(steps);
    double v = traj.volumes[t];
    double conc_prev = t > 0 ? traj.concentrations[t - 1] : 0.0;
    for (int s = 0; s < steps; ++s) {
        const double conc = chemo_concentration(conc_prev, plan.chemo[s] != 0, config);
        v = tumor_step(v, conc, plan.radio[s] != 0, traj.params, traj.noise_draws[t + s], config);
        out.push_back(v);
        conc_prev = conc;
    }
    return out;
}

bool plan_is_factual(const Trajectory& traj, int t, const TreatmentPlan& plan) {
    for (std::size_t s = 0; s < plan.chemo.size(); ++s) {
        if (plan.chemo[s] != traj.chemo_flags[t + s]) return false;
        if (plan.radio[s] != traj.radio_flags[t + s]) return false;
    }
    return true;
}
}  // namespace

CounterfactualBundle enumerate_one_step_counterfactuals(const Trajectory& traj, int t,
                                                        const SimulationConfig& config) {
    if (t < 0 || t >= traj.horizon() - 1)
        throw std::out_of_range("enumerate_one_step_counterfactuals: t out of range");
    CounterfactualBundle b;
    b.anchor_time = t;
    b.horizon = 1;
    for (int c = 0; c <= 1; ++c) {
        for (int r = 0; r <= 1; ++r) {
            TreatmentPlan plan;
            plan.chemo = {static_cast<std::uint8_t>(c)};
            plan.radio = {static_cast<std::uint8_t>(r)};
            b.outcomes.push_back(continue_under_plan(traj, t, plan, config));
            if (plan_is_factual(traj, t, plan)) b.factual_plan = static_cast<int>(b.plans.size());
            b.plans.push_back(std::move(plan));
        }
    }
    return b;
}

CounterfactualBundle sliding_treatment_counterfactuals(const Trajectory& traj, int t, int tau_max,
                                                       const SimulationConfig& config) {
    if (tau_max < 1) throw ContractError("sliding_treatment_counterfactuals: tau_max must be >= 1");
    if (t < 0 || t + tau_max > traj.horizon() - 1)
        throw std::out_of_range("sliding_treatment_counterfactuals: window overflow");
    CounterfactualBundle b;
    b.anchor_time = t;
    b.horizon = tau_max;
    for (int j = 0; j < tau_max; ++j) {
        TreatmentPlan plan;
        plan.chemo.assign(tau_max, 0);
        plan.radio.assign(tau_max, 0);
        plan.chemo[j] = 1;
        plan.radio[j] = 1;
        b.outcomes.push_back(continue_under_plan(traj, t, plan, config));
        if (plan_is_factual(traj, t, plan)) b.factual_plan = static_cast<int>(b.plans.size());
        b.plans.push_back(std::move(plan));
    }
    return b;
}

}  // namespace cfts::sim

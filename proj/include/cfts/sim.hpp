#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "cfts/errors.hpp"
#include "cfts/rng.hpp"

namespace cfts::sim {

// Per-patient response characteristics, one draw per unit.
struct PatientParams {
    double rho = 0.0;                // per-step growth rate
    double carrying_capacity = 0.0;  // cm^3
    double beta_c = 0.0;             // chemo sensitivity
    double alpha_r = 0.0;            // linear radio sensitivity
    double beta_r = 0.0;             // quadratic radio sensitivity
    double init_volume = 0.0;        // cm^3 at t = 0
    int mixture_component = -1;
};

struct ParamDist {
    double mean = 0.0, std = 0.0, lo = 0.0, hi = 0.0;
};

struct HeterogeneityComponent {
    double weight = 1.0;
    ParamDist rho, carrying_capacity, beta_c, alpha_r, beta_r, init_diameter;
};

struct HeterogeneitySpec {
    std::vector<HeterogeneityComponent> components;
    void validate() const;
    // Documented default: three components spanning slow/medium/fast growth,
    // calibrated so roughly half of untreated trajectories pass 0.5 * v_max
    // by the default horizon.
    static HeterogeneitySpec defaults();
};

struct SimulationConfig {
    double gamma = 0.0;  // confounding strength
    int n_units = 200;
    int horizon = 30;  // number of recorded volumes; horizon - 1 treatment steps
    double noise_std = 0.01;
    double chemo_decay = 0.5;  // per-step exponential decay of concentration
    double chemo_dose = 5.0;
    double radio_dose = 2.0;
    int diameter_window = 15;
    double v_max = 1150.0;       // cm^3, also the metric normalizer
    double volume_floor = 1e-3;  // cm^3
    std::uint64_t seed = 1;
    std::array<double, 3> split_fractions{0.6, 0.2, 0.2};
    HeterogeneitySpec heterogeneity = HeterogeneitySpec::defaults();

    double d_max() const;  // sphere-equivalent diameter of v_max
    void validate() const;
};

// One unit's factual record.  volumes has length horizon; the treatment,
// concentration, probability, noise and diameter-average sequences have
// length horizon - 1 (entry t drives the transition t -> t+1).
struct Trajectory {
    std::vector<double> volumes;
    std::vector<std::uint8_t> chemo_flags;
    std::vector<std::uint8_t> radio_flags;
    std::vector<double> concentrations;
    std::vector<double> assignment_probs;
    std::vector<double> noise_draws;
    std::vector<double> avg_diameters;
    PatientParams params;

    int horizon() const { return static_cast<int>(volumes.size()); }
};

struct TreatmentPlan {
    std::vector<std::uint8_t> chemo;
    std::vector<std::uint8_t> radio;
};

// Ground-truth continuations for a set of treatment plans anchored at a
// timestep.  outcomes[p][s] is the volume at anchor_time + s + 1 under plan p;
// counterfactual continuations reuse the factual noise draws.
struct CounterfactualBundle {
    int unit_id = -1;
    int anchor_time = 0;
    int horizon = 1;
    std::vector<TreatmentPlan> plans;
    std::vector<std::vector<double>> outcomes;
    int factual_plan = -1;

    double outcome_at(int plan, int tau) const { return outcomes.at(plan).at(tau - 1); }
};

struct PanelDataset {
    SimulationConfig config;
    std::vector<Trajectory> units;  // index == unit id
    std::vector<int> train_ids, val_ids, test_ids;
};

// ---- elementary pieces -----------------------------------------------------

double diameter_from_volume(double volume);
double volume_from_diameter(double diameter);

double chemo_concentration(double prev_concentration, bool chemo_given,
                           const SimulationConfig& config);

// One application of the growth recurrence, clamped to
// [volume_floor, v_max].  radio_given scales config.radio_dose.
double tumor_step(double volume, double concentration, bool radio_given,
                  const PatientParams& params, double noise, const SimulationConfig& config);

// sigma(gamma / d_max * (avg_diameter - d_max / 2)); shared by both therapies.
double treatment_probability(double avg_diameter, double gamma, double d_max);

PatientParams sample_patient_params(Rng& rng, const HeterogeneitySpec& spec);

Trajectory simulate_trajectory(const PatientParams& params, const SimulationConfig& config,
                               Rng& rng);

PanelDataset generate_dataset(const SimulationConfig& config);

// All four (chemo, radio) combinations at time t; outcomes span one step.
CounterfactualBundle enumerate_one_step_counterfactuals(const Trajectory& traj, int t,
                                                        const SimulationConfig& config);

// tau_max plans over [t, t + tau_max - 1]; plan j applies the joint treatment
// event at t + j and nothing else in the window.
CounterfactualBundle sliding_treatment_counterfactuals(const Trajectory& traj, int t, int tau_max,
                                                       const SimulationConfig& config);

}  // namespace cfts::sim

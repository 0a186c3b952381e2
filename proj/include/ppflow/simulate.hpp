#pragma once

#include "ppflow/common.hpp"
#include "ppflow/seqdata.hpp"

#include <nlohmann/json_fwd.hpp>

#include <variant>
#include <vector>

namespace ppflow {

// Homogeneous Poisson process with a fixed positive rate.
struct ConstantIntensity {
    double rate = 1.0;
};

// Inhomogeneous Poisson intensity built from Gaussian-shaped bumps:
//   lambda(t) = sum_i alpha_i (2 pi sigma_i^2)^(-1/2) exp(-(t - c_i)^2 / sigma_i^2)
// Note the exponent uses sigma^2, not 2 sigma^2.
// With period > 0 the bump pattern repeats every `period` time units, which
// keeps the intensity recurrent so fixed-length simulation terminates.
struct PoissonBumpIntensity {
    std::vector<double> alphas{14, 18, 13, 17, 10, 13};
    std::vector<double> centers{3, 6, 9, 12, 15, 18};
    std::vector<double> sigmas{5, 5, 5, 5, 5, 5};
    double period = 0.0;  // 0 = no repetition

    void validate() const;
};

// Self-exciting process with exponential kernel:
//   lambda(t|H) = mu + beta * sum_{t_i < t} exp(-decay (t - t_i))
struct HawkesParams {
    double mu = 1.0;
    double beta = 0.8;
    double decay = 1.0;

    double branching_ratio() const { return beta / decay; }
    void validate() const;
};

// Two IP/SE halves concatenated into one shuffled dataset.
struct IpSeCombo {
    PoissonBumpIntensity ip;
    HawkesParams se;
};

// Sequence distribution that alternates per step between a two-component
// Gaussian mixture (odd steps, 1-based) and a single Gaussian (even steps).
struct SwitchingSpec {
    double even_mean = 4.0;
    double even_std = 1.0;
    std::vector<double> mix_means{4.0, 10.0};
    std::vector<double> mix_stds{1.0, 1.0};
    std::vector<double> mix_weights{0.5, 0.5};
    int seq_len = 15;
    int n_seqs = 1000;

    void validate() const;
};

using ProcessSpec = std::variant<ConstantIntensity, PoissonBumpIntensity, HawkesParams, IpSeCombo>;
using TruthSpec =
    std::variant<ConstantIntensity, PoissonBumpIntensity, HawkesParams, IpSeCombo, SwitchingSpec>;

struct SimConfig {
    int target_len = 60;   // events per sequence (fixed-length mode)
    int n_seqs = 20000;    // desk-scale overrides are expected
    std::uint64_t seed = 0;
    double horizon = 0.0;  // > 0 switches to fixed-horizon mode
    int workers = 1;
};

double ip_intensity(double t, const PoissonBumpIntensity& p);
// Integral of the IP intensity over [a, b], in closed form via erf.
double ip_compensator(double a, double b, const PoissonBumpIntensity& p);

double hawkes_intensity(double t, const std::vector<double>& history, const HawkesParams& p);

std::vector<EventSequence> simulate_thinning(const ProcessSpec& spec, const SimConfig& cfg);

// Average per-event log-likelihood of the sequence under the exact process law.
double ground_truth_loglik(const EventSequence& seq, const TruthSpec& spec);
// Pooled event mean across a dataset (IpSeCombo dispatches per sequence id).
double dataset_ground_truth_loglik(const Dataset& ds, const TruthSpec& spec);

// Compensator increments over each inter-event interval: u_n = Lambda(t_{n-1}, t_n).
// For a correctly simulated process these are iid Exponential(1).
std::vector<double> rescaled_gaps(const EventSequence& seq, const TruthSpec& spec);

Dataset simulate_switching(const SwitchingSpec& spec, std::uint64_t seed);
double switching_log_density(double value, int step_index_1based, const SwitchingSpec& spec);
double switching_ground_truth_loglik(const Dataset& ds, const SwitchingSpec& spec);

struct MarkRule {
    // mark_n = quantile bucket of tau_n; with probability `noise` the mark is
    // replaced by a uniform draw over the other categories.
    double noise = 0.1;
};

Dataset simulate_marked(const ProcessSpec& base,
                        int num_categories,
                        const MarkRule& rule,
                        const SimConfig& cfg);

// Assemble simulated sequences into a Dataset (positive mode), recording the
// generating spec in the metadata so ground-truth scores stay recoverable.
Dataset sequences_to_dataset(const std::vector<EventSequence>& seqs,
                             const ProcessSpec& spec,
                             const SimConfig& cfg);

nlohmann::json process_spec_to_json(const ProcessSpec& spec);
ProcessSpec process_spec_from_json(const nlohmann::json& j);
nlohmann::json truth_spec_to_json(const TruthSpec& spec);
TruthSpec truth_spec_from_json(const nlohmann::json& j);
// Recover the generating law recorded by the simulator, if any.
std::optional<TruthSpec> truth_from_metadata(const Dataset& ds);

}  // namespace ppflow

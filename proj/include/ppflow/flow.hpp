#pragma once

#include "ppflow/common.hpp"
#include "ppflow/nn.hpp"
#include "ppflow/tape.hpp"

#include <utility>

namespace ppflow {

struct IntegrationConfig {
    int num_steps = 20;  // fixed-step RK4 over s in [0, 1]

    void validate() const {
        if (num_steps < 1) throw ValidationError("num_steps must be >= 1");
    }
};

// The ODE flow maps R -> R; composing with exp reaches the positive half-line
// needed for inter-arrival times (identity stays available for unconstrained
// values such as the switching experiment).
enum class OutputMap { Identity, LogPositive };

std::string to_string(OutputMap m);
OutputMap output_map_from_string(const std::string& s);

struct BaseDistribution {
    double mean = 0.0;
    double std = 1.0;
};

struct FlowConfig {
    MlpSpec dynamics{2, {64, 64, 64}, 1};  // h(z, s): state and integration time in
    IntegrationConfig integration;
    OutputMap output_map = OutputMap::LogPositive;
    std::string prefix = "flow";

    void validate() const;
    std::string dyn_prefix() const { return prefix + ".dyn"; }
};

// Final dynamics layer starts at zero so the flow begins as the identity.
void init_flow(ParameterStore& store, const FlowConfig& cfg, Rng& rng);

// Fixed-step RK4 on the augmented state (z, delta_logp) where
//   dz/ds = h(z, s),  d(delta_logp)/ds = -dh/dz.
// Forward runs s: 0 -> 1 and returns delta with log p(y) = log p(z0) + delta.
// Inverse runs s: 1 -> 0 through the same tableau, so its delta accumulates
// the opposite sign and forward-delta + inverse-delta = 0 along matched paths.
// Dyn: void(const Mat& z /*1xB*/, double s, Mat& h_out, Mat& dhdz_out)
template <typename Dyn>
void rk4_integrate(Mat& z, Mat& delta, bool inverse, int num_steps, Dyn&& dyn) {
    if (num_steps < 1) throw ValidationError("num_steps must be >= 1");
    const double ds = (inverse ? -1.0 : 1.0) / double(num_steps);
    double s = inverse ? 1.0 : 0.0;
    delta = Mat::Zero(1, z.cols());
    Mat k1, k2, k3, k4, d1, d2, d3, d4, stage;
    for (int step = 0; step < num_steps; ++step) {
        dyn(z, s, k1, d1);
        stage = z + (0.5 * ds) * k1;
        dyn(stage, s + 0.5 * ds, k2, d2);
        stage = z + (0.5 * ds) * k2;
        dyn(stage, s + 0.5 * ds, k3, d3);
        stage = z + ds * k3;
        dyn(stage, s + ds, k4, d4);
        z += (ds / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        delta -= (ds / 6.0) * (d1 + 2.0 * d2 + 2.0 * d3 + d4);
        s += ds;
        if (!z.allFinite() || !delta.allFinite()) {
            throw NumericalError("flow integration diverged to a non-finite state");
        }
    }
}

struct FlowResult {
    Mat state;       // 1 x B final values
    Mat delta_logp;  // 1 x B accumulated log-density change
};

FlowResult flow_forward(const ParameterStore& store, const FlowConfig& cfg, Mat z0);
FlowResult flow_inverse(const ParameterStore& store, const FlowConfig& cfg, Mat y);

// Log-density of inter-arrival values under base + flow + output map.
// base_mean/base_std are per-column (1 x B).
Mat flow_log_density(const ParameterStore& store,
                     const FlowConfig& cfg,
                     const Mat& taus,
                     const Mat& base_mean,
                     const Mat& base_std);

// Draw one value per column of base_mean/base_std.
Mat flow_sample(const ParameterStore& store,
                const FlowConfig& cfg,
                const Mat& base_mean,
                const Mat& base_std,
                Rng& rng);

// Map observed taus into flow space (identity or log); validates positivity.
Mat to_flow_space(const Mat& taus, OutputMap map);
// Per-column additive log-density correction of the output map: 0 or -log tau.
Mat output_map_correction(const Mat& taus, OutputMap map);

// Tape-mode counterparts used by training objectives. `state` is a 1 x B node.
std::pair<int, int> flow_integrate_tape(Tape& tape,
                                        BoundParams& params,
                                        const FlowConfig& cfg,
                                        int state,
                                        bool inverse);

// Log-density node (1 x B) for constant data taus given base parameter nodes.
int flow_log_density_tape(Tape& tape,
                          BoundParams& params,
                          const FlowConfig& cfg,
                          const Mat& taus,
                          int base_mean,
                          int base_std);

}  // namespace ppflow

#include "ppflow/flow.hpp"

#include <cmath>

namespace ppflow {

std::string to_string(OutputMap m) {
    return m == OutputMap::Identity ? "identity" : "log_positive";
}

OutputMap output_map_from_string(const std::string& s) {
    if (s == "identity") return OutputMap::Identity;
    if (s == "log_positive") return OutputMap::LogPositive;
    throw DataError("unknown output map '" + s + "'");
}

void FlowConfig::validate() const {
    if (dynamics.input != 2 || dynamics.output != 1) {
        throw ValidationError("flow dynamics must map (state, time) -> 1");
    }
    dynamics.validate();
    integration.validate();
}

void init_flow(ParameterStore& store, const FlowConfig& cfg, Rng& rng) {
    cfg.validate();
    init_mlp(store, cfg.dyn_prefix(), cfg.dynamics, rng, /*zero_last=*/true);
}

namespace {

const Mat& state_tangent() {
    static const Mat t = (Mat(2, 1) << 1.0, 0.0).finished();
    return t;
}

FlowResult integrate_raw(const ParameterStore& store, const FlowConfig& cfg, Mat state,
                         bool inverse) {
    cfg.validate();
    if (state.rows() != 1) throw ValidationError("flow state must be a 1 x B row");
    Mat x(2, state.cols());
    auto dyn = [&](const Mat& z, double s, Mat& h, Mat& dhdz) {
        x.row(0) = z;
        x.row(1).setConstant(s);
        mlp_eval_with_jvp(store, cfg.dyn_prefix(), cfg.dynamics, x, state_tangent(), h, dhdz);
    };
    FlowResult res;
    rk4_integrate(state, res.delta_logp, inverse, cfg.integration.num_steps, dyn);
    res.state = std::move(state);
    return res;
}

}  // namespace

FlowResult flow_forward(const ParameterStore& store, const FlowConfig& cfg, Mat z0) {
    return integrate_raw(store, cfg, std::move(z0), /*inverse=*/false);
}

FlowResult flow_inverse(const ParameterStore& store, const FlowConfig& cfg, Mat y) {
    return integrate_raw(store, cfg, std::move(y), /*inverse=*/true);
}

Mat to_flow_space(const Mat& taus, OutputMap map) {
    if (map == OutputMap::Identity) return taus;
    if ((taus.array() <= 0.0).any()) {
        throw ValidationError("log_positive output map requires tau > 0");
    }
    return taus.array().log();
}

Mat output_map_correction(const Mat& taus, OutputMap map) {
    if (map == OutputMap::Identity) return Mat::Zero(taus.rows(), taus.cols());
    return -taus.array().log();
}

Mat flow_log_density(const ParameterStore& store,
                     const FlowConfig& cfg,
                     const Mat& taus,
                     const Mat& base_mean,
                     const Mat& base_std) {
    if (taus.rows() != 1 || base_mean.rows() != 1 || base_std.rows() != 1 ||
        taus.cols() != base_mean.cols() || taus.cols() != base_std.cols()) {
        throw ValidationError("flow_log_density: inputs must be matching 1 x B rows");
    }
    if ((base_std.array() <= 0.0).any()) {
        throw ValidationError("flow_log_density: base std must be > 0");
    }
    const Mat y = to_flow_space(taus, cfg.output_map);
    const FlowResult inv = flow_inverse(store, cfg, y);
    const auto z = inv.state.array();
    Mat ll = (-0.5 * std::log(2.0 * M_PI) - base_std.array().log() -
              0.5 * ((z - base_mean.array()) / base_std.array()).square())
                 .matrix();
    ll -= inv.delta_logp;  // log|df/dy| = -delta_inverse
    ll += output_map_correction(taus, cfg.output_map);
    return ll;
}

Mat flow_sample(const ParameterStore& store,
                const FlowConfig& cfg,
                const Mat& base_mean,
                const Mat& base_std,
                Rng& rng) {
    if (base_mean.rows() != 1 || base_std.rows() != 1 || base_mean.cols() != base_std.cols()) {
        throw ValidationError("flow_sample: base parameters must be matching 1 x B rows");
    }
    Mat z(1, base_mean.cols());
    std::normal_distribution<double> n01(0.0, 1.0);
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        z(0, j) = base_mean(0, j) + base_std(0, j) * n01(rng);
    }
    FlowResult fwd = flow_forward(store, cfg, std::move(z));
    if (cfg.output_map == OutputMap::Identity) return fwd.state;
    return fwd.state.array().exp();
}

std::pair<int, int> flow_integrate_tape(Tape& tape,
                                        BoundParams& params,
                                        const FlowConfig& cfg,
                                        int state,
                                        bool inverse) {
    cfg.validate();
    if (tape.value(state).rows() != 1) throw ValidationError("flow state must be a 1 x B row");
    const int ncols = static_cast<int>(tape.value(state).cols());
    const int num_steps = cfg.integration.num_steps;
    const double ds = (inverse ? -1.0 : 1.0) / double(num_steps);
    double s = inverse ? 1.0 : 0.0;

    auto dyn = [&](int z, double at) {
        const int x = tape.vcat(z, tape.constant(Mat::Constant(1, ncols, at)));
        int jvp = -1;
        const int h = mlp_apply_with_jvp(tape, params, cfg.dyn_prefix(), cfg.dynamics, x,
                                         state_tangent(), &jvp);
        return std::pair<int, int>{h, jvp};
    };

    int z = state;
    int delta = tape.constant(Mat::Zero(1, ncols));
    for (int step = 0; step < num_steps; ++step) {
        const auto [k1, d1] = dyn(z, s);
        const auto [k2, d2] = dyn(tape.add(z, tape.scale(k1, 0.5 * ds)), s + 0.5 * ds);
        const auto [k3, d3] = dyn(tape.add(z, tape.scale(k2, 0.5 * ds)), s + 0.5 * ds);
        const auto [k4, d4] = dyn(tape.add(z, tape.scale(k3, ds)), s + ds);
        const int ksum = tape.add(tape.add(k1, tape.scale(tape.add(k2, k3), 2.0)), k4);
        z = tape.add(z, tape.scale(ksum, ds / 6.0));
        const int dsum = tape.add(tape.add(d1, tape.scale(tape.add(d2, d3), 2.0)), d4);
        delta = tape.sub(delta, tape.scale(dsum, ds / 6.0));
        s += ds;
        if (!tape.value(z).allFinite() || !tape.value(delta).allFinite()) {
            throw NumericalError("flow integration diverged to a non-finite state");
        }
    }
    return {z, delta};
}

int flow_log_density_tape(Tape& tape,
                          BoundParams& params,
                          const FlowConfig& cfg,
                          const Mat& taus,
                          int base_mean,
                          int base_std) {
    const Mat y = to_flow_space(taus, cfg.output_map);
    const auto [z, delta_inv] = flow_integrate_tape(tape, params, cfg, tape.constant(y),
                                                    /*inverse=*/true);
    int ll = tape.gaussian_log_pdf(z, base_mean, base_std);
    ll = tape.sub(ll, delta_inv);
    if (cfg.output_map == OutputMap::LogPositive) {
        ll = tape.add(ll, tape.constant(output_map_correction(taus, cfg.output_map)));
    }
    return ll;
}

}  // namespace ppflow

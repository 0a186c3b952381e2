#pragma once

#include "ppflow/common.hpp"
#include "ppflow/tape.hpp"

#include <nlohmann/json_fwd.hpp>

#include <map>
#include <string>
#include <vector>

namespace ppflow {

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Named trainable tensors with per-parameter Adam state.
class ParameterStore {
public:
    struct Entry {
        Mat value;
        Mat m;
        Mat v;
        long step = 0;
    };

    void add(const std::string& name, Mat value);
    bool has(const std::string& name) const { return entries_.count(name) != 0; }
    Mat& at(const std::string& name);
    const Mat& at(const std::string& name) const;
    Entry& entry(const std::string& name);
    std::vector<std::string> names() const;
    std::size_t count() const { return entries_.size(); }

    const std::map<std::string, Entry>& entries() const { return entries_; }
    std::map<std::string, Entry>& entries() { return entries_; }

private:
    std::map<std::string, Entry> entries_;
};

using GradMap = std::map<std::string, Mat>;

// Standard bias-corrected Adam; requires a gradient for every parameter.
void adam_step(ParameterStore& store, const GradMap& grads, const AdamConfig& cfg);

// Param leaves bound onto a tape; collect gradients by name after backward.
class BoundParams {
public:
    BoundParams(Tape& tape, ParameterStore& store) : tape_(&tape), store_(&store) {}
    int operator[](const std::string& name);
    // Gradients for every parameter in the store; unused ones are zero.
    GradMap collect() const;

private:
    Tape* tape_;
    ParameterStore* store_;
    std::map<std::string, int> ids_;
};

struct MlpSpec {
    int input = 1;
    std::vector<int> hidden;
    int output = 1;

    void validate() const;
    std::vector<std::pair<int, int>> layer_dims() const;  // (out, in) per layer
};

struct LstmSpec {
    int input = 1;
    int hidden = 1;

    void validate() const;
};

// Uniform(+-sqrt(6/(fan_in+fan_out))) weights, zero biases.
void init_mlp(ParameterStore& store,
              const std::string& prefix,
              const MlpSpec& spec,
              Rng& rng,
              bool zero_last = false);
// One weight matrix (4H x (in+H)) and bias (4H); forget-gate bias 1.
void init_lstm(ParameterStore& store, const std::string& prefix, const LstmSpec& spec, Rng& rng);
void init_linear(ParameterStore& store,
                 const std::string& prefix,
                 int in,
                 int out,
                 Rng& rng,
                 double weight_scale = 1.0);

// Tape-mode forward passes (columns are batch entries).
int mlp_apply(Tape& tape, BoundParams& params, const std::string& prefix, const MlpSpec& spec, int x);
int linear_apply(Tape& tape, BoundParams& params, const std::string& prefix, int x);
// Returns (h', c'); gates in row order input, forget, output, candidate.
std::pair<int, int> lstm_step(Tape& tape,
                              BoundParams& params,
                              const std::string& prefix,
                              const LstmSpec& spec,
                              int x,
                              int h,
                              int c);

// Raw (gradient-free) forward passes on plain matrices.
Mat mlp_eval(const ParameterStore& store, const std::string& prefix, const MlpSpec& spec, Mat x);
Mat linear_eval(const ParameterStore& store, const std::string& prefix, const Mat& x);
void lstm_step_eval(const ParameterStore& store,
                    const std::string& prefix,
                    const LstmSpec& spec,
                    const Mat& x,
                    Mat& h,
                    Mat& c);

// MLP forward together with the directional derivative of the output along an
// input tangent (forward-mode pass expressed with the same primitives).
int mlp_apply_with_jvp(Tape& tape,
                       BoundParams& params,
                       const std::string& prefix,
                       const MlpSpec& spec,
                       int x,
                       const Mat& input_tangent,  // input x 1 column
                       int* jvp_out);
void mlp_eval_with_jvp(const ParameterStore& store,
                       const std::string& prefix,
                       const MlpSpec& spec,
                       const Mat& x,
                       const Mat& input_tangent,
                       Mat& out,
                       Mat& jvp);

double gaussian_logpdf(double x, double mean, double std);
double softplus(double x);

nlohmann::json store_to_json(const ParameterStore& store, bool with_optimizer_state);
ParameterStore store_from_json(const nlohmann::json& j);

}  // namespace ppflow

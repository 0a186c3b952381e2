#include "ppflow/nn.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace ppflow {

using nlohmann::json;

void ParameterStore::add(const std::string& name, Mat value) {
    if (has(name)) throw ValidationError("parameter '" + name + "' already exists");
    Entry e;
    e.m = Mat::Zero(value.rows(), value.cols());
    e.v = Mat::Zero(value.rows(), value.cols());
    e.value = std::move(value);
    entries_.emplace(name, std::move(e));
}

Mat& ParameterStore::at(const std::string& name) { return entry(name).value; }

const Mat& ParameterStore::at(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ValidationError("unknown parameter '" + name + "'");
    return it->second.value;
}

ParameterStore::Entry& ParameterStore::entry(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ValidationError("unknown parameter '" + name + "'");
    return it->second;
}

std::vector<std::string> ParameterStore::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [k, v] : entries_) out.push_back(k);
    return out;
}

void adam_step(ParameterStore& store, const GradMap& grads, const AdamConfig& cfg) {
    for (const auto& [name, entry] : store.entries()) {
        if (grads.find(name) == grads.end()) {
            throw ValidationError("adam_step: missing gradient for '" + name + "'");
        }
    }
    for (auto& [name, e] : store.entries()) {
        const Mat& g = grads.at(name);
        if (g.rows() != e.value.rows() || g.cols() != e.value.cols()) {
            throw ValidationError("adam_step: gradient shape mismatch for '" + name + "'");
        }
        e.step += 1;
        e.m = cfg.beta1 * e.m + (1.0 - cfg.beta1) * g;
        e.v.array() = cfg.beta2 * e.v.array() + (1.0 - cfg.beta2) * g.array().square();
        const double bc1 = 1.0 - std::pow(cfg.beta1, double(e.step));
        const double bc2 = 1.0 - std::pow(cfg.beta2, double(e.step));
        e.value.array() -=
            cfg.lr * (e.m.array() / bc1) / ((e.v.array() / bc2).sqrt() + cfg.eps);
    }
}

int BoundParams::operator[](const std::string& name) {
    auto it = ids_.find(name);
    if (it != ids_.end()) return it->second;
    const int id = tape_->param(store_->at(name));
    ids_.emplace(name, id);
    return id;
}

GradMap BoundParams::collect() const {
    GradMap out;
    for (const auto& [name, e] : store_->entries()) {
        auto it = ids_.find(name);
        if (it == ids_.end()) {
            out.emplace(name, Mat::Zero(e.value.rows(), e.value.cols()));
        } else {
            out.emplace(name, tape_->grad(it->second));
        }
    }
    return out;
}

void MlpSpec::validate() const {
    if (input < 1 || output < 1) throw ValidationError("mlp sizes must be >= 1");
    for (int h : hidden) {
        if (h < 1) throw ValidationError("mlp hidden sizes must be >= 1");
    }
}

std::vector<std::pair<int, int>> MlpSpec::layer_dims() const {
    std::vector<std::pair<int, int>> dims;
    int in = input;
    for (int h : hidden) {
        dims.emplace_back(h, in);
        in = h;
    }
    dims.emplace_back(output, in);
    return dims;
}

void LstmSpec::validate() const {
    if (input < 1 || hidden < 1) throw ValidationError("lstm sizes must be >= 1");
}

namespace {

Mat xavier_uniform(int rows, int cols, Rng& rng, double scale) {
    const double bound = scale * std::sqrt(6.0 / double(rows + cols));
    std::uniform_real_distribution<double> u(-bound, bound);
    Mat w(rows, cols);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = u(rng);
    }
    return w;
}

}  // namespace

void init_mlp(ParameterStore& store,
              const std::string& prefix,
              const MlpSpec& spec,
              Rng& rng,
              bool zero_last) {
    spec.validate();
    const auto dims = spec.layer_dims();
    for (std::size_t l = 0; l < dims.size(); ++l) {
        const auto [out, in] = dims[l];
        const bool zero = zero_last && l + 1 == dims.size();
        Mat w = zero ? Mat::Zero(out, in) : xavier_uniform(out, in, rng, 1.0);
        store.add(prefix + ".w" + std::to_string(l), std::move(w));
        store.add(prefix + ".b" + std::to_string(l), Mat::Zero(out, 1));
    }
}

void init_lstm(ParameterStore& store, const std::string& prefix, const LstmSpec& spec, Rng& rng) {
    spec.validate();
    const int rows = 4 * spec.hidden;
    const int cols = spec.input + spec.hidden;
    store.add(prefix + ".w", xavier_uniform(rows, cols, rng, 1.0));
    Mat b = Mat::Zero(rows, 1);
    b.middleRows(spec.hidden, spec.hidden).setOnes();  // forget gate
    store.add(prefix + ".b", std::move(b));
}

void init_linear(ParameterStore& store,
                 const std::string& prefix,
                 int in,
                 int out,
                 Rng& rng,
                 double weight_scale) {
    if (in < 1 || out < 1) throw ValidationError("linear sizes must be >= 1");
    store.add(prefix + ".w", xavier_uniform(out, in, rng, weight_scale));
    store.add(prefix + ".b", Mat::Zero(out, 1));
}

int mlp_apply(Tape& tape, BoundParams& params, const std::string& prefix, const MlpSpec& spec, int x) {
    const auto dims = spec.layer_dims();
    if (tape.value(x).rows() != spec.input) throw ValidationError("mlp_apply: input size mismatch");
    int cur = x;
    for (std::size_t l = 0; l < dims.size(); ++l) {
        const std::string ls = std::to_string(l);
        cur = tape.affine(params[prefix + ".w" + ls], cur, params[prefix + ".b" + ls]);
        if (l + 1 != dims.size()) cur = tape.tanh_(cur);
    }
    return cur;
}

int linear_apply(Tape& tape, BoundParams& params, const std::string& prefix, int x) {
    return tape.affine(params[prefix + ".w"], x, params[prefix + ".b"]);
}

std::pair<int, int> lstm_step(Tape& tape,
                              BoundParams& params,
                              const std::string& prefix,
                              const LstmSpec& spec,
                              int x,
                              int h,
                              int c) {
    if (tape.value(x).rows() != spec.input) throw ValidationError("lstm_step: input size mismatch");
    if (tape.value(h).rows() != spec.hidden || tape.value(c).rows() != spec.hidden) {
        throw ValidationError("lstm_step: state size mismatch");
    }
    const int H = spec.hidden;
    const int xh = tape.vcat(x, h);
    const int pre = tape.affine(params[prefix + ".w"], xh, params[prefix + ".b"]);
    const int gi = tape.sigmoid_(tape.rows(pre, 0, H));
    const int gf = tape.sigmoid_(tape.rows(pre, H, H));
    const int go = tape.sigmoid_(tape.rows(pre, 2 * H, H));
    const int gg = tape.tanh_(tape.rows(pre, 3 * H, H));
    const int c_next = tape.add(tape.mul(gf, c), tape.mul(gi, gg));
    const int h_next = tape.mul(go, tape.tanh_(c_next));
    return {h_next, c_next};
}

Mat mlp_eval(const ParameterStore& store, const std::string& prefix, const MlpSpec& spec, Mat x) {
    const auto dims = spec.layer_dims();
    if (x.rows() != spec.input) throw ValidationError("mlp_eval: input size mismatch");
    for (std::size_t l = 0; l < dims.size(); ++l) {
        const std::string ls = std::to_string(l);
        const Mat& w = store.at(prefix + ".w" + ls);
        const Mat& b = store.at(prefix + ".b" + ls);
        Mat next = w * x;
        next.colwise() += b.col(0);
        if (l + 1 != dims.size()) next = next.array().tanh();
        x = std::move(next);
    }
    return x;
}

Mat linear_eval(const ParameterStore& store, const std::string& prefix, const Mat& x) {
    Mat out = store.at(prefix + ".w") * x;
    out.colwise() += store.at(prefix + ".b").col(0);
    return out;
}

void lstm_step_eval(const ParameterStore& store,
                    const std::string& prefix,
                    const LstmSpec& spec,
                    const Mat& x,
                    Mat& h,
                    Mat& c) {
    const int H = spec.hidden;
    Mat xh(x.rows() + h.rows(), x.cols());
    xh.topRows(x.rows()) = x;
    xh.bottomRows(h.rows()) = h;
    Mat pre = store.at(prefix + ".w") * xh;
    pre.colwise() += store.at(prefix + ".b").col(0);
    auto sig = [](const Mat& m) -> Mat { return (0.5 * (0.5 * m.array()).tanh() + 0.5).matrix(); };
    const Mat gi = sig(pre.topRows(H));
    const Mat gf = sig(pre.middleRows(H, H));
    const Mat go = sig(pre.middleRows(2 * H, H));
    const Mat gg = pre.middleRows(3 * H, H).array().tanh().matrix();
    c = (gf.array() * c.array() + gi.array() * gg.array()).matrix();
    h = (go.array() * c.array().tanh()).matrix();
}

int mlp_apply_with_jvp(Tape& tape,
                       BoundParams& params,
                       const std::string& prefix,
                       const MlpSpec& spec,
                       int x,
                       const Mat& input_tangent,
                       int* jvp_out) {
    const auto dims = spec.layer_dims();
    if (tape.value(x).rows() != spec.input) {
        throw ValidationError("mlp_apply_with_jvp: input size mismatch");
    }
    if (input_tangent.rows() != spec.input || input_tangent.cols() != 1) {
        throw ValidationError("mlp_apply_with_jvp: tangent must be one input column");
    }
    const int ncols = static_cast<int>(tape.value(x).cols());
    int cur = x;
    int tan = tape.bcast_col(tape.constant(input_tangent), ncols);
    for (std::size_t l = 0; l < dims.size(); ++l) {
        const std::string ls = std::to_string(l);
        const int w = params[prefix + ".w" + ls];
        cur = tape.affine(w, cur, params[prefix + ".b" + ls]);
        tan = tape.matmul(w, tan);
        if (l + 1 != dims.size()) {
            cur = tape.tanh_(cur);
            tan = tape.tanh_jvp(cur, tan);
        }
    }
    *jvp_out = tan;
    return cur;
}

void mlp_eval_with_jvp(const ParameterStore& store,
                       const std::string& prefix,
                       const MlpSpec& spec,
                       const Mat& x,
                       const Mat& input_tangent,
                       Mat& out,
                       Mat& jvp) {
    const auto dims = spec.layer_dims();
    if (x.rows() != spec.input) throw ValidationError("mlp_eval_with_jvp: input size mismatch");
    Mat cur = x;
    Mat tan = input_tangent.col(0).replicate(1, x.cols());
    for (std::size_t l = 0; l < dims.size(); ++l) {
        const std::string ls = std::to_string(l);
        const Mat& w = store.at(prefix + ".w" + ls);
        const Mat& b = store.at(prefix + ".b" + ls);
        Mat pre = w * cur;
        pre.colwise() += b.col(0);
        Mat tpre = w * tan;
        if (l + 1 != dims.size()) {
            cur = pre.array().tanh();
            tan = (tpre.array() * (1.0 - cur.array().square())).matrix();
        } else {
            cur = std::move(pre);
            tan = std::move(tpre);
        }
    }
    out = std::move(cur);
    jvp = std::move(tan);
}

double gaussian_logpdf(double x, double mean, double std) {
    const double z = (x - mean) / std;
    return -0.5 * std::log(2.0 * M_PI) - std::log(std) - 0.5 * z * z;
}

double softplus(double x) { return std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0); }

json store_to_json(const ParameterStore& store, bool with_optimizer_state) {
    json params = json::object();
    auto mat_to_json = [](const Mat& m) {
        std::vector<double> data;
        data.reserve(static_cast<std::size_t>(m.size()));
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
        }
        return json{{"shape", {m.rows(), m.cols()}}, {"data", data}};
    };
    for (const auto& [name, e] : store.entries()) {
        json p = mat_to_json(e.value);
        if (with_optimizer_state) {
            p["adam_m"] = mat_to_json(e.m);
            p["adam_v"] = mat_to_json(e.v);
            p["adam_step"] = e.step;
        }
        params[name] = std::move(p);
    }
    return json{{"version", kVersion}, {"params", std::move(params)}};
}

ParameterStore store_from_json(const json& j) {
    if (!j.contains("version")) throw DataError("parameter blob lacks a version field");
    auto mat_from_json = [](const json& p, const char* key) {
        const auto shape = p.at("shape").get<std::vector<Eigen::Index>>();
        const auto data = p.at(key).get<std::vector<double>>();
        if (shape.size() != 2 ||
            static_cast<Eigen::Index>(data.size()) != shape[0] * shape[1]) {
            throw DataError("parameter blob has inconsistent shape/data");
        }
        Mat m(shape[0], shape[1]);
        std::size_t k = 0;
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = data[k++];
        }
        return m;
    };
    ParameterStore store;
    for (const auto& [name, p] : j.at("params").items()) {
        store.add(name, mat_from_json(p, "data"));
        if (p.contains("adam_m")) {
            auto& e = store.entry(name);
            e.m = mat_from_json(p.at("adam_m"), "data");
            e.v = mat_from_json(p.at("adam_v"), "data");
            e.step = p.at("adam_step").get<long>();
        }
    }
    return store;
}

}  // namespace ppflow

#include "ppflow/tape.hpp"

#include <cmath>

namespace ppflow {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw ValidationError(what);
}

}  // namespace

int Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

void Tape::check(int id) const {
    require(id >= 0 && id < static_cast<int>(nodes_.size()), "tape: node id out of range");
}

double Tape::scalar(int id) const {
    check(id);
    const Mat& v = nodes_[static_cast<std::size_t>(id)].value;
    require(v.size() == 1, "tape: scalar() on a non-scalar node");
    return v(0, 0);
}

int Tape::constant(Mat v) {
    Node n;
    n.kind = OpKind::Constant;
    n.value = std::move(v);
    return push(std::move(n));
}

int Tape::param(const Mat& v) {
    Node n;
    n.kind = OpKind::Param;
    n.value = v;
    n.needs_grad = true;
    return push(std::move(n));
}

#define PPFLOW_BINARY_PROLOGUE(x, y)                          \
    check(x);                                                 \
    check(y);                                                 \
    const Mat& vx = nodes_[static_cast<std::size_t>(x)].value; \
    const Mat& vy = nodes_[static_cast<std::size_t>(y)].value; \
    Node n;                                                   \
    n.in0 = x;                                                \
    n.in1 = y;                                                \
    n.needs_grad = nodes_[static_cast<std::size_t>(x)].needs_grad || \
                   nodes_[static_cast<std::size_t>(y)].needs_grad;

int Tape::add(int x, int y) {
    PPFLOW_BINARY_PROLOGUE(x, y)
    require(vx.rows() == vy.rows() && vx.cols() == vy.cols(), "add: shape mismatch");
    n.kind = OpKind::Add;
    n.value = vx + vy;
    return push(std::move(n));
}

int Tape::sub(int x, int y) {
    PPFLOW_BINARY_PROLOGUE(x, y)
    require(vx.rows() == vy.rows() && vx.cols() == vy.cols(), "sub: shape mismatch");
    n.kind = OpKind::Sub;
    n.value = vx - vy;
    return push(std::move(n));
}

int Tape::mul(int x, int y) {
    PPFLOW_BINARY_PROLOGUE(x, y)
    require(vx.rows() == vy.rows() && vx.cols() == vy.cols(), "mul: shape mismatch");
    n.kind = OpKind::Mul;
    n.value = vx.cwiseProduct(vy);
    return push(std::move(n));
}

int Tape::div(int x, int y) {
    PPFLOW_BINARY_PROLOGUE(x, y)
    require(vx.rows() == vy.rows() && vx.cols() == vy.cols(), "div: shape mismatch");
    n.kind = OpKind::Div;
    n.value = vx.cwiseQuotient(vy);
    return push(std::move(n));
}

int Tape::matmul(int x, int y) {
    PPFLOW_BINARY_PROLOGUE(x, y)
    require(vx.cols() == vy.rows(), "matmul: inner dimensions differ");
    n.kind = OpKind::MatMul;
    n.value.noalias() = vx * vy;
    return push(std::move(n));
}

int Tape::affine(int w, int x, int bias) {
    check(w);
    check(x);
    check(bias);
    const Mat& vw = nodes_[static_cast<std::size_t>(w)].value;
    const Mat& vx = nodes_[static_cast<std::size_t>(x)].value;
    const Mat& vb = nodes_[static_cast<std::size_t>(bias)].value;
    require(vw.cols() == vx.rows(), "affine: inner dimensions differ");
    require(vb.rows() == vw.rows() && vb.cols() == 1, "affine: bias must be a column");
    Node n;
    n.kind = OpKind::Affine;
    n.in0 = w;
    n.in1 = x;
    n.in2 = bias;
    n.needs_grad = nodes_[static_cast<std::size_t>(w)].needs_grad ||
                   nodes_[static_cast<std::size_t>(x)].needs_grad ||
                   nodes_[static_cast<std::size_t>(bias)].needs_grad;
    n.value.noalias() = vw * vx;
    n.value.colwise() += vb.col(0);
    return push(std::move(n));
}

#define PPFLOW_UNARY_PROLOGUE(x)                              \
    check(x);                                                 \
    const Mat& vx = nodes_[static_cast<std::size_t>(x)].value; \
    Node n;                                                   \
    n.in0 = x;                                                \
    n.needs_grad = nodes_[static_cast<std::size_t>(x)].needs_grad;

int Tape::tanh_(int x) {
    PPFLOW_UNARY_PROLOGUE(x)
    n.kind = OpKind::Tanh;
    n.value = vx.array().tanh();
    return push(std::move(n));
}

int Tape::sigmoid_(int x) {
    PPFLOW_UNARY_PROLOGUE(x)
    n.kind = OpKind::Sigmoid;
    n.value = 0.5 * (0.5 * vx.array()).tanh() + 0.5;
    return push(std::move(n));
}

int Tape::exp_(int x) {
    PPFLOW_UNARY_PROLOGUE(x)
    n.kind = OpKind::Exp;
    n.value = vx.array().exp();
    return push(std::move(n));
}

int Tape::log_(int x) {
    PPFLOW_UNARY_PROLOGUE(x)
    require((vx.array() > 0.0).all(), "log: non-positive operand");
    n.kind = OpKind::Log;
    n.value = vx.array().log();
    return push(std::move(n));
}

int Tape::softplus_(int x) {
    PPFLOW_UNARY_PROLOGUE(x)
    n.kind = OpKind::Softplus;
    n.value = (1.0 + (-vx.array().abs()).exp()).log() + vx.array().max(0.0);
    return push(std::move(n));
}

int Tape::square(int x) {
    PPFLOW_UNARY_PROLOGUE(x)
    n.kind = OpKind::Square;
    n.value = vx.array().square();
    return push(std::move(n));
}

int Tape::tanh_jvp(int a, int u) {
    PPFLOW_BINARY_PROLOGUE(a, u)
    require(vx.rows() == vy.rows() && vx.cols() == vy.cols(), "tanh_jvp: shape mismatch");
    n.kind = OpKind::TanhJvp;
    n.value = vy.array() * (1.0 - vx.array().square());
    return push(std::move(n));
}

int Tape::scale(int x, double c) {
    PPFLOW_UNARY_PROLOGUE(x)
    n.kind = OpKind::Scale;
    n.a = c;
    n.value = c * vx;
    return push(std::move(n));
}

int Tape::add_scalar(int x, double c) {
    PPFLOW_UNARY_PROLOGUE(x)
    n.kind = OpKind::AddScalar;
    n.a = c;
    n.value = vx.array() + c;
    return push(std::move(n));
}

int Tape::clamp(int x, double lo, double hi) {
    PPFLOW_UNARY_PROLOGUE(x)
    require(lo < hi, "clamp: lo must be < hi");
    n.kind = OpKind::Clamp;
    n.a = lo;
    n.b = hi;
    n.value = vx.array().max(lo).min(hi);
    return push(std::move(n));
}

int Tape::vcat(int top, int bottom) {
    PPFLOW_BINARY_PROLOGUE(top, bottom)
    require(vx.cols() == vy.cols(), "vcat: column counts differ");
    n.kind = OpKind::VCat;
    n.value.resize(vx.rows() + vy.rows(), vx.cols());
    n.value.topRows(vx.rows()) = vx;
    n.value.bottomRows(vy.rows()) = vy;
    return push(std::move(n));
}

int Tape::hcat(const std::vector<int>& parts) {
    require(!parts.empty(), "hcat: empty input list");
    Eigen::Index rows = -1, cols = 0;
    bool needs = false;
    for (int p : parts) {
        check(p);
        const Mat& v = nodes_[static_cast<std::size_t>(p)].value;
        if (rows < 0) rows = v.rows();
        require(v.rows() == rows, "hcat: row counts differ");
        cols += v.cols();
        needs = needs || nodes_[static_cast<std::size_t>(p)].needs_grad;
    }
    Node n;
    n.kind = OpKind::HCat;
    n.ins = parts;
    n.needs_grad = needs;
    n.value.resize(rows, cols);
    Eigen::Index at = 0;
    for (int p : parts) {
        const Mat& v = nodes_[static_cast<std::size_t>(p)].value;
        n.value.middleCols(at, v.cols()) = v;
        at += v.cols();
    }
    return push(std::move(n));
}

int Tape::rows(int x, int r0, int count) {
    PPFLOW_UNARY_PROLOGUE(x)
    require(r0 >= 0 && count > 0 && r0 + count <= vx.rows(), "rows: range out of bounds");
    n.kind = OpKind::Rows;
    n.i0 = r0;
    n.i1 = count;
    n.value = vx.middleRows(r0, count);
    return push(std::move(n));
}

int Tape::bcast_col(int x, int ncols) {
    PPFLOW_UNARY_PROLOGUE(x)
    require(vx.cols() == 1, "bcast_col: input must be a column");
    require(ncols >= 1, "bcast_col: ncols must be >= 1");
    n.kind = OpKind::BcastCol;
    n.value = vx.col(0).replicate(1, ncols);
    return push(std::move(n));
}

int Tape::sum(int x) {
    PPFLOW_UNARY_PROLOGUE(x)
    n.kind = OpKind::Sum;
    n.value = Mat::Constant(1, 1, vx.sum());
    return push(std::move(n));
}

int Tape::mean(int x) {
    PPFLOW_UNARY_PROLOGUE(x)
    require(vx.size() > 0, "mean: empty operand");
    n.kind = OpKind::Mean;
    n.value = Mat::Constant(1, 1, vx.mean());
    return push(std::move(n));
}

int Tape::colsum(int x) {
    PPFLOW_UNARY_PROLOGUE(x)
    n.kind = OpKind::ColSum;
    n.value = vx.colwise().sum();
    return push(std::move(n));
}

int Tape::logsumexp(int x) {
    PPFLOW_UNARY_PROLOGUE(x)
    require(vx.size() > 0, "logsumexp: empty operand");
    n.kind = OpKind::LogSumExp;
    const double m = vx.maxCoeff();
    n.value = Mat::Constant(1, 1, m + std::log((vx.array() - m).exp().sum()));
    return push(std::move(n));
}

int Tape::log_softmax(int x) {
    PPFLOW_UNARY_PROLOGUE(x)
    n.kind = OpKind::LogSoftmax;
    n.value.resizeLike(vx);
    for (Eigen::Index j = 0; j < vx.cols(); ++j) {
        const double m = vx.col(j).maxCoeff();
        const double lse = m + std::log((vx.col(j).array() - m).exp().sum());
        n.value.col(j) = vx.col(j).array() - lse;
    }
    return push(std::move(n));
}

int Tape::gaussian_log_pdf(int x, int mu, int sigma) {
    check(x);
    check(mu);
    check(sigma);
    const Mat& vx = nodes_[static_cast<std::size_t>(x)].value;
    const Mat& vm = nodes_[static_cast<std::size_t>(mu)].value;
    const Mat& vs = nodes_[static_cast<std::size_t>(sigma)].value;
    require(vx.rows() == vm.rows() && vx.cols() == vm.cols() && vx.rows() == vs.rows() &&
                vx.cols() == vs.cols(),
            "gaussian_log_pdf: shape mismatch");
    require((vs.array() > 0.0).all(), "gaussian_log_pdf: sigma must be > 0");
    Node n;
    n.kind = OpKind::GaussianLogPdf;
    n.in0 = x;
    n.in1 = mu;
    n.in2 = sigma;
    n.needs_grad = nodes_[static_cast<std::size_t>(x)].needs_grad ||
                   nodes_[static_cast<std::size_t>(mu)].needs_grad ||
                   nodes_[static_cast<std::size_t>(sigma)].needs_grad;
    const auto z = (vx.array() - vm.array()) / vs.array();
    n.value = -0.5 * std::log(2.0 * M_PI) - vs.array().log() - 0.5 * z.square();
    return push(std::move(n));
}

int Tape::pick_rows(int x, std::vector<int> row_per_col) {
    PPFLOW_UNARY_PROLOGUE(x)
    require(static_cast<Eigen::Index>(row_per_col.size()) == vx.cols(),
            "pick_rows: one row index per column required");
    n.kind = OpKind::PickRows;
    n.idx = std::move(row_per_col);
    n.value.resize(1, vx.cols());
    for (Eigen::Index j = 0; j < vx.cols(); ++j) {
        const int r = n.idx[static_cast<std::size_t>(j)];
        require(r >= 0 && r < vx.rows(), "pick_rows: row index out of range");
        n.value(0, j) = vx(r, j);
    }
    return push(std::move(n));
}

void Tape::backward(int seed) {
    check(seed);
    require(!swept_, "tape: backward may only run once");
    swept_ = true;
    Node& s = nodes_[static_cast<std::size_t>(seed)];
    require(s.value.size() == 1, "backward: seed must be scalar");
    if (!s.needs_grad) return;  // nothing trainable below the seed
    s.grad = Mat::Constant(1, 1, 1.0);

    auto g = [&](int id) -> Mat& {
        Node& node = nodes_[static_cast<std::size_t>(id)];
        if (node.grad.size() == 0) node.grad = Mat::Zero(node.value.rows(), node.value.cols());
        return node.grad;
    };
    auto wants = [&](int id) { return nodes_[static_cast<std::size_t>(id)].needs_grad; };

    for (int i = seed; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (!n.needs_grad || n.grad.size() == 0) continue;
        const Mat& go = n.grad;
        switch (n.kind) {
            case OpKind::Constant:
            case OpKind::Param:
                break;
            case OpKind::Add:
                if (wants(n.in0)) g(n.in0) += go;
                if (wants(n.in1)) g(n.in1) += go;
                break;
            case OpKind::Sub:
                if (wants(n.in0)) g(n.in0) += go;
                if (wants(n.in1)) g(n.in1) -= go;
                break;
            case OpKind::Mul:
                if (wants(n.in0)) g(n.in0).array() += go.array() * value(n.in1).array();
                if (wants(n.in1)) g(n.in1).array() += go.array() * value(n.in0).array();
                break;
            case OpKind::Div:
                if (wants(n.in0)) g(n.in0).array() += go.array() / value(n.in1).array();
                if (wants(n.in1))
                    g(n.in1).array() -=
                        go.array() * n.value.array() / value(n.in1).array();
                break;
            case OpKind::MatMul:
                if (wants(n.in0)) g(n.in0).noalias() += go * value(n.in1).transpose();
                if (wants(n.in1)) g(n.in1).noalias() += value(n.in0).transpose() * go;
                break;
            case OpKind::Affine:
                if (wants(n.in0)) g(n.in0).noalias() += go * value(n.in1).transpose();
                if (wants(n.in1)) g(n.in1).noalias() += value(n.in0).transpose() * go;
                if (wants(n.in2)) g(n.in2) += go.rowwise().sum();
                break;
            case OpKind::Tanh:
                g(n.in0).array() += go.array() * (1.0 - n.value.array().square());
                break;
            case OpKind::Sigmoid:
                g(n.in0).array() += go.array() * n.value.array() * (1.0 - n.value.array());
                break;
            case OpKind::Exp:
                g(n.in0).array() += go.array() * n.value.array();
                break;
            case OpKind::Log:
                g(n.in0).array() += go.array() / value(n.in0).array();
                break;
            case OpKind::Softplus:
                g(n.in0).array() +=
                    go.array() * (0.5 * (0.5 * value(n.in0).array()).tanh() + 0.5);
                break;
            case OpKind::Square:
                g(n.in0).array() += 2.0 * go.array() * value(n.in0).array();
                break;
            case OpKind::TanhJvp:
                if (wants(n.in0))
                    g(n.in0).array() -=
                        2.0 * go.array() * value(n.in0).array() * value(n.in1).array();
                if (wants(n.in1))
                    g(n.in1).array() += go.array() * (1.0 - value(n.in0).array().square());
                break;
            case OpKind::Scale:
                g(n.in0) += n.a * go;
                break;
            case OpKind::AddScalar:
                g(n.in0) += go;
                break;
            case OpKind::Clamp:
                g(n.in0).array() += go.array() * ((value(n.in0).array() > n.a) &&
                                                  (value(n.in0).array() < n.b))
                                                     .cast<double>();
                break;
            case OpKind::VCat: {
                const Eigen::Index top = value(n.in0).rows();
                if (wants(n.in0)) g(n.in0) += go.topRows(top);
                if (wants(n.in1)) g(n.in1) += go.bottomRows(go.rows() - top);
                break;
            }
            case OpKind::HCat: {
                Eigen::Index at = 0;
                for (int p : n.ins) {
                    const Eigen::Index w = value(p).cols();
                    if (wants(p)) g(p) += go.middleCols(at, w);
                    at += w;
                }
                break;
            }
            case OpKind::Rows:
                g(n.in0).middleRows(n.i0, n.i1) += go;
                break;
            case OpKind::BcastCol:
                g(n.in0) += go.rowwise().sum();
                break;
            case OpKind::Sum:
                g(n.in0).array() += go(0, 0);
                break;
            case OpKind::Mean:
                g(n.in0).array() += go(0, 0) / double(value(n.in0).size());
                break;
            case OpKind::ColSum:
                g(n.in0) += go.replicate(value(n.in0).rows(), 1);
                break;
            case OpKind::LogSumExp:
                g(n.in0).array() +=
                    go(0, 0) * (value(n.in0).array() - n.value(0, 0)).exp();
                break;
            case OpKind::LogSoftmax: {
                Mat& gi = g(n.in0);
                const Eigen::RowVectorXd colsums = go.colwise().sum();
                gi += go;
                for (Eigen::Index j = 0; j < gi.cols(); ++j) {
                    gi.col(j).array() -= colsums(j) * n.value.col(j).array().exp();
                }
                break;
            }
            case OpKind::GaussianLogPdf: {
                const auto xv = value(n.in0).array();
                const auto mv = value(n.in1).array();
                const auto sv = value(n.in2).array();
                if (wants(n.in0)) g(n.in0).array() -= go.array() * (xv - mv) / sv.square();
                if (wants(n.in1)) g(n.in1).array() += go.array() * (xv - mv) / sv.square();
                if (wants(n.in2))
                    g(n.in2).array() +=
                        go.array() * ((xv - mv).square() / sv.cube() - 1.0 / sv);
                break;
            }
            case OpKind::PickRows: {
                Mat& gi = g(n.in0);
                for (Eigen::Index j = 0; j < go.cols(); ++j) {
                    gi(n.idx[static_cast<std::size_t>(j)], j) += go(0, j);
                }
                break;
            }
        }
        if (n.kind != OpKind::Param) {
            // Consumers of this node were already processed; release buffers to
            // keep the backward peak near the forward footprint.
            n.grad.resize(0, 0);
            n.value.resize(0, 0);
        }
    }
}

Mat Tape::grad(int id) const {
    check(id);
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    require(n.kind == OpKind::Param, "grad: only Param nodes retain gradients");
    if (n.grad.size() == 0) return Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
}

}  // namespace ppflow

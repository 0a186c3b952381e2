#pragma once

#include "ppflow/common.hpp"

#include <vector>

namespace ppflow {

enum class OpKind : std::uint8_t {
    Constant,
    Param,
    Add,
    Sub,
    Mul,
    Div,
    MatMul,
    Affine,  // W @ X + b (b broadcast across columns)
    Tanh,
    Sigmoid,
    Exp,
    Log,
    Softplus,
    Square,
    TanhJvp,  // u * (1 - a^2), tangent propagation through a tanh with output a
    Scale,
    AddScalar,
    Clamp,
    VCat,
    HCat,
    Rows,
    BcastCol,
    Sum,
    Mean,
    ColSum,
    LogSumExp,
    LogSoftmax,
    GaussianLogPdf,
    PickRows,
};

// Reverse-mode tape with matrix-valued nodes. Values are computed eagerly as
// ops are recorded (define-by-run); inputs always reference earlier nodes, so
// a single reverse sweep visits the graph in topological order.
class Tape {
public:
    struct Node {
        Mat value;
        Mat grad;  // allocated lazily during backward
        OpKind kind = OpKind::Constant;
        bool needs_grad = false;
        int in0 = -1, in1 = -1, in2 = -1;
        double a = 0.0, b = 0.0;  // op-specific scalars
        int i0 = 0, i1 = 0;       // op-specific row range
        std::vector<int> ins;     // HCat inputs
        std::vector<int> idx;     // PickRows per-column row indices
    };

    Tape() { nodes_.reserve(4096); }

    int constant(Mat v);
    int constant_scalar(double v) { return constant(Mat::Constant(1, 1, v)); }
    int param(const Mat& v);

    int add(int x, int y);
    int sub(int x, int y);
    int mul(int x, int y);
    int div(int x, int y);
    int matmul(int x, int y);
    int affine(int w, int x, int bias);
    int tanh_(int x);
    int sigmoid_(int x);
    int exp_(int x);
    int log_(int x);
    int softplus_(int x);
    int square(int x);
    int tanh_jvp(int a, int u);
    int scale(int x, double c);
    int add_scalar(int x, double c);
    int clamp(int x, double lo, double hi);
    int vcat(int top, int bottom);
    int hcat(const std::vector<int>& parts);
    int rows(int x, int r0, int count);
    int bcast_col(int x, int ncols);
    int sum(int x);
    int mean(int x);
    int colsum(int x);
    int logsumexp(int x);
    int log_softmax(int x);
    int gaussian_log_pdf(int x, int mu, int sigma);
    int pick_rows(int x, std::vector<int> row_per_col);

    const Mat& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    double scalar(int id) const;
    bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }
    std::size_t size() const { return nodes_.size(); }

    // Reverse sweep from a scalar seed. Frees intermediate values and gradient
    // buffers as they are consumed; gradients of Param leaves are retained and
    // readable through `grad`. A second backward requires a fresh tape.
    void backward(int seed);

    // Gradient of a Param node after backward; zero matrix if it was unused.
    Mat grad(int id) const;

private:
    int push(Node n);
    void check(int id) const;
    std::vector<Node> nodes_;
    bool swept_ = false;
};

}  // namespace ppflow

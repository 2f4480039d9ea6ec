#pragma once

#include <cstdint>
#include <vector>

#include "scwave/common.hpp"

namespace scwave {

using Vec = std::vector<double>;

// Reverse-mode gradient tape over real vectors. Nodes are buffer-level
// primitives (elementwise arithmetic, reductions, gather/concat, convolution,
// resampling, dense layers); complex signals are carried as (re, im) pairs of
// vars by the callers. First-order only. Single-threaded per tape.
//
// Binary elementwise ops broadcast a length-1 operand against any length.
// atan2/sqrt gradients at their singular points are taken as zero and counted
// in origin_warnings().
class Tape {
public:
    struct Var {
        int id = -1;
        bool valid() const { return id >= 0; }
    };

    Var input(Vec v);
    Var constant(const Vec& v) { return input(v); }
    Var scalar(double x) { return input(Vec{x}); }

    const Vec& val(Var v) const;
    const Vec& grad(Var v) const;
    size_t len(Var v) const { return val(v).size(); }

    // elementwise
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var div(Var a, Var b);
    Var neg(Var a);
    Var scale(Var a, double c);   // c * a
    Var offset(Var a, double c);  // a + c
    Var vexp(Var a);
    Var vlog(Var a);
    Var vsqrt(Var a);
    Var vsquare(Var a);
    Var vabs(Var a);
    Var vsin(Var a);
    Var vcos(Var a);
    Var sigmoid(Var a);
    Var relu(Var a);  // max(x, 0)
    Var softplus(Var a);
    Var clamp(Var a, double lo, double hi);
    Var vatan2(Var y, Var x);

    // reductions / indexing
    Var sum(Var a);
    Var mean(Var a);
    Var lse_over(const std::vector<Var>& xs);  // pointwise log-sum-exp across list
    Var gather(Var a, std::vector<int> idx);
    Var concat(const std::vector<Var>& xs);

    // signal ops
    Var conv_full(Var x, Var h);
    Var upsample(Var x, int m);
    Var downsample(Var x, int m, int offset, int out_len);

    // dense: x is rows*nin row-major, w is nout*nin row-major, b has nout.
    Var linear(Var x, Var w, Var b, int rows, int nin, int nout);

    // Accumulates d(loss)/d(node) into every node's grad. loss must be scalar.
    void backward(Var loss);

    void clear();
    size_t size() const { return nodes_.size(); }
    uint64_t origin_warnings() const { return origin_warnings_; }

private:
    enum class Op : uint8_t {
        Input, Add, Sub, Mul, Div, Neg, Scale, Offset, Exp, Log, Sqrt, Square,
        Abs, Sin, Cos, Sigmoid, Relu, Softplus, Clamp, Atan2, Sum, Mean, Lse,
        Gather, Concat, ConvFull, Upsample, Downsample, Linear,
    };

    struct Node {
        Op op;
        std::vector<int> ins;
        Vec val;
        Vec grad;
        std::vector<int> idx;  // gather map / integer shape params
        double a = 0.0, b = 0.0;
    };

    Var push(Node n);
    Node& at(Var v);
    const Node& at(Var v) const;
    Var binary(Op op, Var a, Var b);
    Var unary(Op op, Var a, double pa = 0.0, double pb = 0.0);
    void backprop_node(int id);

    std::vector<Node> nodes_;
    uint64_t origin_warnings_ = 0;
};

}  // namespace scwave

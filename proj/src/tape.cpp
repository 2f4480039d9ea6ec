#include "scwave/tape.hpp"

#include <algorithm>
#include <cmath>

namespace scwave {

Tape::Var Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Tape::Node& Tape::at(Var v) {
    require(v.valid() && v.id < static_cast<int>(nodes_.size()), "tape: invalid var");
    return nodes_[static_cast<size_t>(v.id)];
}

const Tape::Node& Tape::at(Var v) const {
    require(v.valid() && v.id < static_cast<int>(nodes_.size()), "tape: invalid var");
    return nodes_[static_cast<size_t>(v.id)];
}

Tape::Var Tape::input(Vec v) {
    Node n;
    n.op = Op::Input;
    n.val = std::move(v);
    return push(std::move(n));
}

const Vec& Tape::val(Var v) const { return at(v).val; }
const Vec& Tape::grad(Var v) const { return at(v).grad; }

void Tape::clear() {
    nodes_.clear();
    origin_warnings_ = 0;
}

namespace {
inline size_t bcast_len(size_t na, size_t nb, const char* op) {
    if (na == nb) return na;
    if (na == 1) return nb;
    if (nb == 1) return na;
    throw std::invalid_argument(std::string("tape: length mismatch in ") + op);
}
}  // namespace

Tape::Var Tape::binary(Op op, Var a, Var b) {
    const Vec& va = at(a).val;
    const Vec& vb = at(b).val;
    const size_t n = bcast_len(va.size(), vb.size(), "binary op");
    Node node;
    node.op = op;
    node.ins = {a.id, b.id};
    node.val.resize(n);
    const size_t sa = va.size() == 1 ? 0 : 1;
    const size_t sb = vb.size() == 1 ? 0 : 1;
    for (size_t i = 0; i < n; ++i) {
        const double x = va[i * sa];
        const double y = vb[i * sb];
        double r = 0.0;
        switch (op) {
            case Op::Add: r = x + y; break;
            case Op::Sub: r = x - y; break;
            case Op::Mul: r = x * y; break;
            case Op::Div: r = x / y; break;
            case Op::Atan2: r = std::atan2(x, y); break;
            default: throw std::logic_error("tape: not a binary op");
        }
        node.val[i] = r;
    }
    return push(std::move(node));
}

Tape::Var Tape::add(Var a, Var b) { return binary(Op::Add, a, b); }
Tape::Var Tape::sub(Var a, Var b) { return binary(Op::Sub, a, b); }
Tape::Var Tape::mul(Var a, Var b) { return binary(Op::Mul, a, b); }
Tape::Var Tape::div(Var a, Var b) { return binary(Op::Div, a, b); }
Tape::Var Tape::vatan2(Var y, Var x) { return binary(Op::Atan2, y, x); }

Tape::Var Tape::unary(Op op, Var a, double pa, double pb) {
    const Vec& va = at(a).val;
    Node node;
    node.op = op;
    node.ins = {a.id};
    node.a = pa;
    node.b = pb;
    node.val.resize(va.size());
    for (size_t i = 0; i < va.size(); ++i) {
        const double x = va[i];
        double r = 0.0;
        switch (op) {
            case Op::Neg: r = -x; break;
            case Op::Scale: r = pa * x; break;
            case Op::Offset: r = x + pa; break;
            case Op::Exp: r = std::exp(x); break;
            case Op::Log: r = std::log(x); break;
            case Op::Sqrt: r = std::sqrt(x); break;
            case Op::Square: r = x * x; break;
            case Op::Abs: r = std::fabs(x); break;
            case Op::Sin: r = std::sin(x); break;
            case Op::Cos: r = std::cos(x); break;
            case Op::Sigmoid: r = 1.0 / (1.0 + std::exp(-x)); break;
            case Op::Relu: r = x > 0.0 ? x : 0.0; break;
            case Op::Softplus: r = std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); break;
            case Op::Clamp: r = std::min(std::max(x, pa), pb); break;
            default: throw std::logic_error("tape: not a unary op");
        }
        node.val[i] = r;
    }
    return push(std::move(node));
}

Tape::Var Tape::neg(Var a) { return unary(Op::Neg, a); }
Tape::Var Tape::scale(Var a, double c) { return unary(Op::Scale, a, c); }
Tape::Var Tape::offset(Var a, double c) { return unary(Op::Offset, a, c); }
Tape::Var Tape::vexp(Var a) { return unary(Op::Exp, a); }
Tape::Var Tape::vlog(Var a) { return unary(Op::Log, a); }
Tape::Var Tape::vsqrt(Var a) { return unary(Op::Sqrt, a); }
Tape::Var Tape::vsquare(Var a) { return unary(Op::Square, a); }
Tape::Var Tape::vabs(Var a) { return unary(Op::Abs, a); }
Tape::Var Tape::vsin(Var a) { return unary(Op::Sin, a); }
Tape::Var Tape::vcos(Var a) { return unary(Op::Cos, a); }
Tape::Var Tape::sigmoid(Var a) { return unary(Op::Sigmoid, a); }
Tape::Var Tape::relu(Var a) { return unary(Op::Relu, a); }
Tape::Var Tape::softplus(Var a) { return unary(Op::Softplus, a); }
Tape::Var Tape::clamp(Var a, double lo, double hi) { return unary(Op::Clamp, a, lo, hi); }

Tape::Var Tape::sum(Var a) {
    const Vec& va = at(a).val;
    double s = 0.0;
    for (double x : va) s += x;
    Node n;
    n.op = Op::Sum;
    n.ins = {a.id};
    n.val = {s};
    return push(std::move(n));
}

Tape::Var Tape::mean(Var a) {
    const Vec& va = at(a).val;
    require(!va.empty(), "tape: mean of empty");
    double s = 0.0;
    for (double x : va) s += x;
    Node n;
    n.op = Op::Mean;
    n.ins = {a.id};
    n.val = {s / static_cast<double>(va.size())};
    return push(std::move(n));
}

Tape::Var Tape::lse_over(const std::vector<Var>& xs) {
    require(!xs.empty(), "tape: lse over empty list");
    const size_t n = at(xs[0]).val.size();
    Node node;
    node.op = Op::Lse;
    node.val.resize(n);
    for (Var v : xs) {
        require(at(v).val.size() == n, "tape: lse length mismatch");
        node.ins.push_back(v.id);
    }
    for (size_t i = 0; i < n; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (Var v : xs) mx = std::max(mx, at(v).val[i]);
        double acc = 0.0;
        for (Var v : xs) acc += std::exp(at(v).val[i] - mx);
        node.val[i] = mx + std::log(acc);
    }
    return push(std::move(node));
}

Tape::Var Tape::gather(Var a, std::vector<int> idx) {
    const Vec& va = at(a).val;
    Node node;
    node.op = Op::Gather;
    node.ins = {a.id};
    node.val.resize(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) {
        require(idx[i] >= 0 && static_cast<size_t>(idx[i]) < va.size(), "tape: gather index out of range");
        node.val[i] = va[static_cast<size_t>(idx[i])];
    }
    node.idx = std::move(idx);
    return push(std::move(node));
}

Tape::Var Tape::concat(const std::vector<Var>& xs) {
    require(!xs.empty(), "tape: concat of nothing");
    Node node;
    node.op = Op::Concat;
    for (Var v : xs) {
        node.ins.push_back(v.id);
        const Vec& s = at(v).val;
        node.val.insert(node.val.end(), s.begin(), s.end());
    }
    return push(std::move(node));
}

Tape::Var Tape::conv_full(Var x, Var h) {
    const Vec& vx = at(x).val;
    const Vec& vh = at(h).val;
    require(!vx.empty() && !vh.empty(), "tape: conv with empty operand");
    Node node;
    node.op = Op::ConvFull;
    node.ins = {x.id, h.id};
    node.val.assign(vx.size() + vh.size() - 1, 0.0);
    for (size_t i = 0; i < vx.size(); ++i) {
        const double xi = vx[i];
        for (size_t j = 0; j < vh.size(); ++j) node.val[i + j] += xi * vh[j];
    }
    return push(std::move(node));
}

Tape::Var Tape::upsample(Var x, int m) {
    require(m >= 1, "tape: upsample factor");
    const Vec& vx = at(x).val;
    Node node;
    node.op = Op::Upsample;
    node.ins = {x.id};
    node.idx = {m};
    node.val.assign(vx.size() * static_cast<size_t>(m), 0.0);
    for (size_t k = 0; k < vx.size(); ++k) node.val[k * m] = vx[k];
    return push(std::move(node));
}

Tape::Var Tape::downsample(Var x, int m, int off, int out_len) {
    const Vec& vx = at(x).val;
    require(m >= 1 && off >= 0 && out_len >= 0, "tape: downsample params");
    require(out_len == 0 ||
                static_cast<size_t>(off) + static_cast<size_t>(out_len - 1) * m < vx.size(),
            "tape: downsample out of range");
    Node node;
    node.op = Op::Downsample;
    node.ins = {x.id};
    node.idx = {m, off};
    node.val.resize(static_cast<size_t>(out_len));
    for (int k = 0; k < out_len; ++k) node.val[static_cast<size_t>(k)] = vx[off + static_cast<size_t>(k) * m];
    return push(std::move(node));
}

Tape::Var Tape::linear(Var x, Var w, Var b, int rows, int nin, int nout) {
    const Vec& vx = at(x).val;
    const Vec& vw = at(w).val;
    const Vec& vb = at(b).val;
    require(vx.size() == static_cast<size_t>(rows) * nin, "tape: linear x shape");
    require(vw.size() == static_cast<size_t>(nout) * nin, "tape: linear w shape");
    require(vb.size() == static_cast<size_t>(nout), "tape: linear b shape");
    Node node;
    node.op = Op::Linear;
    node.ins = {x.id, w.id, b.id};
    node.idx = {rows, nin, nout};
    node.val.resize(static_cast<size_t>(rows) * nout);
    for (int r = 0; r < rows; ++r) {
        for (int o = 0; o < nout; ++o) {
            double acc = vb[static_cast<size_t>(o)];
            const double* xr = vx.data() + static_cast<size_t>(r) * nin;
            const double* wo = vw.data() + static_cast<size_t>(o) * nin;
            for (int i = 0; i < nin; ++i) acc += xr[i] * wo[i];
            node.val[static_cast<size_t>(r) * nout + o] = acc;
        }
    }
    return push(std::move(node));
}

void Tape::backprop_node(int id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.op == Op::Input) return;
    const Vec& g = n.grad;

    auto gin = [&](int k) -> Vec& { return nodes_[static_cast<size_t>(n.ins[static_cast<size_t>(k)])].grad; };
    auto vin = [&](int k) -> const Vec& { return nodes_[static_cast<size_t>(n.ins[static_cast<size_t>(k)])].val; };

    switch (n.op) {
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div:
        case Op::Atan2: {
            const Vec& va = vin(0);
            const Vec& vb = vin(1);
            Vec& ga = gin(0);
            Vec& gb = gin(1);
            const size_t sa = va.size() == 1 ? 0 : 1;
            const size_t sb = vb.size() == 1 ? 0 : 1;
            for (size_t i = 0; i < g.size(); ++i) {
                const double gi = g[i];
                if (gi == 0.0) continue;
                const double x = va[i * sa];
                const double y = vb[i * sb];
                double da = 0.0, db = 0.0;
                switch (n.op) {
                    case Op::Add: da = 1.0; db = 1.0; break;
                    case Op::Sub: da = 1.0; db = -1.0; break;
                    case Op::Mul: da = y; db = x; break;
                    case Op::Div: da = 1.0 / y; db = -x / (y * y); break;
                    case Op::Atan2: {
                        const double r2 = x * x + y * y;
                        if (r2 == 0.0) {
                            ++origin_warnings_;
                            da = db = 0.0;
                        } else {
                            // out = atan2(x=ycoord, y=xcoord)
                            da = y / r2;
                            db = -x / r2;
                        }
                        break;
                    }
                    default: break;
                }
                ga[i * sa] += gi * da;
                gb[i * sb] += gi * db;
            }
            break;
        }
        case Op::Neg:
        case Op::Scale:
        case Op::Offset:
        case Op::Exp:
        case Op::Log:
        case Op::Sqrt:
        case Op::Square:
        case Op::Abs:
        case Op::Sin:
        case Op::Cos:
        case Op::Sigmoid:
        case Op::Relu:
        case Op::Softplus:
        case Op::Clamp: {
            const Vec& x = vin(0);
            Vec& gx = gin(0);
            for (size_t i = 0; i < g.size(); ++i) {
                const double gi = g[i];
                if (gi == 0.0) continue;
                double d = 0.0;
                switch (n.op) {
                    case Op::Neg: d = -1.0; break;
                    case Op::Scale: d = n.a; break;
                    case Op::Offset: d = 1.0; break;
                    case Op::Exp: d = n.val[i]; break;
                    case Op::Log: d = 1.0 / x[i]; break;
                    case Op::Sqrt:
                        if (n.val[i] == 0.0) {
                            ++origin_warnings_;
                            d = 0.0;
                        } else {
                            d = 0.5 / n.val[i];
                        }
                        break;
                    case Op::Square: d = 2.0 * x[i]; break;
                    case Op::Abs: d = x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0); break;
                    case Op::Sin: d = std::cos(x[i]); break;
                    case Op::Cos: d = -std::sin(x[i]); break;
                    case Op::Sigmoid: d = n.val[i] * (1.0 - n.val[i]); break;
                    case Op::Relu: d = x[i] > 0.0 ? 1.0 : 0.0; break;
                    case Op::Softplus: d = 1.0 / (1.0 + std::exp(-x[i])); break;
                    case Op::Clamp: d = (x[i] > n.a && x[i] < n.b) ? 1.0 : 0.0; break;
                    default: break;
                }
                gx[i] += gi * d;
            }
            break;
        }
        case Op::Sum: {
            Vec& gx = gin(0);
            const double gi = g[0];
            if (gi != 0.0)
                for (double& v : gx) v += gi;
            break;
        }
        case Op::Mean: {
            Vec& gx = gin(0);
            const double gi = g[0] / static_cast<double>(gx.size());
            if (gi != 0.0)
                for (double& v : gx) v += gi;
            break;
        }
        case Op::Lse: {
            for (size_t k = 0; k < n.ins.size(); ++k) {
                const Vec& xk = vin(static_cast<int>(k));
                Vec& gk = gin(static_cast<int>(k));
                for (size_t i = 0; i < g.size(); ++i) {
                    if (g[i] == 0.0) continue;
                    gk[i] += g[i] * std::exp(xk[i] - n.val[i]);
                }
            }
            break;
        }
        case Op::Gather: {
            Vec& gx = gin(0);
            for (size_t i = 0; i < g.size(); ++i) gx[static_cast<size_t>(n.idx[i])] += g[i];
            break;
        }
        case Op::Concat: {
            size_t pos = 0;
            for (size_t k = 0; k < n.ins.size(); ++k) {
                Vec& gk = gin(static_cast<int>(k));
                for (size_t i = 0; i < gk.size(); ++i) gk[i] += g[pos + i];
                pos += gk.size();
            }
            break;
        }
        case Op::ConvFull: {
            const Vec& x = vin(0);
            const Vec& h = vin(1);
            Vec& gx = gin(0);
            Vec& gh = gin(1);
            for (size_t i = 0; i < x.size(); ++i) {
                double acc = 0.0;
                for (size_t j = 0; j < h.size(); ++j) acc += g[i + j] * h[j];
                gx[i] += acc;
            }
            for (size_t j = 0; j < h.size(); ++j) {
                double acc = 0.0;
                for (size_t i = 0; i < x.size(); ++i) acc += g[i + j] * x[i];
                gh[j] += acc;
            }
            break;
        }
        case Op::Upsample: {
            Vec& gx = gin(0);
            const int m = n.idx[0];
            for (size_t k = 0; k < gx.size(); ++k) gx[k] += g[k * static_cast<size_t>(m)];
            break;
        }
        case Op::Downsample: {
            Vec& gx = gin(0);
            const int m = n.idx[0];
            const int off = n.idx[1];
            for (size_t k = 0; k < g.size(); ++k)
                gx[static_cast<size_t>(off) + k * static_cast<size_t>(m)] += g[k];
            break;
        }
        case Op::Linear: {
            const int rows = n.idx[0], nin = n.idx[1], nout = n.idx[2];
            const Vec& x = vin(0);
            const Vec& w = vin(1);
            Vec& gx = gin(0);
            Vec& gw = gin(1);
            Vec& gb = gin(2);
            for (int r = 0; r < rows; ++r) {
                const double* gy = g.data() + static_cast<size_t>(r) * nout;
                const double* xr = x.data() + static_cast<size_t>(r) * nin;
                double* gxr = gx.data() + static_cast<size_t>(r) * nin;
                for (int o = 0; o < nout; ++o) {
                    const double go = gy[o];
                    if (go == 0.0) continue;
                    const double* wo = w.data() + static_cast<size_t>(o) * nin;
                    double* gwo = gw.data() + static_cast<size_t>(o) * nin;
                    for (int i = 0; i < nin; ++i) {
                        gxr[i] += go * wo[i];
                        gwo[i] += go * xr[i];
                    }
                    gb[static_cast<size_t>(o)] += go;
                }
            }
            break;
        }
        case Op::Input: break;
    }
}

void Tape::backward(Var loss) {
    const Node& ln = at(loss);
    require(ln.val.size() == 1, "backward: loss must be scalar");
    for (auto& n : nodes_) n.grad.assign(n.val.size(), 0.0);
    nodes_[static_cast<size_t>(loss.id)].grad[0] = 1.0;
    for (int id = loss.id; id >= 0; --id) backprop_node(id);
}

}  // namespace scwave

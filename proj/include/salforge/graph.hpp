#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "salforge/errors.hpp"
#include "salforge/kernels.hpp"
#include "salforge/tensor.hpp"

namespace salforge::ad {

// Define-by-run reverse-mode tape. A Graph is rebuilt for every forward pass;
// ops append nodes, backward() walks them in reverse and accumulates adjoints
// into the bound leaf tensors' grad buffers. Templated on scalar so training
// runs in float and gradient checking in double.

template <typename S>
class Graph;

template <typename S>
class Value {
public:
    Value() = default;

    Graph<S>* graph() const { return graph_; }
    int id() const { return id_; }
    const Shape& shape() const;
    const std::vector<S>& data() const;
    // Scalar fetch; ContractError if the value has more than one element.
    S item() const;

private:
    friend class Graph<S>;
    Value(Graph<S>* g, int id) : graph_(g), id_(id) {}
    Graph<S>* graph_ = nullptr;
    int id_ = -1;
};

enum class OpKind : std::uint8_t {
    kLeaf,
    kConstant,
    kAffine,
    kRelu,
    kAdd,
    kSub,
    kMul,
    kSquare,
    kAbs,
    kExp,
    kScale,
    kMeanAll,
    kSumAll,
    kConcatRows,
    kSliceRows,
    kBroadcastCol,
    kReshape,
    kMaxpoolPairs,
    kGlobalMaxpool,
};

template <typename S>
class Graph {
public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    // Leaf bound to external storage; backward accumulates into t.grad when
    // t.requires_grad is set. The tensor must outlive the graph.
    Value<S> leaf(Tensor<S>& t) {
        int id = add_node(OpKind::kLeaf, t.shape);
        nodes_[id].val = t.data;
        nodes_[id].bound = &t;
        return Value<S>(this, id);
    }

    Value<S> constant(Shape shape, std::vector<S> values) {
        if (static_cast<std::int64_t>(values.size()) != numel(shape))
            throw ShapeError("constant: " + std::to_string(values.size()) +
                             " values for shape " + shape_str(shape));
        int id = add_node(OpKind::kConstant, std::move(shape));
        nodes_[id].val = std::move(values);
        return Value<S>(this, id);
    }

    Value<S> constant_scalar(S v) { return constant({1}, {v}); }

    std::size_t node_count() const { return nodes_.size(); }

    // Seeds d(loss)/d(loss) = 1 and propagates adjoints to all leaves.
    void backward(const Value<S>& loss) {
        check_mine(loss, "backward");
        const Node& ln = nodes_[loss.id()];
        if (ln.val.size() != 1)
            throw ContractError("backward: loss must be scalar, got shape " + shape_str(ln.shape));
        for (Node& n : nodes_) n.adj.assign(n.val.size(), S(0));
        nodes_[loss.id()].adj[0] = S(1);
        for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) backprop_node(i);
        for (Node& n : nodes_)
            if (n.op == OpKind::kLeaf && n.bound && n.bound->requires_grad)
                n.bound->add_grad(n.adj.data(), n.adj.size());
    }

    // ----- ops ------------------------------------------------------------

    // x: [C_in, N] columns are samples; W: [C_out, C_in]; b: [C_out].
    Value<S> affine_pointwise(const Value<S>& x, const Value<S>& W, const Value<S>& b) {
        check_mine(x, "affine_pointwise");
        check_mine(W, "affine_pointwise");
        check_mine(b, "affine_pointwise");
        const Shape& xs = shape_of(x);
        const Shape& ws = shape_of(W);
        const Shape& bs = shape_of(b);
        if (xs.size() != 2 || ws.size() != 2 || bs.size() != 1)
            throw ShapeError("affine_pointwise: need x [C_in,N], W [C_out,C_in], b [C_out]; got x " +
                             shape_str(xs) + ", W " + shape_str(ws) + ", b " + shape_str(bs));
        if (ws[1] != xs[0] || bs[0] != ws[0])
            throw ShapeError("affine_pointwise: W " + shape_str(ws) + " incompatible with x " +
                             shape_str(xs) + " / b " + shape_str(bs));
        const int cout = ws[0], cin = xs[0], n = xs[1];
        int id = add_node(OpKind::kAffine, {cout, n}, x.id(), W.id(), b.id());
        Node& nd = nodes_[id];
        nd.val.resize(static_cast<std::size_t>(cout) * n);
        const std::vector<S>& bv = nodes_[b.id()].val;
        for (int c = 0; c < cout; ++c)
            std::fill_n(nd.val.begin() + static_cast<std::size_t>(c) * n, n, bv[c]);
        detail::addmm_nn(nd.val.data(), nodes_[W.id()].val.data(), nodes_[x.id()].val.data(),
                         cout, cin, n);
        return Value<S>(this, id);
    }

    Value<S> relu(const Value<S>& x) {
        return unary(OpKind::kRelu, x, [](S v) { return v > S(0) ? v : S(0); });
    }
    Value<S> square(const Value<S>& x) {
        return unary(OpKind::kSquare, x, [](S v) { return v * v; });
    }
    Value<S> abs(const Value<S>& x) {
        return unary(OpKind::kAbs, x, [](S v) { return v < S(0) ? -v : v; });
    }
    Value<S> exp(const Value<S>& x) {
        return unary(OpKind::kExp, x, [](S v) { return std::exp(v); });
    }
    Value<S> scale(const Value<S>& x, S factor) {
        Value<S> out = unary(OpKind::kScale, x, [factor](S v) { return factor * v; });
        nodes_[out.id()].factor = factor;
        return out;
    }

    Value<S> add(const Value<S>& a, const Value<S>& b) { return binary(OpKind::kAdd, a, b); }
    Value<S> sub(const Value<S>& a, const Value<S>& b) { return binary(OpKind::kSub, a, b); }
    Value<S> mul(const Value<S>& a, const Value<S>& b) { return binary(OpKind::kMul, a, b); }

    Value<S> mean_all(const Value<S>& x) {
        check_mine(x, "mean_all");
        if (nodes_[x.id()].val.empty()) throw ContractError("mean_all: empty tensor");
        int id = add_node(OpKind::kMeanAll, {1}, x.id());
        nodes_[id].val = {reduce_sum(nodes_[x.id()].val) /
                          static_cast<S>(nodes_[x.id()].val.size())};
        return Value<S>(this, id);
    }

    Value<S> sum_all(const Value<S>& x) {
        check_mine(x, "sum_all");
        if (nodes_[x.id()].val.empty()) throw ContractError("sum_all: empty tensor");
        int id = add_node(OpKind::kSumAll, {1}, x.id());
        nodes_[id].val = {reduce_sum(nodes_[x.id()].val)};
        return Value<S>(this, id);
    }

    // Stack rows: [Ra,N] over [Rb,N] -> [Ra+Rb,N].
    Value<S> concat_rows(const Value<S>& a, const Value<S>& b) {
        check_mine(a, "concat_rows");
        check_mine(b, "concat_rows");
        const Shape& as = shape_of(a);
        const Shape& bs = shape_of(b);
        if (as.size() != 2 || bs.size() != 2 || as[1] != bs[1])
            throw ShapeError("concat_rows: need [Ra,N] and [Rb,N] with equal N; got " +
                             shape_str(as) + " and " + shape_str(bs));
        int id = add_node(OpKind::kConcatRows, {as[0] + bs[0], as[1]}, a.id(), b.id());
        Node& nd = nodes_[id];
        nd.val = nodes_[a.id()].val;
        const std::vector<S>& bv = nodes_[b.id()].val;
        nd.val.insert(nd.val.end(), bv.begin(), bv.end());
        return Value<S>(this, id);
    }

    // Rows [r0, r1) of a [C,N] tensor.
    Value<S> slice_rows(const Value<S>& x, int r0, int r1) {
        check_mine(x, "slice_rows");
        const Shape& xs = shape_of(x);
        if (xs.size() != 2)
            throw ShapeError("slice_rows: need rank-2 input, got " + shape_str(xs));
        if (r0 < 0 || r1 > xs[0] || r0 >= r1)
            throw ShapeError("slice_rows: rows [" + std::to_string(r0) + "," + std::to_string(r1) +
                             ") invalid for " + shape_str(xs));
        const int n = xs[1];
        int id = add_node(OpKind::kSliceRows, {r1 - r0, n}, x.id());
        Node& nd = nodes_[id];
        nd.i0 = r0;
        nd.i1 = r1;
        const std::vector<S>& xv = nodes_[x.id()].val;
        nd.val.assign(xv.begin() + static_cast<std::size_t>(r0) * n,
                      xv.begin() + static_cast<std::size_t>(r1) * n);
        return Value<S>(this, id);
    }

    // Replicate a [C] vector into [C,N] columns.
    Value<S> broadcast_col(const Value<S>& x, int n) {
        check_mine(x, "broadcast_col");
        const Shape& xs = shape_of(x);
        if (xs.size() != 1)
            throw ShapeError("broadcast_col: need rank-1 input, got " + shape_str(xs));
        if (n <= 0) throw ShapeError("broadcast_col: n must be positive");
        const int rows = xs[0];  // copy: add_node may reallocate nodes_ under xs
        int id = add_node(OpKind::kBroadcastCol, {rows, n}, x.id());
        Node& nd = nodes_[id];
        nd.val.resize(static_cast<std::size_t>(rows) * n);
        const std::vector<S>& xv = nodes_[x.id()].val;
        for (int c = 0; c < rows; ++c)
            std::fill_n(nd.val.begin() + static_cast<std::size_t>(c) * n, n, xv[c]);
        return Value<S>(this, id);
    }

    Value<S> reshape(const Value<S>& x, Shape shape) {
        check_mine(x, "reshape");
        if (numel(shape) != numel(shape_of(x)))
            throw ShapeError("reshape: cannot view " + shape_str(shape_of(x)) + " as " +
                             shape_str(shape));
        int id = add_node(OpKind::kReshape, std::move(shape), x.id());
        nodes_[id].val = nodes_[x.id()].val;
        return Value<S>(this, id);
    }

    // Kernel-2 stride-1 max over adjacent columns with replicate-last padding:
    // out[c,n] = max(x[c,n], x[c,n+1]), out[c,N-1] = x[c,N-1]. Ties route the
    // gradient to the lower index.
    Value<S> maxpool_pairs(const Value<S>& x) {
        check_mine(x, "maxpool_pairs");
        const Shape& xs = shape_of(x);
        if (xs.size() != 2)
            throw ShapeError("maxpool_pairs: need rank-2 input, got " + shape_str(xs));
        const int c = xs[0], n = xs[1];
        int id = add_node(OpKind::kMaxpoolPairs, {c, n}, x.id());
        Node& nd = nodes_[id];
        nd.val.resize(static_cast<std::size_t>(c) * n);
        const std::vector<S>& xv = nodes_[x.id()].val;
        for (int r = 0; r < c; ++r) {
            const S* row = xv.data() + static_cast<std::size_t>(r) * n;
            S* out = nd.val.data() + static_cast<std::size_t>(r) * n;
            for (int j = 0; j + 1 < n; ++j) out[j] = row[j + 1] > row[j] ? row[j + 1] : row[j];
            out[n - 1] = row[n - 1];
        }
        return Value<S>(this, id);
    }

    // Max over columns: [C,N] -> [C]. Ties route the gradient to the lowest
    // column index.
    Value<S> global_maxpool(const Value<S>& x) {
        check_mine(x, "global_maxpool");
        const Shape& xs = shape_of(x);
        if (xs.size() != 2)
            throw ShapeError("global_maxpool: need rank-2 input, got " + shape_str(xs));
        const int c = xs[0], n = xs[1];
        int id = add_node(OpKind::kGlobalMaxpool, {c}, x.id());
        Node& nd = nodes_[id];
        nd.val.resize(c);
        const std::vector<S>& xv = nodes_[x.id()].val;
        for (int r = 0; r < c; ++r) {
            const S* row = xv.data() + static_cast<std::size_t>(r) * n;
            S best = row[0];
            for (int j = 1; j < n; ++j)
                if (row[j] > best) best = row[j];
            nd.val[r] = best;
        }
        return Value<S>(this, id);
    }

private:
    struct Node {
        OpKind op;
        std::array<int, 3> in{-1, -1, -1};
        Shape shape;
        std::vector<S> val;
        std::vector<S> adj;
        Tensor<S>* bound = nullptr;
        int i0 = 0, i1 = 0;
        S factor = S(1);
    };

    friend class Value<S>;

    int add_node(OpKind op, Shape shape, int a = -1, int b = -1, int c = -1) {
        Node n;
        n.op = op;
        n.in = {a, b, c};
        n.shape = std::move(shape);
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    const Shape& shape_of(const Value<S>& v) const { return nodes_[v.id()].shape; }

    void check_mine(const Value<S>& v, const char* op) const {
        if (v.graph() != this || v.id() < 0 || v.id() >= static_cast<int>(nodes_.size()))
            throw ContractError(std::string(op) + ": value does not belong to this graph");
    }

    template <typename F>
    Value<S> unary(OpKind op, const Value<S>& x, F f) {
        check_mine(x, "unary op");
        int id = add_node(op, shape_of(x), x.id());
        Node& nd = nodes_[id];
        const std::vector<S>& xv = nodes_[x.id()].val;
        nd.val.resize(xv.size());
        for (std::size_t i = 0; i < xv.size(); ++i) nd.val[i] = f(xv[i]);
        return Value<S>(this, id);
    }

    Value<S> binary(OpKind op, const Value<S>& a, const Value<S>& b) {
        check_mine(a, "binary op");
        check_mine(b, "binary op");
        const Shape& as = shape_of(a);
        const Shape& bs = shape_of(b);
        if (as != bs)
            throw ShapeError("elementwise op: shapes differ, " + shape_str(as) + " vs " +
                             shape_str(bs));
        int id = add_node(op, as, a.id(), b.id());
        Node& nd = nodes_[id];
        const std::vector<S>& av = nodes_[a.id()].val;
        const std::vector<S>& bv = nodes_[b.id()].val;
        nd.val.resize(av.size());
        switch (op) {
            case OpKind::kAdd:
                for (std::size_t i = 0; i < av.size(); ++i) nd.val[i] = av[i] + bv[i];
                break;
            case OpKind::kSub:
                for (std::size_t i = 0; i < av.size(); ++i) nd.val[i] = av[i] - bv[i];
                break;
            case OpKind::kMul:
                for (std::size_t i = 0; i < av.size(); ++i) nd.val[i] = av[i] * bv[i];
                break;
            default:
                throw ContractError("binary: bad op");
        }
        return Value<S>(this, id);
    }

    static S reduce_sum(const std::vector<S>& v) {
        S s = S(0);
        for (S x : v) s += x;
        return s;
    }

    void backprop_node(int id) {
        Node& nd = nodes_[id];
        bool any = false;
        for (S a : nd.adj)
            if (a != S(0)) {
                any = true;
                break;
            }
        if (!any) return;
        switch (nd.op) {
            case OpKind::kLeaf:
            case OpKind::kConstant:
                break;
            case OpKind::kAffine: {
                Node& x = nodes_[nd.in[0]];
                Node& w = nodes_[nd.in[1]];
                Node& b = nodes_[nd.in[2]];
                const int cout = nd.shape[0], n = nd.shape[1], cin = x.shape[0];
                // dx += W^T * dout
                detail::addmm_tn(x.adj.data(), w.val.data(), nd.adj.data(), cout, cin, n);
                // dW += dout * x^T
                detail::addmm_nt(w.adj.data(), nd.adj.data(), x.val.data(), cout, n, cin);
                // db += row sums of dout
                detail::add_row_sums(b.adj.data(), nd.adj.data(), cout, n);
                break;
            }
            case OpKind::kRelu: {
                Node& x = nodes_[nd.in[0]];
                for (std::size_t i = 0; i < nd.adj.size(); ++i)
                    if (x.val[i] > S(0)) x.adj[i] += nd.adj[i];
                break;
            }
            case OpKind::kAdd: {
                Node& a = nodes_[nd.in[0]];
                Node& b = nodes_[nd.in[1]];
                for (std::size_t i = 0; i < nd.adj.size(); ++i) {
                    a.adj[i] += nd.adj[i];
                    b.adj[i] += nd.adj[i];
                }
                break;
            }
            case OpKind::kSub: {
                Node& a = nodes_[nd.in[0]];
                Node& b = nodes_[nd.in[1]];
                for (std::size_t i = 0; i < nd.adj.size(); ++i) {
                    a.adj[i] += nd.adj[i];
                    b.adj[i] -= nd.adj[i];
                }
                break;
            }
            case OpKind::kMul: {
                Node& a = nodes_[nd.in[0]];
                Node& b = nodes_[nd.in[1]];
                for (std::size_t i = 0; i < nd.adj.size(); ++i) {
                    a.adj[i] += nd.adj[i] * b.val[i];
                    b.adj[i] += nd.adj[i] * a.val[i];
                }
                break;
            }
            case OpKind::kSquare: {
                Node& x = nodes_[nd.in[0]];
                for (std::size_t i = 0; i < nd.adj.size(); ++i)
                    x.adj[i] += S(2) * x.val[i] * nd.adj[i];
                break;
            }
            case OpKind::kAbs: {
                // subgradient 0 at x == 0
                Node& x = nodes_[nd.in[0]];
                for (std::size_t i = 0; i < nd.adj.size(); ++i) {
                    if (x.val[i] > S(0)) x.adj[i] += nd.adj[i];
                    else if (x.val[i] < S(0)) x.adj[i] -= nd.adj[i];
                }
                break;
            }
            case OpKind::kExp: {
                Node& x = nodes_[nd.in[0]];
                for (std::size_t i = 0; i < nd.adj.size(); ++i)
                    x.adj[i] += nd.val[i] * nd.adj[i];
                break;
            }
            case OpKind::kScale: {
                Node& x = nodes_[nd.in[0]];
                for (std::size_t i = 0; i < nd.adj.size(); ++i)
                    x.adj[i] += nd.factor * nd.adj[i];
                break;
            }
            case OpKind::kMeanAll: {
                Node& x = nodes_[nd.in[0]];
                const S g = nd.adj[0] / static_cast<S>(x.val.size());
                for (std::size_t i = 0; i < x.adj.size(); ++i) x.adj[i] += g;
                break;
            }
            case OpKind::kSumAll: {
                Node& x = nodes_[nd.in[0]];
                const S g = nd.adj[0];
                for (std::size_t i = 0; i < x.adj.size(); ++i) x.adj[i] += g;
                break;
            }
            case OpKind::kConcatRows: {
                Node& a = nodes_[nd.in[0]];
                Node& b = nodes_[nd.in[1]];
                for (std::size_t i = 0; i < a.adj.size(); ++i) a.adj[i] += nd.adj[i];
                for (std::size_t i = 0; i < b.adj.size(); ++i)
                    b.adj[i] += nd.adj[a.adj.size() + i];
                break;
            }
            case OpKind::kSliceRows: {
                Node& x = nodes_[nd.in[0]];
                const int n = nd.shape[1];
                const std::size_t base = static_cast<std::size_t>(nd.i0) * n;
                for (std::size_t i = 0; i < nd.adj.size(); ++i) x.adj[base + i] += nd.adj[i];
                break;
            }
            case OpKind::kBroadcastCol: {
                Node& x = nodes_[nd.in[0]];
                const int c = nd.shape[0], n = nd.shape[1];
                detail::add_row_sums(x.adj.data(), nd.adj.data(), c, n);
                break;
            }
            case OpKind::kReshape: {
                Node& x = nodes_[nd.in[0]];
                for (std::size_t i = 0; i < nd.adj.size(); ++i) x.adj[i] += nd.adj[i];
                break;
            }
            case OpKind::kMaxpoolPairs: {
                Node& x = nodes_[nd.in[0]];
                const int c = nd.shape[0], n = nd.shape[1];
                for (int r = 0; r < c; ++r) {
                    const S* row = x.val.data() + static_cast<std::size_t>(r) * n;
                    S* xa = x.adj.data() + static_cast<std::size_t>(r) * n;
                    const S* oa = nd.adj.data() + static_cast<std::size_t>(r) * n;
                    for (int j = 0; j + 1 < n; ++j) xa[row[j + 1] > row[j] ? j + 1 : j] += oa[j];
                    xa[n - 1] += oa[n - 1];
                }
                break;
            }
            case OpKind::kGlobalMaxpool: {
                Node& x = nodes_[nd.in[0]];
                const int c = nd.shape[0];
                const int n = x.shape[1];
                for (int r = 0; r < c; ++r) {
                    const S* row = x.val.data() + static_cast<std::size_t>(r) * n;
                    int arg = 0;
                    S best = row[0];
                    for (int j = 1; j < n; ++j)
                        if (row[j] > best) {
                            best = row[j];
                            arg = j;
                        }
                    x.adj[static_cast<std::size_t>(r) * n + arg] += nd.adj[r];
                }
                break;
            }
        }
    }

    std::vector<Node> nodes_;
};

template <typename S>
const Shape& Value<S>::shape() const {
    return graph_->nodes_[id_].shape;
}
template <typename S>
const std::vector<S>& Value<S>::data() const {
    return graph_->nodes_[id_].val;
}
template <typename S>
S Value<S>::item() const {
    const std::vector<S>& v = data();
    if (v.size() != 1)
        throw ContractError("item(): value has " + std::to_string(v.size()) + " elements");
    return v[0];
}

}  // namespace salforge::ad

#include "qtrader/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qtrader {

double elu(double x) {
    return x >= 0.0 ? x : std::expm1(x);
}

std::vector<double> softmax(const std::vector<double>& v) {
    std::vector<double> out(v.size());
    const double m = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - m);
        sum += out[i];
    }
    for (double& x : out) x /= sum;
    return out;
}

namespace {

void check(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

void softmax_row_inplace(const double* in, double* out, int n) {
    double m = in[0];
    for (int i = 1; i < n; ++i) m = std::max(m, in[i]);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        out[i] = std::exp(in[i] - m);
        sum += out[i];
    }
    for (int i = 0; i < n; ++i) out[i] /= sum;
}

// dx_i = s_i * (g_i - sum_j g_j s_j)
void softmax_row_backward(const double* s, const double* g, double* dx, int n) {
    double dot = 0.0;
    for (int i = 0; i < n; ++i) dot += g[i] * s[i];
    for (int i = 0; i < n; ++i) dx[i] += s[i] * (g[i] - dot);
}

}  // namespace

VarId Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return static_cast<VarId>(nodes_.size() - 1);
}

Tensor& Tape::grad_of(VarId id) {
    Node& n = nodes_[id];
    if (!n.has_grad) {
        n.grad = Tensor(n.val.rows, n.val.cols);
        n.has_grad = true;
    }
    return n.grad;
}

VarId Tape::leaf(Tensor value) {
    Node n;
    n.op = Op::Leaf;
    n.val = std::move(value);
    return push(std::move(n));
}

VarId Tape::matvec(VarId w, VarId x) {
    const Tensor& W = nodes_[w].val;
    const Tensor& X = nodes_[x].val;
    check(X.cols == 1 && W.cols == X.rows, "matvec: shape mismatch");
    Node n;
    n.op = Op::MatVec;
    n.a = w;
    n.b = x;
    n.val = Tensor(W.rows, 1);
    for (int r = 0; r < W.rows; ++r) {
        double acc = 0.0;
        const double* wr = &W.v[static_cast<size_t>(r) * W.cols];
        for (int k = 0; k < W.cols; ++k) acc += wr[k] * X.v[k];
        n.val[r] = acc;
    }
    return push(std::move(n));
}

VarId Tape::matmul(VarId a, VarId b) {
    const Tensor& A = nodes_[a].val;
    const Tensor& B = nodes_[b].val;
    check(A.cols == B.rows, "matmul: shape mismatch");
    Node n;
    n.op = Op::MatMul;
    n.a = a;
    n.b = b;
    n.val = Tensor(A.rows, B.cols);
    for (int i = 0; i < A.rows; ++i) {
        for (int k = 0; k < A.cols; ++k) {
            const double aik = A(i, k);
            for (int j = 0; j < B.cols; ++j) n.val(i, j) += aik * B(k, j);
        }
    }
    return push(std::move(n));
}

VarId Tape::add(VarId a, VarId b) {
    const Tensor& A = nodes_[a].val;
    const Tensor& B = nodes_[b].val;
    check(A.same_shape(B), "add: shape mismatch");
    Node n;
    n.op = Op::Add;
    n.a = a;
    n.b = b;
    n.val = A;
    for (int i = 0; i < n.val.numel(); ++i) n.val[i] += B[i];
    return push(std::move(n));
}

VarId Tape::mul(VarId a, VarId b) {
    const Tensor& A = nodes_[a].val;
    const Tensor& B = nodes_[b].val;
    check(A.same_shape(B), "mul: shape mismatch");
    Node n;
    n.op = Op::Mul;
    n.a = a;
    n.b = b;
    n.val = A;
    for (int i = 0; i < n.val.numel(); ++i) n.val[i] *= B[i];
    return push(std::move(n));
}

VarId Tape::elu(VarId x) {
    Node n;
    n.op = Op::Elu;
    n.a = x;
    n.val = nodes_[x].val;
    for (int i = 0; i < n.val.numel(); ++i) n.val[i] = qtrader::elu(n.val[i]);
    return push(std::move(n));
}

VarId Tape::sigmoid(VarId x) {
    Node n;
    n.op = Op::Sigmoid;
    n.a = x;
    n.val = nodes_[x].val;
    for (int i = 0; i < n.val.numel(); ++i) n.val[i] = 1.0 / (1.0 + std::exp(-n.val[i]));
    return push(std::move(n));
}

VarId Tape::tanh(VarId x) {
    Node n;
    n.op = Op::Tanh;
    n.a = x;
    n.val = nodes_[x].val;
    for (int i = 0; i < n.val.numel(); ++i) n.val[i] = std::tanh(n.val[i]);
    return push(std::move(n));
}

VarId Tape::softmax_vec(VarId x) {
    const Tensor& X = nodes_[x].val;
    check(X.cols == 1, "softmax_vec: expected a vector");
    Node n;
    n.op = Op::SoftmaxVec;
    n.a = x;
    n.val = Tensor(X.rows, 1);
    softmax_row_inplace(X.v.data(), n.val.v.data(), X.rows);
    return push(std::move(n));
}

VarId Tape::softmax_rows(VarId x) {
    const Tensor& X = nodes_[x].val;
    Node n;
    n.op = Op::SoftmaxRows;
    n.a = x;
    n.val = Tensor(X.rows, X.cols);
    for (int r = 0; r < X.rows; ++r) {
        softmax_row_inplace(&X.v[static_cast<size_t>(r) * X.cols],
                            &n.val.v[static_cast<size_t>(r) * X.cols], X.cols);
    }
    return push(std::move(n));
}

VarId Tape::scale(VarId x, double c) {
    Node n;
    n.op = Op::Scale;
    n.a = x;
    n.c = c;
    n.val = nodes_[x].val;
    for (int i = 0; i < n.val.numel(); ++i) n.val[i] *= c;
    return push(std::move(n));
}

VarId Tape::neg_sq_diff(VarId q, VarId k) {
    const Tensor& Q = nodes_[q].val;
    const Tensor& K = nodes_[k].val;
    check(Q.cols == 1 && K.cols == 1 && Q.rows == K.rows, "neg_sq_diff: length mismatch");
    Node n;
    n.op = Op::NegSqDiff;
    n.a = q;
    n.b = k;
    n.val = Tensor(Q.rows, K.rows);
    for (int i = 0; i < Q.rows; ++i) {
        for (int j = 0; j < K.rows; ++j) {
            const double d = Q[i] - K[j];
            n.val(i, j) = -d * d;
        }
    }
    return push(std::move(n));
}

VarId Tape::stack_scalars(const std::vector<VarId>& xs) {
    check(!xs.empty(), "stack_scalars: empty input");
    Node n;
    n.op = Op::StackScalars;
    n.extra = static_cast<int>(variadic_.size());
    n.val = Tensor(static_cast<int>(xs.size()), 1);
    for (size_t i = 0; i < xs.size(); ++i) {
        check(nodes_[xs[i]].val.numel() == 1, "stack_scalars: input is not scalar");
        n.val[static_cast<int>(i)] = nodes_[xs[i]].val[0];
    }
    variadic_.push_back(xs);
    return push(std::move(n));
}

VarId Tape::stack_rows(const std::vector<VarId>& rows) {
    check(!rows.empty(), "stack_rows: empty input");
    const int d = nodes_[rows[0]].val.rows;
    Node n;
    n.op = Op::StackRows;
    n.extra = static_cast<int>(variadic_.size());
    n.val = Tensor(static_cast<int>(rows.size()), d);
    for (size_t r = 0; r < rows.size(); ++r) {
        const Tensor& x = nodes_[rows[r]].val;
        check(x.cols == 1 && x.rows == d, "stack_rows: row length mismatch");
        for (int c = 0; c < d; ++c) n.val(static_cast<int>(r), c) = x[c];
    }
    variadic_.push_back(rows);
    return push(std::move(n));
}

VarId Tape::pick_row(VarId m, int row) {
    const Tensor& M = nodes_[m].val;
    check(row >= 0 && row < M.rows, "pick_row: row out of range");
    Node n;
    n.op = Op::PickRow;
    n.a = m;
    n.i0 = row;
    n.val = Tensor(M.cols, 1);
    for (int c = 0; c < M.cols; ++c) n.val[c] = M(row, c);
    return push(std::move(n));
}

VarId Tape::slice(VarId x, int start, int len) {
    const Tensor& X = nodes_[x].val;
    check(X.cols == 1 && start >= 0 && len >= 1 && start + len <= X.rows,
          "slice: range out of bounds");
    Node n;
    n.op = Op::Slice;
    n.a = x;
    n.i0 = start;
    n.i1 = len;
    n.val = Tensor(len, 1);
    for (int i = 0; i < len; ++i) n.val[i] = X[start + i];
    return push(std::move(n));
}

VarId Tape::concat(const std::vector<VarId>& xs) {
    check(!xs.empty(), "concat: empty input");
    int total = 0;
    for (VarId x : xs) {
        check(nodes_[x].val.cols == 1, "concat: expected vectors");
        total += nodes_[x].val.rows;
    }
    Node n;
    n.op = Op::Concat;
    n.extra = static_cast<int>(variadic_.size());
    n.val = Tensor(total, 1);
    int at = 0;
    for (VarId x : xs) {
        const Tensor& X = nodes_[x].val;
        for (int i = 0; i < X.rows; ++i) n.val[at++] = X[i];
    }
    variadic_.push_back(xs);
    return push(std::move(n));
}

VarId Tape::custom(VarId a, VarId b, Tensor value, CustomBackward backward) {
    Node n;
    n.op = Op::Custom;
    n.a = a;
    n.b = b;
    n.extra = static_cast<int>(customs_.size());
    n.val = std::move(value);
    customs_.push_back(std::move(backward));
    return push(std::move(n));
}

void Tape::backward(VarId y, const Tensor& seed) {
    if (consumed_) throw std::logic_error("tape already consumed by backward()");
    consumed_ = true;
    check(y >= 0 && y < size(), "backward: unknown node");
    check(seed.same_shape(nodes_[y].val), "backward: seed shape mismatch");

    grad_of(y) = seed;
    for (VarId id = y; id >= 0; --id) {
        Node& n = nodes_[id];
        if (!n.has_grad) continue;
        const Tensor& g = n.grad;
        switch (n.op) {
            case Op::Leaf:
                break;
            case Op::MatVec: {
                const Tensor& W = nodes_[n.a].val;
                const Tensor& X = nodes_[n.b].val;
                Tensor& dW = grad_of(n.a);
                Tensor& dX = grad_of(n.b);
                for (int r = 0; r < W.rows; ++r) {
                    const double gr = g[r];
                    double* dwr = &dW.v[static_cast<size_t>(r) * W.cols];
                    const double* wr = &W.v[static_cast<size_t>(r) * W.cols];
                    for (int k = 0; k < W.cols; ++k) {
                        dwr[k] += gr * X.v[k];
                        dX.v[k] += gr * wr[k];
                    }
                }
                break;
            }
            case Op::MatMul: {
                const Tensor& A = nodes_[n.a].val;
                const Tensor& B = nodes_[n.b].val;
                Tensor& dA = grad_of(n.a);
                Tensor& dB = grad_of(n.b);
                for (int i = 0; i < A.rows; ++i) {
                    for (int k = 0; k < A.cols; ++k) {
                        double acc = 0.0;
                        for (int j = 0; j < B.cols; ++j) acc += g(i, j) * B(k, j);
                        dA(i, k) += acc;
                    }
                }
                for (int k = 0; k < A.cols; ++k) {
                    for (int j = 0; j < B.cols; ++j) {
                        double acc = 0.0;
                        for (int i = 0; i < A.rows; ++i) acc += A(i, k) * g(i, j);
                        dB(k, j) += acc;
                    }
                }
                break;
            }
            case Op::Add: {
                Tensor& dA = grad_of(n.a);
                Tensor& dB = grad_of(n.b);
                for (int i = 0; i < g.numel(); ++i) {
                    dA[i] += g[i];
                    dB[i] += g[i];
                }
                break;
            }
            case Op::Mul: {
                const Tensor& A = nodes_[n.a].val;
                const Tensor& B = nodes_[n.b].val;
                Tensor& dA = grad_of(n.a);
                Tensor& dB = grad_of(n.b);
                for (int i = 0; i < g.numel(); ++i) {
                    dA[i] += g[i] * B[i];
                    dB[i] += g[i] * A[i];
                }
                break;
            }
            case Op::Elu: {
                const Tensor& X = nodes_[n.a].val;
                Tensor& dX = grad_of(n.a);
                for (int i = 0; i < g.numel(); ++i) {
                    dX[i] += g[i] * (X[i] >= 0.0 ? 1.0 : std::exp(X[i]));
                }
                break;
            }
            case Op::Sigmoid: {
                Tensor& dX = grad_of(n.a);
                for (int i = 0; i < g.numel(); ++i) {
                    dX[i] += g[i] * n.val[i] * (1.0 - n.val[i]);
                }
                break;
            }
            case Op::Tanh: {
                Tensor& dX = grad_of(n.a);
                for (int i = 0; i < g.numel(); ++i) {
                    dX[i] += g[i] * (1.0 - n.val[i] * n.val[i]);
                }
                break;
            }
            case Op::SoftmaxVec: {
                Tensor& dX = grad_of(n.a);
                softmax_row_backward(n.val.v.data(), g.v.data(), dX.v.data(), n.val.rows);
                break;
            }
            case Op::SoftmaxRows: {
                Tensor& dX = grad_of(n.a);
                for (int r = 0; r < n.val.rows; ++r) {
                    const size_t off = static_cast<size_t>(r) * n.val.cols;
                    softmax_row_backward(&n.val.v[off], &g.v[off], &dX.v[off], n.val.cols);
                }
                break;
            }
            case Op::Scale: {
                Tensor& dX = grad_of(n.a);
                for (int i = 0; i < g.numel(); ++i) dX[i] += n.c * g[i];
                break;
            }
            case Op::NegSqDiff: {
                const Tensor& Q = nodes_[n.a].val;
                const Tensor& K = nodes_[n.b].val;
                Tensor& dQ = grad_of(n.a);
                Tensor& dK = grad_of(n.b);
                for (int i = 0; i < Q.rows; ++i) {
                    for (int j = 0; j < K.rows; ++j) {
                        const double d = -2.0 * (Q[i] - K[j]) * g(i, j);
                        dQ[i] += d;
                        dK[j] -= d;
                    }
                }
                break;
            }
            case Op::StackScalars: {
                const auto& xs = variadic_[n.extra];
                for (size_t i = 0; i < xs.size(); ++i) {
                    grad_of(xs[i])[0] += g[static_cast<int>(i)];
                }
                break;
            }
            case Op::StackRows: {
                const auto& rows = variadic_[n.extra];
                for (size_t r = 0; r < rows.size(); ++r) {
                    Tensor& dx = grad_of(rows[r]);
                    for (int c = 0; c < n.val.cols; ++c) {
                        dx[c] += g(static_cast<int>(r), c);
                    }
                }
                break;
            }
            case Op::PickRow: {
                Tensor& dM = grad_of(n.a);
                for (int c = 0; c < n.val.rows; ++c) dM(n.i0, c) += g[c];
                break;
            }
            case Op::Slice: {
                Tensor& dX = grad_of(n.a);
                for (int i = 0; i < n.i1; ++i) dX[n.i0 + i] += g[i];
                break;
            }
            case Op::Concat: {
                const auto& xs = variadic_[n.extra];
                int at = 0;
                for (VarId x : xs) {
                    Tensor& dx = grad_of(x);
                    for (int i = 0; i < dx.rows; ++i) dx[i] += g[at++];
                }
                break;
            }
            case Op::Custom: {
                Tensor* da = n.a >= 0 ? &grad_of(n.a) : nullptr;
                Tensor* db = n.b >= 0 ? &grad_of(n.b) : nullptr;
                customs_[n.extra](g, da, db);
                break;
            }
        }
    }
}

Tensor Tape::grad(VarId id) const {
    const Node& n = nodes_[id];
    if (n.has_grad) return n.grad;
    return Tensor(n.val.rows, n.val.cols);
}

LstmParams LstmParams::zeros(int input, int hidden) {
    LstmParams p;
    for (Tensor* w : {&p.w_xi, &p.w_xf, &p.w_xg, &p.w_xo}) *w = Tensor(hidden, input);
    for (Tensor* w : {&p.w_hi, &p.w_hf, &p.w_hg, &p.w_ho}) *w = Tensor(hidden, hidden);
    for (Tensor* b : {&p.b_i, &p.b_f, &p.b_g, &p.b_o}) *b = Tensor(hidden, 1);
    return p;
}

LstmLeafIds lstm_leaves(Tape& tape, const LstmParams& p) {
    LstmLeafIds ids;
    ids.w_xi = tape.leaf(p.w_xi);
    ids.w_hi = tape.leaf(p.w_hi);
    ids.b_i = tape.leaf(p.b_i);
    ids.w_xf = tape.leaf(p.w_xf);
    ids.w_hf = tape.leaf(p.w_hf);
    ids.b_f = tape.leaf(p.b_f);
    ids.w_xg = tape.leaf(p.w_xg);
    ids.w_hg = tape.leaf(p.w_hg);
    ids.b_g = tape.leaf(p.b_g);
    ids.w_xo = tape.leaf(p.w_xo);
    ids.w_ho = tape.leaf(p.w_ho);
    ids.b_o = tape.leaf(p.b_o);
    return ids;
}

std::pair<VarId, VarId> lstm_cell(Tape& tape, VarId x, VarId h, VarId c, const LstmLeafIds& p) {
    auto gate = [&](VarId wx, VarId wh, VarId b) {
        return tape.add(tape.add(tape.matvec(wx, x), tape.matvec(wh, h)), b);
    };
    const VarId i = tape.sigmoid(gate(p.w_xi, p.w_hi, p.b_i));
    const VarId f = tape.sigmoid(gate(p.w_xf, p.w_hf, p.b_f));
    const VarId g = tape.tanh(gate(p.w_xg, p.w_hg, p.b_g));
    const VarId o = tape.sigmoid(gate(p.w_xo, p.w_ho, p.b_o));
    const VarId c_next = tape.add(tape.mul(f, c), tape.mul(i, g));
    const VarId h_next = tape.mul(o, tape.tanh(c_next));
    return {h_next, c_next};
}

std::pair<Tensor, Tensor> lstm_cell(const Tensor& x, const Tensor& h, const Tensor& c,
                                    const LstmParams& p) {
    Tape tape;
    const VarId xv = tape.leaf(x);
    const VarId hv = tape.leaf(h);
    const VarId cv = tape.leaf(c);
    const auto ids = lstm_leaves(tape, p);
    const auto [hn, cn] = lstm_cell(tape, xv, hv, cv, ids);
    return {tape.value(hn), tape.value(cn)};
}

PreNetParams PreNetParams::zeros(const std::vector<int>& dims) {
    PreNetParams p;
    for (size_t i = 0; i + 1 < dims.size(); ++i) {
        p.layers.push_back({Tensor(dims[i + 1], dims[i]), Tensor(dims[i + 1], 1)});
    }
    return p;
}

VarId pre_net(Tape& tape, VarId x, const std::vector<std::pair<VarId, VarId>>& layer_ids) {
    VarId cur = x;
    for (const auto& [w, b] : layer_ids) {
        cur = tape.elu(tape.add(tape.matvec(w, cur), b));
    }
    return cur;
}

}  // namespace qtrader

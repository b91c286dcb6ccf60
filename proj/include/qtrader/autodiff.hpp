#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "qtrader/tensor.hpp"

namespace qtrader {

// Scalar ops shared by the tape and by value-level callers.
double elu(double x);
std::vector<double> softmax(const std::vector<double>& v);

using VarId = int;

// Reverse-mode tape over Tensor values. Nodes are appended in evaluation
// order, so reverse creation order is a valid reverse topological order.
// A tape is single-use: backward() consumes it.
class Tape {
  public:
    // Gradient accumulator for a custom node: add d(out)/d(input) * out_grad
    // into the supplied input gradients (either pointer may be null when the
    // corresponding input is absent).
    using CustomBackward =
        std::function<void(const Tensor& out_grad, Tensor* grad_a, Tensor* grad_b)>;

    VarId leaf(Tensor value);

    VarId matvec(VarId w, VarId x);               // (m,k) * (k,1) -> (m,1)
    VarId matmul(VarId a, VarId b);               // (m,k) * (k,n) -> (m,n)
    VarId add(VarId a, VarId b);                  // elementwise, same shape
    VarId mul(VarId a, VarId b);                  // elementwise, same shape
    VarId elu(VarId x);
    VarId sigmoid(VarId x);
    VarId tanh(VarId x);
    VarId softmax_vec(VarId x);                   // (n,1) -> (n,1)
    VarId softmax_rows(VarId x);                  // softmax over each row
    VarId scale(VarId x, double c);
    VarId neg_sq_diff(VarId q, VarId k);          // out(i,j) = -(q_i - k_j)^2
    VarId stack_scalars(const std::vector<VarId>& xs);   // k scalars -> (k,1)
    VarId stack_rows(const std::vector<VarId>& rows);    // k vectors (d,1) -> (k,d)
    VarId pick_row(VarId m, int row);             // (k,d) -> (d,1)
    VarId slice(VarId x, int start, int len);     // (n,1) -> (len,1)
    VarId concat(const std::vector<VarId>& xs);   // vectors -> (sum,1)
    VarId custom(VarId a, VarId b, Tensor value, CustomBackward backward);

    const Tensor& value(VarId id) const { return nodes_[id].val; }
    int size() const { return static_cast<int>(nodes_.size()); }

    // Propagates seed (shape of node y's value) back to every reachable node.
    // Throws std::logic_error if the tape was already consumed.
    void backward(VarId y, const Tensor& seed);

    // Gradient accumulated at a node; zero tensor if backward never reached it.
    Tensor grad(VarId id) const;

  private:
    enum class Op : unsigned char {
        Leaf,
        MatVec,
        MatMul,
        Add,
        Mul,
        Elu,
        Sigmoid,
        Tanh,
        SoftmaxVec,
        SoftmaxRows,
        Scale,
        NegSqDiff,
        StackScalars,
        StackRows,
        PickRow,
        Slice,
        Concat,
        Custom,
    };

    struct Node {
        Op op;
        VarId a = -1;
        VarId b = -1;
        int extra = -1;    // index into variadic_ or customs_
        int i0 = 0;        // op-specific: row / slice start
        int i1 = 0;        // op-specific: slice length
        double c = 0.0;    // Scale factor
        Tensor val;
        Tensor grad;
        bool has_grad = false;
    };

    VarId push(Node node);
    Tensor& grad_of(VarId id);

    std::vector<Node> nodes_;
    std::vector<std::vector<VarId>> variadic_;
    std::vector<CustomBackward> customs_;
    bool consumed_ = false;
};

// LSTM gate parameters. Each gate g has output = act(w_x[g] x + w_h[g] h + b[g]).
struct LstmParams {
    Tensor w_xi, w_hi, b_i;  // input gate (sigmoid)
    Tensor w_xf, w_hf, b_f;  // forget gate (sigmoid)
    Tensor w_xg, w_hg, b_g;  // cell candidate (tanh)
    Tensor w_xo, w_ho, b_o;  // output gate (sigmoid)

    int hidden() const { return w_xi.rows; }
    int input() const { return w_xi.cols; }

    static LstmParams zeros(int input, int hidden);
};

struct LstmLeafIds {
    VarId w_xi, w_hi, b_i;
    VarId w_xf, w_hf, b_f;
    VarId w_xg, w_hg, b_g;
    VarId w_xo, w_ho, b_o;
};

LstmLeafIds lstm_leaves(Tape& tape, const LstmParams& p);

// One LSTM step on the tape: returns (h', c').
std::pair<VarId, VarId> lstm_cell(Tape& tape, VarId x, VarId h, VarId c, const LstmLeafIds& p);

// Value-level convenience (builds a throwaway tape).
std::pair<Tensor, Tensor> lstm_cell(const Tensor& x, const Tensor& h, const Tensor& c,
                                    const LstmParams& p);

// Chain of dense layers with ELU after every layer.
struct PreNetParams {
    struct Layer {
        Tensor w;
        Tensor b;
    };
    std::vector<Layer> layers;

    int input() const { return layers.front().w.cols; }
    int output() const { return layers.back().w.rows; }

    static PreNetParams zeros(const std::vector<int>& dims);  // e.g. {64, 32, 8, 4}
};

VarId pre_net(Tape& tape, VarId x, const std::vector<std::pair<VarId, VarId>>& layer_ids);

}  // namespace qtrader

#pragma once

#include <span>
#include <vector>

#include "qtrader/quantum.hpp"
#include "qtrader/tensor.hpp"

namespace qtrader {

// One attention head: independent angle sets for the key, query and value
// circuits, all sharing the same layered topology.
struct AttentionHeadParams {
    Tensor theta_k;
    Tensor theta_q;
    Tensor theta_v;

    static AttentionHeadParams zeros(const CircuitSpec& spec) {
        AttentionHeadParams h;
        h.theta_k = Tensor(spec.param_count, 1);
        h.theta_q = Tensor(spec.param_count, 1);
        h.theta_v = Tensor(spec.param_count, 1);
        return h;
    }
};

struct AttentionIntermediate {
    std::vector<double> k;  // length seq, each in [-1, 1]
    std::vector<double> q;  // length seq
    Tensor v;               // seq x dh
    Tensor scores;          // seq x seq, scores(i,j) = -(q_i - k_j)^2
};

// <Z_0> after embedding x_row and running the key circuit.
double key_scalar(std::span<const double> x_row, const CircuitSpec& spec,
                  const AttentionHeadParams& head);
double query_scalar(std::span<const double> x_row, const CircuitSpec& spec,
                    const AttentionHeadParams& head);

// <Z_j> for every qubit j after embedding x_row and running the value circuit.
std::vector<double> value_row(std::span<const double> x_row, const CircuitSpec& spec,
                              const AttentionHeadParams& head);

// scores(i,j) = -(q_i - k_j)^2
Tensor attention_matrix(std::span<const double> q, std::span<const double> k);

// Row-wise softmax(scores / sqrt(dh)) times V.
Tensor head_output(const Tensor& scores, const Tensor& v, int dh);

AttentionIntermediate head_intermediate(const Tensor& x, const CircuitSpec& spec,
                                        const AttentionHeadParams& head);

// Concatenation of head outputs along the feature axis: seq x (H * dh).
Tensor multihead(const Tensor& x, const CircuitSpec& spec,
                 const std::vector<AttentionHeadParams>& heads);

}  // namespace qtrader

#include "qtrader/attention.hpp"

#include <cmath>
#include <stdexcept>

#include "qtrader/autodiff.hpp"

namespace qtrader {

namespace {

void check_row(std::span<const double> x_row, const CircuitSpec& spec) {
    if (static_cast<int>(x_row.size()) != spec.qubits) {
        throw std::invalid_argument("attention: input row length must equal the qubit count");
    }
}

}  // namespace

double key_scalar(std::span<const double> x_row, const CircuitSpec& spec,
                  const AttentionHeadParams& head) {
    check_row(x_row, spec);
    return embed_expectations(spec, head.theta_k.v, x_row)[0];
}

double query_scalar(std::span<const double> x_row, const CircuitSpec& spec,
                    const AttentionHeadParams& head) {
    check_row(x_row, spec);
    return embed_expectations(spec, head.theta_q.v, x_row)[0];
}

std::vector<double> value_row(std::span<const double> x_row, const CircuitSpec& spec,
                              const AttentionHeadParams& head) {
    check_row(x_row, spec);
    return embed_expectations(spec, head.theta_v.v, x_row);
}

Tensor attention_matrix(std::span<const double> q, std::span<const double> k) {
    if (q.size() != k.size()) {
        throw std::invalid_argument("attention_matrix: length mismatch");
    }
    const int seq = static_cast<int>(q.size());
    Tensor a(seq, seq);
    for (int i = 0; i < seq; ++i) {
        for (int j = 0; j < seq; ++j) {
            const double d = q[i] - k[j];
            a(i, j) = -d * d;
        }
    }
    return a;
}

Tensor head_output(const Tensor& scores, const Tensor& v, int dh) {
    if (scores.rows != scores.cols || scores.rows != v.rows) {
        throw std::invalid_argument("head_output: shape mismatch");
    }
    const int seq = scores.rows;
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));
    Tensor out(seq, v.cols);
    std::vector<double> row(seq);
    for (int i = 0; i < seq; ++i) {
        for (int j = 0; j < seq; ++j) row[j] = scores(i, j) * inv_scale;
        const std::vector<double> w = softmax(row);
        for (int j = 0; j < seq; ++j) {
            for (int c = 0; c < v.cols; ++c) out(i, c) += w[j] * v(j, c);
        }
    }
    return out;
}

AttentionIntermediate head_intermediate(const Tensor& x, const CircuitSpec& spec,
                                        const AttentionHeadParams& head) {
    const int seq = x.rows;
    AttentionIntermediate mid;
    mid.k.resize(seq);
    mid.q.resize(seq);
    mid.v = Tensor(seq, spec.qubits);
    for (int i = 0; i < seq; ++i) {
        const std::span<const double> row(&x.v[static_cast<size_t>(i) * x.cols], x.cols);
        mid.k[i] = key_scalar(row, spec, head);
        mid.q[i] = query_scalar(row, spec, head);
        const std::vector<double> v = value_row(row, spec, head);
        for (int c = 0; c < spec.qubits; ++c) mid.v(i, c) = v[c];
    }
    mid.scores = attention_matrix(mid.q, mid.k);
    return mid;
}

Tensor multihead(const Tensor& x, const CircuitSpec& spec,
                 const std::vector<AttentionHeadParams>& heads) {
    if (heads.empty()) {
        throw std::invalid_argument("multihead: need at least one head");
    }
    const int seq = x.rows;
    const int dh = spec.qubits;
    Tensor out(seq, static_cast<int>(heads.size()) * dh);
    for (size_t h = 0; h < heads.size(); ++h) {
        const AttentionIntermediate mid = head_intermediate(x, spec, heads[h]);
        const Tensor ho = head_output(mid.scores, mid.v, dh);
        for (int i = 0; i < seq; ++i) {
            for (int c = 0; c < dh; ++c) {
                out(i, static_cast<int>(h) * dh + c) = ho(i, c);
            }
        }
    }
    return out;
}

}  // namespace qtrader

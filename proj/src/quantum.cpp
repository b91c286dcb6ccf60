#include "qtrader/quantum.hpp"

#include <cmath>
#include <stdexcept>

namespace qtrader {

namespace {

constexpr double kHalfPi = 1.5707963267948966;

size_t bit_mask(int qubits, int qubit) {
    return size_t{1} << (qubits - 1 - qubit);
}

void check_qubit(const StateVector& s, int qubit) {
    if (qubit < 0 || qubit >= s.qubits()) {
        throw std::out_of_range("qubit index " + std::to_string(qubit) + " out of range for " +
                                std::to_string(s.qubits()) + " qubits");
    }
}

}  // namespace

StateVector::StateVector(int qubits) : qubits_(qubits), amp_(size_t{1} << qubits) {
    if (qubits < 1 || qubits > 20) {
        throw std::invalid_argument("qubit count must be in [1, 20]");
    }
    amp_[0] = 1.0;
}

void StateVector::reset_zero_state() {
    std::fill(amp_.begin(), amp_.end(), std::complex<double>{0.0, 0.0});
    amp_[0] = 1.0;
}

double StateVector::norm_sq() const {
    double s = 0.0;
    for (const auto& a : amp_) s += std::norm(a);
    return s;
}

CircuitSpec CircuitSpec::layered(int qubits, int layers) {
    CircuitSpec spec;
    spec.qubits = qubits;
    spec.param_count = layers * qubits;
    for (int l = 0; l < layers; ++l) {
        for (int q = 0; q < qubits; ++q) {
            spec.gates.push_back({Gate::Kind::Rx, q, l * qubits + q});
        }
        for (int q = 0; q + 1 < qubits; ++q) {
            spec.gates.push_back({Gate::Kind::Cnot, q, q + 1});
        }
    }
    return spec;
}

void apply_rx(StateVector& state, int qubit, double angle) {
    check_qubit(state, qubit);
    const double c = std::cos(0.5 * angle);
    const double s = std::sin(0.5 * angle);
    const size_t mask = bit_mask(state.qubits(), qubit);
    const size_t dim = state.dim();
    for (size_t block = 0; block < dim; block += mask << 1) {
        for (size_t i = block; i < block + mask; ++i) {
            const std::complex<double> a0 = state.amp(i);
            const std::complex<double> a1 = state.amp(i + mask);
            // Rx = [[c, -i s], [-i s, c]]
            state.amp(i) = {c * a0.real() + s * a1.imag(), c * a0.imag() - s * a1.real()};
            state.amp(i + mask) = {s * a0.imag() + c * a1.real(), -s * a0.real() + c * a1.imag()};
        }
    }
}

void apply_cnot(StateVector& state, int control, int target) {
    check_qubit(state, control);
    check_qubit(state, target);
    if (control == target) {
        throw std::invalid_argument("cnot: control and target must differ");
    }
    const size_t cmask = bit_mask(state.qubits(), control);
    const size_t tmask = bit_mask(state.qubits(), target);
    const size_t dim = state.dim();
    for (size_t i = 0; i < dim; ++i) {
        if ((i & cmask) && !(i & tmask)) {
            std::swap(state.amp(i), state.amp(i | tmask));
        }
    }
}

StateVector angle_embed(std::span<const double> x) {
    StateVector state(static_cast<int>(x.size()));
    angle_embed_into(state, x);
    return state;
}

void angle_embed_into(StateVector& state, std::span<const double> x) {
    if (static_cast<int>(x.size()) != state.qubits()) {
        throw std::invalid_argument("angle_embed: expected one angle per qubit");
    }
    state.reset_zero_state();
    for (int q = 0; q < state.qubits(); ++q) {
        apply_rx(state, q, -x[q]);
    }
}

void run_circuit_inplace(const CircuitSpec& spec, std::span<const double> theta,
                         StateVector& state) {
    if (static_cast<int>(theta.size()) != spec.param_count) {
        throw std::invalid_argument("run_circuit: expected " + std::to_string(spec.param_count) +
                                    " angles, got " + std::to_string(theta.size()));
    }
    if (state.qubits() != spec.qubits) {
        throw std::invalid_argument("run_circuit: state qubit count does not match circuit");
    }
    for (const Gate& g : spec.gates) {
        if (g.kind == Gate::Kind::Rx) {
            apply_rx(state, g.a, theta[g.b]);
        } else {
            apply_cnot(state, g.a, g.b);
        }
    }
}

StateVector run_circuit(const CircuitSpec& spec, std::span<const double> theta,
                        const StateVector& input) {
    StateVector out = input;
    run_circuit_inplace(spec, theta, out);
    return out;
}

double expect_z(const StateVector& state, int qubit) {
    check_qubit(state, qubit);
    const size_t mask = bit_mask(state.qubits(), qubit);
    double e = 0.0;
    for (size_t i = 0; i < state.dim(); ++i) {
        const double p = std::norm(state.amp(i));
        e += (i & mask) ? -p : p;
    }
    return e;
}

void expect_all_z(const StateVector& state, double* out) {
    const int n = state.qubits();
    for (int q = 0; q < n; ++q) out[q] = 0.0;
    for (size_t i = 0; i < state.dim(); ++i) {
        const double p = std::norm(state.amp(i));
        for (int q = 0; q < n; ++q) {
            out[q] += (i & bit_mask(n, q)) ? -p : p;
        }
    }
}

std::vector<double> param_shift_grad(const CircuitSpec& spec, std::span<const double> theta,
                                     const StateVector& input, int observable) {
    check_qubit(input, observable);
    std::vector<double> shifted(theta.begin(), theta.end());
    std::vector<double> grad(theta.size());
    for (size_t k = 0; k < theta.size(); ++k) {
        shifted[k] = theta[k] + kHalfPi;
        const double e_plus = expect_z(run_circuit(spec, shifted, input), observable);
        shifted[k] = theta[k] - kHalfPi;
        const double e_minus = expect_z(run_circuit(spec, shifted, input), observable);
        shifted[k] = theta[k];
        grad[k] = 0.5 * (e_plus - e_minus);
    }
    return grad;
}

std::vector<double> embed_expectations(const CircuitSpec& spec, std::span<const double> theta,
                                       std::span<const double> x) {
    StateVector state(spec.qubits);
    angle_embed_into(state, x);
    run_circuit_inplace(spec, theta, state);
    std::vector<double> out(spec.qubits);
    expect_all_z(state, out.data());
    return out;
}

void embed_expectations_backward(const CircuitSpec& spec, std::span<const double> theta,
                                 std::span<const double> x, std::span<const double> d_expect,
                                 double* dtheta, double* dx) {
    const int n = spec.qubits;
    StateVector work(n);
    std::vector<double> expect(n);

    auto weighted = [&](std::span<const double> th, std::span<const double> xs) {
        angle_embed_into(work, xs);
        run_circuit_inplace(spec, th, work);
        expect_all_z(work, expect.data());
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += d_expect[j] * expect[j];
        return acc;
    };

    std::vector<double> th(theta.begin(), theta.end());
    for (int k = 0; k < spec.param_count; ++k) {
        th[k] = theta[k] + kHalfPi;
        const double e_plus = weighted(th, x);
        th[k] = theta[k] - kHalfPi;
        const double e_minus = weighted(th, x);
        th[k] = theta[k];
        dtheta[k] += 0.5 * (e_plus - e_minus);
    }

    std::vector<double> xs(x.begin(), x.end());
    for (int j = 0; j < n; ++j) {
        xs[j] = x[j] + kHalfPi;
        const double e_plus = weighted(theta, xs);
        xs[j] = x[j] - kHalfPi;
        const double e_minus = weighted(theta, xs);
        xs[j] = x[j];
        dx[j] += 0.5 * (e_plus - e_minus);
    }
}

}  // namespace qtrader

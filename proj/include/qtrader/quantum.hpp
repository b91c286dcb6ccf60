#pragma once

#include <complex>
#include <span>
#include <vector>

namespace qtrader {

// Dense statevector over n qubits. Qubit 0 is the most significant bit of the
// basis index, so for n = 2 the basis order is |00>, |01>, |10>, |11> with
// qubit 0 owning the left bit.
class StateVector {
  public:
    explicit StateVector(int qubits);

    int qubits() const { return qubits_; }
    size_t dim() const { return amp_.size(); }

    std::complex<double>& amp(size_t i) { return amp_[i]; }
    const std::complex<double>& amp(size_t i) const { return amp_[i]; }

    void reset_zero_state();  // |0...0>
    double norm_sq() const;

  private:
    int qubits_;
    std::vector<std::complex<double>> amp_;
};

// Parameterized gates are Rx only; slot indexes a contiguous angle vector.
struct Gate {
    enum class Kind : unsigned char { Rx, Cnot };
    Kind kind;
    int a;  // Rx: qubit, Cnot: control
    int b;  // Rx: angle slot, Cnot: target
};

struct CircuitSpec {
    int qubits = 4;
    int param_count = 0;
    std::vector<Gate> gates;

    // L repetitions of (Rx on every qubit, then the CNOT chain 0->1 ... n-2->n-1).
    // Angle slot for layer l, qubit q is l*n + q.
    static CircuitSpec layered(int qubits, int layers);
};

void apply_rx(StateVector& state, int qubit, double angle);
void apply_cnot(StateVector& state, int control, int target);

// Per-qubit Rx(-x_j) on |0...0> (the adjoint of the Rx(x_j) loader).
StateVector angle_embed(std::span<const double> x);
void angle_embed_into(StateVector& state, std::span<const double> x);

void run_circuit_inplace(const CircuitSpec& spec, std::span<const double> theta,
                         StateVector& state);
StateVector run_circuit(const CircuitSpec& spec, std::span<const double> theta,
                        const StateVector& input);

double expect_z(const StateVector& state, int qubit);
void expect_all_z(const StateVector& state, double* out);

// d<Z_observable>/d(theta_k) by the +-pi/2 parameter-shift rule, exact for Rx.
std::vector<double> param_shift_grad(const CircuitSpec& spec, std::span<const double> theta,
                                     const StateVector& input, int observable);

// <Z_j> for all j after angle_embed(x) followed by the circuit.
std::vector<double> embed_expectations(const CircuitSpec& spec, std::span<const double> theta,
                                       std::span<const double> x);

// Gradients of sum_j dE[j] * <Z_j> with respect to theta and x, both via the
// parameter-shift rule (the embedding rotations are Rx-generated as well).
// Accumulates into dtheta (param_count) and dx (qubits).
void embed_expectations_backward(const CircuitSpec& spec, std::span<const double> theta,
                                 std::span<const double> x, std::span<const double> d_expect,
                                 double* dtheta, double* dx);

}  // namespace qtrader

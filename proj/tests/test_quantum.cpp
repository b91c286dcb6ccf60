#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <vector>

#include "qtrader/quantum.hpp"
#include "qtrader/rng.hpp"

using namespace qtrader;

namespace {

StateVector random_state(int qubits, Rng& rng) {
    StateVector s(qubits);
    double norm = 0.0;
    for (size_t i = 0; i < s.dim(); ++i) {
        s.amp(i) = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        norm += std::norm(s.amp(i));
    }
    const double inv = 1.0 / std::sqrt(norm);
    for (size_t i = 0; i < s.dim(); ++i) s.amp(i) *= inv;
    return s;
}

bool states_equal(const StateVector& a, const StateVector& b, double tol = 0.0) {
    if (a.dim() != b.dim()) return false;
    for (size_t i = 0; i < a.dim(); ++i) {
        if (std::abs(a.amp(i).real() - b.amp(i).real()) > tol) return false;
        if (std::abs(a.amp(i).imag() - b.amp(i).imag()) > tol) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("apply_rx with angle 0 is the identity") {
    Rng rng(1);
    StateVector s = random_state(3, rng);
    const StateVector before = s;
    apply_rx(s, 1, 0.0);
    CHECK(states_equal(s, before));
}

TEST_CASE("apply_rx(pi) flips <Z> from +1 to -1") {
    StateVector s(1);
    CHECK(expect_z(s, 0) == 1.0);
    apply_rx(s, 0, M_PI);
    CHECK(expect_z(s, 0) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("<Z> after Rx(theta) on |0> is cos(theta)") {
    for (const double theta : {0.3, M_PI / 2.0, 1.0, 2.5, -1.2}) {
        StateVector s(1);
        apply_rx(s, 0, theta);
        CHECK(expect_z(s, 0) == doctest::Approx(std::cos(theta)).epsilon(1e-14));
    }
    StateVector half(1);
    apply_rx(half, 0, M_PI / 2.0);
    CHECK(expect_z(half, 0) == doctest::Approx(0.0).epsilon(1e-15));
    StateVector one(1);
    apply_rx(one, 0, 1.0);
    CHECK(expect_z(one, 0) == doctest::Approx(0.540302).epsilon(1e-6));
}

TEST_CASE("apply_cnot truth table with qubit 0 as the high bit") {
    StateVector s(2);
    s.amp(0) = 0.0;
    s.amp(2) = 1.0;  // |10>
    apply_cnot(s, 0, 1);
    CHECK(s.amp(3) == std::complex<double>{1.0, 0.0});  // |11>
    CHECK(s.amp(2) == std::complex<double>{0.0, 0.0});

    StateVector zero(2);  // |00> is fixed
    apply_cnot(zero, 0, 1);
    CHECK(zero.amp(0) == std::complex<double>{1.0, 0.0});
}

TEST_CASE("apply_cnot is an involution") {
    Rng rng(2);
    StateVector s = random_state(4, rng);
    const StateVector before = s;
    apply_cnot(s, 2, 0);
    apply_cnot(s, 2, 0);
    CHECK(states_equal(s, before));
}

TEST_CASE("gate index validation") {
    StateVector s(2);
    CHECK_THROWS_AS(apply_rx(s, 2, 1.0), std::out_of_range);
    CHECK_THROWS_AS(apply_cnot(s, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(apply_cnot(s, 0, 5), std::out_of_range);
    CHECK_THROWS_AS(expect_z(s, -1), std::out_of_range);
}

TEST_CASE("angle_embed basics") {
    const std::vector<double> zeros(4, 0.0);
    const StateVector s = angle_embed(zeros);
    CHECK(s.amp(0) == std::complex<double>{1.0, 0.0});
    for (int q = 0; q < 4; ++q) CHECK(expect_z(s, q) == 1.0);

    std::vector<double> x(4, 0.0);
    x[2] = M_PI / 2.0;
    const StateVector t = angle_embed(x);
    CHECK(expect_z(t, 2) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(expect_z(t, 0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("embedding with Rx(x) or Rx(-x) gives the same <Z>") {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> x(3);
        for (double& v : x) v = rng.uniform(-M_PI, M_PI);

        const StateVector neg = angle_embed(x);
        StateVector pos(3);
        for (int q = 0; q < 3; ++q) apply_rx(pos, q, x[q]);
        for (int q = 0; q < 3; ++q) {
            CHECK(expect_z(neg, q) == doctest::Approx(expect_z(pos, q)).epsilon(1e-14));
            CHECK(expect_z(neg, q) == doctest::Approx(std::cos(x[q])).epsilon(1e-14));
        }
    }
}

TEST_CASE("layered circuit with zero angles fixes |0...0>") {
    const CircuitSpec spec = CircuitSpec::layered(4, 2);
    CHECK(spec.param_count == 8);
    const std::vector<double> theta(8, 0.0);
    StateVector s(4);
    run_circuit_inplace(spec, theta, s);
    CHECK(s.amp(0) == std::complex<double>{1.0, 0.0});
}

TEST_CASE("single-qubit single-layer circuit gives <Z> = cos(theta)") {
    const CircuitSpec spec = CircuitSpec::layered(1, 1);
    for (const double theta : {0.0, 0.7, -2.1, M_PI}) {
        const std::vector<double> angles = {theta};
        const StateVector out = run_circuit(spec, angles, StateVector(1));
        CHECK(expect_z(out, 0) == doctest::Approx(std::cos(theta)).epsilon(1e-14));
    }
}

TEST_CASE("run_circuit validates the angle count") {
    const CircuitSpec spec = CircuitSpec::layered(4, 2);
    const std::vector<double> theta(7, 0.0);
    StateVector s(4);
    CHECK_THROWS_AS(run_circuit_inplace(spec, theta, s), std::invalid_argument);
    StateVector wrong(3);
    const std::vector<double> theta8(8, 0.0);
    CHECK_THROWS_AS(run_circuit_inplace(spec, theta8, wrong), std::invalid_argument);
}

TEST_CASE("norm is preserved by 100 random gates") {
    Rng rng(17);
    for (int seed_trial = 0; seed_trial < 5; ++seed_trial) {
        StateVector s(4);
        for (int g = 0; g < 100; ++g) {
            if (rng.uniform() < 0.5) {
                apply_rx(s, static_cast<int>(rng.below(4)), rng.uniform(-M_PI, M_PI));
            } else {
                const int control = static_cast<int>(rng.below(4));
                int target = static_cast<int>(rng.below(4));
                if (target == control) target = (target + 1) % 4;
                apply_cnot(s, control, target);
            }
        }
        CHECK(std::abs(s.norm_sq() - 1.0) < 1e-10);
    }
}

TEST_CASE("expect_z of an equal superposition is 0") {
    StateVector s(1);
    s.amp(0) = {1.0 / std::sqrt(2.0), 0.0};
    s.amp(1) = {1.0 / std::sqrt(2.0), 0.0};
    CHECK(expect_z(s, 0) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("expectations stay within [-1, 1]") {
    Rng rng(23);
    const CircuitSpec spec = CircuitSpec::layered(4, 3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> theta(spec.param_count);
        std::vector<double> x(4);
        for (double& v : theta) v = rng.uniform(-M_PI, M_PI);
        for (double& v : x) v = rng.uniform(-4.0, 4.0);
        for (const double e : embed_expectations(spec, theta, x)) {
            CHECK(e >= -1.0 - 1e-12);
            CHECK(e <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("parameter shift on one Rx is -sin(theta)") {
    const CircuitSpec spec = CircuitSpec::layered(1, 1);
    {
        const std::vector<double> theta = {M_PI / 2.0};
        const auto grad = param_shift_grad(spec, theta, StateVector(1), 0);
        CHECK(grad[0] == doctest::Approx(-1.0).epsilon(1e-14));
    }
    {
        const std::vector<double> theta = {0.0};  // stationary point of cos
        const auto grad = param_shift_grad(spec, theta, StateVector(1), 0);
        CHECK(grad[0] == doctest::Approx(0.0).epsilon(1e-15));
    }
}

TEST_CASE("parameter shift matches finite differences on random circuits") {
    Rng rng(31);
    const double h = 1e-4;
    for (int trial = 0; trial < 20; ++trial) {
        const int layers = 1 + static_cast<int>(rng.below(3));
        const CircuitSpec spec = CircuitSpec::layered(4, layers);
        std::vector<double> theta(spec.param_count);
        for (double& v : theta) v = rng.uniform(-M_PI, M_PI);
        const StateVector input = random_state(4, rng);
        const int observable = static_cast<int>(rng.below(4));

        const auto ps = param_shift_grad(spec, theta, input, observable);

        double diff_sq = 0.0, norm_sq = 0.0;
        std::vector<double> shifted = theta;
        for (size_t k = 0; k < theta.size(); ++k) {
            shifted[k] = theta[k] + h;
            const double up = expect_z(run_circuit(spec, shifted, input), observable);
            shifted[k] = theta[k] - h;
            const double down = expect_z(run_circuit(spec, shifted, input), observable);
            shifted[k] = theta[k];
            const double fd = (up - down) / (2 * h);
            diff_sq += (ps[k] - fd) * (ps[k] - fd);
            norm_sq += fd * fd;
        }
        CHECK(std::sqrt(diff_sq) / std::max(std::sqrt(norm_sq), 1e-12) < 1e-6);
    }
}

TEST_CASE("embed_expectations_backward matches finite differences") {
    Rng rng(37);
    const CircuitSpec spec = CircuitSpec::layered(4, 2);
    const double h = 1e-5;
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> theta(spec.param_count), x(4), weights(4);
        for (double& v : theta) v = rng.uniform(-M_PI, M_PI);
        for (double& v : x) v = rng.uniform(-2.0, 2.0);
        for (double& v : weights) v = rng.uniform(-1.0, 1.0);

        auto weighted = [&](const std::vector<double>& th, const std::vector<double>& xs) {
            const auto e = embed_expectations(spec, th, xs);
            double acc = 0.0;
            for (int j = 0; j < 4; ++j) acc += weights[j] * e[j];
            return acc;
        };

        std::vector<double> dtheta(theta.size(), 0.0), dx(4, 0.0);
        embed_expectations_backward(spec, theta, x, weights, dtheta.data(), dx.data());

        for (size_t k = 0; k < theta.size(); ++k) {
            std::vector<double> probe = theta;
            probe[k] += h;
            const double up = weighted(probe, x);
            probe[k] -= 2 * h;
            const double down = weighted(probe, x);
            const double fd = (up - down) / (2 * h);
            CHECK(dtheta[k] == doctest::Approx(fd).epsilon(1e-5));
        }
        for (size_t j = 0; j < x.size(); ++j) {
            std::vector<double> probe = x;
            probe[j] += h;
            const double up = weighted(theta, probe);
            probe[j] -= 2 * h;
            const double down = weighted(theta, probe);
            const double fd = (up - down) / (2 * h);
            CHECK(dx[j] == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("simulation is deterministic") {
    auto run = [] {
        Rng rng(5);
        const CircuitSpec spec = CircuitSpec::layered(4, 2);
        std::vector<double> theta(spec.param_count), x(4);
        for (double& v : theta) v = rng.uniform(-M_PI, M_PI);
        for (double& v : x) v = rng.uniform(-1.0, 1.0);
        return embed_expectations(spec, theta, x);
    };
    CHECK(run() == run());
}

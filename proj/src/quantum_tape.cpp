#include "qtrader/quantum_tape.hpp"

#include <utility>
#include <vector>

namespace qtrader {

VarId quantum_block(Tape& tape, const CircuitSpec& spec, VarId theta_var, VarId x_var) {
    const Tensor& theta = tape.value(theta_var);
    const Tensor& x = tape.value(x_var);
    Tensor out = Tensor::from(embed_expectations(spec, theta.v, x.v));
    const std::vector<double> theta_copy = theta.v;
    const std::vector<double> x_copy = x.v;
    const CircuitSpec* spec_ptr = &spec;
    return tape.custom(
        theta_var, x_var, std::move(out),
        [spec_ptr, theta_copy, x_copy](const Tensor& g, Tensor* d_theta, Tensor* d_x) {
            embed_expectations_backward(*spec_ptr, theta_copy, x_copy, g.v,
                                        d_theta ? d_theta->v.data() : nullptr,
                                        d_x ? d_x->v.data() : nullptr);
        });
}

}  // namespace qtrader

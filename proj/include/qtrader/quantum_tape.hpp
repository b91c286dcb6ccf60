#pragma once

#include "qtrader/autodiff.hpp"
#include "qtrader/quantum.hpp"

namespace qtrader {

// Tape node for the expectations <Z_j> of angle_embed(x) followed by the
// circuit. Backward delegates to the parameter-shift rule for both the
// variational angles and the embedded inputs. The spec must outlive the tape.
VarId quantum_block(Tape& tape, const CircuitSpec& spec, VarId theta_var, VarId x_var);

}  // namespace qtrader

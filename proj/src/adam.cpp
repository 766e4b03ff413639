#include "dts/adam.hpp"

#include <cmath>
#include <sstream>

#include "dts/error.hpp"

namespace dts {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
        std::ostringstream msg;
        msg << "adam_step: sizes differ (params " << params.size() << ", grads " << grads.size()
            << ", state " << state.first_moment.size() << ")";
        throw ShapeError(msg.str());
    }
    for (double g : grads)
        if (!std::isfinite(g))
            throw ValueError("adam_step: non-finite gradient, training diverged");

    state.step_count += 1;
    const double correction1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double correction2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));

    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        // Update biased moment estimates, then correct.
        state.first_moment[i] = state.beta1 * state.first_moment[i] + (1.0 - state.beta1) * g;
        state.second_moment[i] =
            state.beta2 * state.second_moment[i] + (1.0 - state.beta2) * g * g;
        const double m_hat = state.first_moment[i] / correction1;
        const double v_hat = state.second_moment[i] / correction2;
        params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
}

}  // namespace dts

#include "rupnet/optim.hpp"

#include <cmath>

namespace rupnet::train {

template <typename T>
void adam_step(ParamStore<T>& store, AdamState& state, double lr) {
    for (const auto& e : store.entries()) {
        if (e.trainable && !e.grad.all_finite()) {
            throw NumericError("non-finite gradient in parameter '" + e.name + "' at step " +
                               std::to_string(state.step + 1));
        }
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    const double b1 = state.beta1, b2 = state.beta2;
    for (auto& e : store.entries()) {
        if (!e.trainable) continue;
        for (std::size_t i = 0; i < e.value.size(); ++i) {
            const double g = e.grad[i];
            const double m = b1 * e.m[i] + (1.0 - b1) * g;
            const double v = b2 * e.v[i] + (1.0 - b2) * g * g;
            e.m[i] = static_cast<T>(m);
            e.v[i] = static_cast<T>(v);
            const double m_hat = m / c1;
            const double v_hat = v / c2;
            e.value[i] = static_cast<T>(e.value[i] - lr * m_hat / (std::sqrt(v_hat) + state.eps));
        }
        e.grad.fill(T(0));
    }
}

template void adam_step(ParamStore<float>&, AdamState&, double);
template void adam_step(ParamStore<double>&, AdamState&, double);

}  // namespace rupnet::train

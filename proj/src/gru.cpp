#include "dts/gru.hpp"

#include <sstream>

#include "dts/activations.hpp"
#include "dts/error.hpp"

namespace dts {

namespace {

void check_input_dim(const GruCellParams& params, const Vec& x, std::size_t step) {
    if (static_cast<int>(x.size()) != params.input_dim()) {
        std::ostringstream msg;
        msg << "gru_forward: step " << step << " has dim " << x.size() << ", cell expects "
            << params.input_dim();
        throw ShapeError(msg.str());
    }
}

// dL/d(pre-activation) -> accumulate dW, dU, db and the input/carry pieces.
void backprop_gate(const Vec& d_pre, const Vec& x, const Vec& h_state, const Tensor2& w,
                   const Tensor2& u, Tensor2& dw, Tensor2& du, Vec& db, Vec& d_x, Vec& d_h) {
    const int hidden = static_cast<int>(d_pre.size());
    for (int i = 0; i < hidden; ++i) {
        const double g = d_pre[static_cast<std::size_t>(i)];
        db[static_cast<std::size_t>(i)] += g;
        double* dwrow = dw.data.data() + static_cast<std::size_t>(i) * dw.cols;
        const double* wrow = w.data.data() + static_cast<std::size_t>(i) * w.cols;
        for (int j = 0; j < w.cols; ++j) {
            dwrow[j] += g * x[static_cast<std::size_t>(j)];
            d_x[static_cast<std::size_t>(j)] += g * wrow[j];
        }
        double* durow = du.data.data() + static_cast<std::size_t>(i) * du.cols;
        const double* urow = u.data.data() + static_cast<std::size_t>(i) * u.cols;
        for (int j = 0; j < u.cols; ++j) {
            durow[j] += g * h_state[static_cast<std::size_t>(j)];
            d_h[static_cast<std::size_t>(j)] += g * urow[j];
        }
    }
}

}  // namespace

GruCellParams make_gru_params(int input_dim, int hidden_dim) {
    GruCellParams p;
    p.w_update = Tensor2(hidden_dim, input_dim);
    p.w_reset = Tensor2(hidden_dim, input_dim);
    p.w_cand = Tensor2(hidden_dim, input_dim);
    p.u_update = Tensor2(hidden_dim, hidden_dim);
    p.u_reset = Tensor2(hidden_dim, hidden_dim);
    p.u_cand = Tensor2(hidden_dim, hidden_dim);
    p.b_update.assign(static_cast<std::size_t>(hidden_dim), 0.0);
    p.b_reset.assign(static_cast<std::size_t>(hidden_dim), 0.0);
    p.b_cand.assign(static_cast<std::size_t>(hidden_dim), 0.0);
    return p;
}

std::vector<Vec> gru_forward(std::span<const Vec> sequence, const GruCellParams& params,
                             bool reverse, GruCache* cache) {
    const std::size_t steps = sequence.size();
    if (steps == 0) throw ValueError("gru_forward: empty sequence");
    const int hidden = params.hidden_dim();

    if (cache) {
        cache->inputs.clear();
        cache->states.clear();
        cache->update_gate.clear();
        cache->reset_gate.clear();
        cache->candidate.clear();
    }

    std::vector<Vec> outputs(steps);
    Vec h(static_cast<std::size_t>(hidden), 0.0);
    for (std::size_t s = 0; s < steps; ++s) {
        const std::size_t pos = reverse ? steps - 1 - s : s;
        const Vec& x = sequence[pos];
        check_input_dim(params, x, pos);

        Vec z = matvec(params.w_update, x);
        Vec r = matvec(params.w_reset, x);
        {
            const Vec uz = matvec(params.u_update, h);
            const Vec ur = matvec(params.u_reset, h);
            for (int i = 0; i < hidden; ++i) {
                const std::size_t si = static_cast<std::size_t>(i);
                z[si] = sigmoid(z[si] + uz[si] + params.b_update[si]);
                r[si] = sigmoid(r[si] + ur[si] + params.b_reset[si]);
            }
        }
        Vec gated(static_cast<std::size_t>(hidden));
        for (int i = 0; i < hidden; ++i)
            gated[static_cast<std::size_t>(i)] =
                r[static_cast<std::size_t>(i)] * h[static_cast<std::size_t>(i)];
        Vec cand = matvec(params.w_cand, x);
        {
            const Vec uc = matvec(params.u_cand, gated);
            for (int i = 0; i < hidden; ++i) {
                const std::size_t si = static_cast<std::size_t>(i);
                cand[si] = std::tanh(cand[si] + uc[si] + params.b_cand[si]);
            }
        }
        Vec h_next(static_cast<std::size_t>(hidden));
        for (int i = 0; i < hidden; ++i) {
            const std::size_t si = static_cast<std::size_t>(i);
            h_next[si] = z[si] * h[si] + (1.0 - z[si]) * cand[si];
        }

        if (cache) {
            cache->inputs.push_back(x);
            cache->update_gate.push_back(z);
            cache->reset_gate.push_back(r);
            cache->candidate.push_back(cand);
            cache->states.push_back(h_next);
        }
        h = h_next;
        outputs[pos] = std::move(h_next);
    }
    return outputs;
}

std::vector<Vec> gru_backward(const GruCache& cache, const GruCellParams& params, bool reverse,
                              const std::vector<Vec>& d_states, GruCellParams& grads) {
    const std::size_t steps = cache.inputs.size();
    if (d_states.size() != steps)
        throw ShapeError("gru_backward: gradient count does not match cached steps");
    const int hidden = params.hidden_dim();
    const int input_dim = params.input_dim();

    std::vector<Vec> d_inputs(steps, Vec(static_cast<std::size_t>(input_dim), 0.0));
    Vec d_h(static_cast<std::size_t>(hidden), 0.0);  // carry into earlier scan steps

    for (std::size_t s = steps; s-- > 0;) {
        const std::size_t pos = reverse ? steps - 1 - s : s;
        const Vec& x = cache.inputs[s];
        const Vec& z = cache.update_gate[s];
        const Vec& r = cache.reset_gate[s];
        const Vec& cand = cache.candidate[s];
        // h_{t-1} in scan order; zero vector at the first scan step.
        const Vec zero(static_cast<std::size_t>(hidden), 0.0);
        const Vec& hp = (s == 0) ? zero : cache.states[s - 1];

        // Total gradient reaching h_t: external plus the carry.
        Vec dh(static_cast<std::size_t>(hidden));
        for (int i = 0; i < hidden; ++i) {
            const std::size_t si = static_cast<std::size_t>(i);
            dh[si] = d_states[pos][si] + d_h[si];
        }

        Vec d_pre_cand(static_cast<std::size_t>(hidden));
        Vec d_pre_update(static_cast<std::size_t>(hidden));
        Vec d_h_prev(static_cast<std::size_t>(hidden), 0.0);
        Vec d_gated(static_cast<std::size_t>(hidden), 0.0);
        for (int i = 0; i < hidden; ++i) {
            const std::size_t si = static_cast<std::size_t>(i);
            const double dz = dh[si] * (hp[si] - cand[si]);
            const double dcand = dh[si] * (1.0 - z[si]);
            d_h_prev[si] = dh[si] * z[si];
            d_pre_cand[si] = dcand * tanh_grad_from_output(cand[si]);
            d_pre_update[si] = dz * sigmoid_grad_from_output(z[si]);
        }

        // Candidate pre-activation feeds x, the gated state r.h_{t-1}, and
        // the candidate parameters.
        Vec gated(static_cast<std::size_t>(hidden));
        for (int i = 0; i < hidden; ++i) {
            const std::size_t si = static_cast<std::size_t>(i);
            gated[si] = r[si] * hp[si];
        }
        backprop_gate(d_pre_cand, x, gated, params.w_cand, params.u_cand, grads.w_cand,
                      grads.u_cand, grads.b_cand, d_inputs[pos], d_gated);

        Vec d_pre_reset(static_cast<std::size_t>(hidden));
        for (int i = 0; i < hidden; ++i) {
            const std::size_t si = static_cast<std::size_t>(i);
            d_h_prev[si] += d_gated[si] * r[si];
            d_pre_reset[si] = d_gated[si] * hp[si] * sigmoid_grad_from_output(r[si]);
        }

        backprop_gate(d_pre_update, x, hp, params.w_update, params.u_update, grads.w_update,
                      grads.u_update, grads.b_update, d_inputs[pos], d_h_prev);
        backprop_gate(d_pre_reset, x, hp, params.w_reset, params.u_reset, grads.w_reset,
                      grads.u_reset, grads.b_reset, d_inputs[pos], d_h_prev);

        d_h = std::move(d_h_prev);
    }
    return d_inputs;
}

BiGruParams make_bigru_params(int input_dim, int hidden_dim) {
    return {make_gru_params(input_dim, hidden_dim), make_gru_params(input_dim, hidden_dim)};
}

std::vector<Vec> bigru_forward(std::span<const Vec> sequence, const BiGruParams& params,
                               BiGruCache* cache) {
    const auto fwd =
        gru_forward(sequence, params.forward, false, cache ? &cache->forward : nullptr);
    const auto bwd =
        gru_forward(sequence, params.backward, true, cache ? &cache->backward : nullptr);
    const int hidden = params.forward.hidden_dim();
    std::vector<Vec> outputs(sequence.size(), Vec(static_cast<std::size_t>(2 * hidden)));
    for (std::size_t t = 0; t < sequence.size(); ++t) {
        for (int i = 0; i < hidden; ++i) {
            outputs[t][static_cast<std::size_t>(i)] = fwd[t][static_cast<std::size_t>(i)];
            outputs[t][static_cast<std::size_t>(hidden + i)] = bwd[t][static_cast<std::size_t>(i)];
        }
    }
    return outputs;
}

std::vector<Vec> bigru_backward(const BiGruCache& cache, const BiGruParams& params,
                                const std::vector<Vec>& d_outputs, BiGruParams& grads) {
    const int hidden = params.forward.hidden_dim();
    const std::size_t steps = d_outputs.size();
    std::vector<Vec> d_fwd(steps, Vec(static_cast<std::size_t>(hidden)));
    std::vector<Vec> d_bwd(steps, Vec(static_cast<std::size_t>(hidden)));
    for (std::size_t t = 0; t < steps; ++t) {
        for (int i = 0; i < hidden; ++i) {
            d_fwd[t][static_cast<std::size_t>(i)] = d_outputs[t][static_cast<std::size_t>(i)];
            d_bwd[t][static_cast<std::size_t>(i)] =
                d_outputs[t][static_cast<std::size_t>(hidden + i)];
        }
    }
    auto d_in_fwd = gru_backward(cache.forward, params.forward, false, d_fwd, grads.forward);
    const auto d_in_bwd = gru_backward(cache.backward, params.backward, true, d_bwd, grads.backward);
    for (std::size_t t = 0; t < steps; ++t)
        for (std::size_t j = 0; j < d_in_fwd[t].size(); ++j) d_in_fwd[t][j] += d_in_bwd[t][j];
    return d_in_fwd;
}

}  // namespace dts

#pragma once

#include <span>
#include <vector>

#include "dts/tensor.hpp"

namespace dts {

// Update/reset-gate recurrent cell. With update gate z, reset gate r and
// candidate state c:
//   z_t = sigmoid(Wz x_t + Uz h_{t-1} + bz)
//   r_t = sigmoid(Wr x_t + Ur h_{t-1} + br)
//   c_t = tanh(Wh x_t + Uh (r_t . h_{t-1}) + bh)
//   h_t = z_t . h_{t-1} + (1 - z_t) . c_t
// with h_0 = 0.
struct GruCellParams {
    Tensor2 w_update, w_reset, w_cand;  // hidden x input
    Tensor2 u_update, u_reset, u_cand;  // hidden x hidden
    Vec b_update, b_reset, b_cand;       // hidden

    int hidden_dim() const { return w_update.rows; }
    int input_dim() const { return w_update.cols; }
};

GruCellParams make_gru_params(int input_dim, int hidden_dim);

// Forward intermediates for one scan direction, stored per step.
struct GruCache {
    std::vector<Vec> inputs;      // x_t in scan order
    std::vector<Vec> states;      // h_t in scan order (h_0 excluded)
    std::vector<Vec> update_gate;
    std::vector<Vec> reset_gate;
    std::vector<Vec> candidate;
};

// Scans the sequence left-to-right (or right-to-left when reverse) and
// returns one hidden state per input position, indexed by the original
// position. Empty sequences raise ValueError.
std::vector<Vec> gru_forward(std::span<const Vec> sequence, const GruCellParams& params,
                             bool reverse, GruCache* cache = nullptr);

// Backpropagation through time for one direction. d_states is indexed by
// original position like the forward output. Parameter gradients accumulate
// into `grads`; the return value is dL/d input per original position.
std::vector<Vec> gru_backward(const GruCache& cache, const GruCellParams& params, bool reverse,
                              const std::vector<Vec>& d_states, GruCellParams& grads);

struct BiGruParams {
    GruCellParams forward;
    GruCellParams backward;
};

BiGruParams make_bigru_params(int input_dim, int hidden_dim);

struct BiGruCache {
    GruCache forward;
    GruCache backward;
};

// Output at position t is [forward state_t ; backward state_t], dimension
// 2 * hidden.
std::vector<Vec> bigru_forward(std::span<const Vec> sequence, const BiGruParams& params,
                               BiGruCache* cache = nullptr);

std::vector<Vec> bigru_backward(const BiGruCache& cache, const BiGruParams& params,
                                const std::vector<Vec>& d_outputs, BiGruParams& grads);

}  // namespace dts

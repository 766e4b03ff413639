#include "dts/model.hpp"

#include <cmath>
#include <string>

#include "dts/error.hpp"

namespace dts {

void EncoderConfig::validate() const {
    if (frame_feature_dim < 1 || word_embedding_dim < 1 || gru_hidden_dim < 1 ||
        conv_filters_per_width < 1 || common_dim < 1 || vocab_size < 1)
        throw ValueError("EncoderConfig: all dimensions must be >= 1");
    if (conv_filter_widths.empty()) throw ValueError("EncoderConfig: no conv filter widths");
    for (int w : conv_filter_widths)
        if (w < 1) throw ValueError("EncoderConfig: conv widths must be >= 1");
}

namespace {

void xavier_init(Tensor2& t, Rng& rng) {
    const double limit = std::sqrt(6.0 / (t.rows + t.cols));
    for (double& v : t.data) v = rng.uniform(-limit, limit);
}

void init_gru(GruCellParams& cell, Rng& rng) {
    xavier_init(cell.w_update, rng);
    xavier_init(cell.w_reset, rng);
    xavier_init(cell.w_cand, rng);
    xavier_init(cell.u_update, rng);
    xavier_init(cell.u_reset, rng);
    xavier_init(cell.u_cand, rng);
}

void init_conv(ConvBankParams& bank, Rng& rng) {
    for (auto& kernel : bank.kernels) xavier_init(kernel, rng);
}

ProjectionParams make_projection(int in_dim, int out_dim) {
    ProjectionParams p;
    p.linear.weight = Tensor2(out_dim, in_dim);
    p.linear.bias.assign(static_cast<std::size_t>(out_dim), 0.0);
    p.bn = BatchNormState(out_dim);
    return p;
}

ModelParameters make_shapes(const EncoderConfig& config) {
    config.validate();
    ModelParameters p;
    p.word_embedding = Tensor2(config.vocab_size, config.word_embedding_dim);
    p.text_gru = make_bigru_params(config.word_embedding_dim, config.gru_hidden_dim);
    p.visual_gru = make_bigru_params(config.frame_feature_dim, config.gru_hidden_dim);
    p.text_conv = make_conv_bank(config.gru_output_dim(), config.conv_filter_widths,
                                 config.conv_filters_per_width);
    p.visual_conv = make_conv_bank(config.gru_output_dim(), config.conv_filter_widths,
                                   config.conv_filters_per_width);
    p.visual_proj = make_projection(config.visual_feature_dim(), config.common_dim);
    p.text_proj = make_projection(config.text_feature_dim(), config.common_dim);
    p.decoder = make_projection(config.common_dim, config.vocab_size);
    return p;
}

void visit_gru(const std::string& prefix, GruCellParams& cell, const ParamVisitor& visit) {
    visit(prefix + ".w_update", cell.w_update.data);
    visit(prefix + ".w_reset", cell.w_reset.data);
    visit(prefix + ".w_cand", cell.w_cand.data);
    visit(prefix + ".u_update", cell.u_update.data);
    visit(prefix + ".u_reset", cell.u_reset.data);
    visit(prefix + ".u_cand", cell.u_cand.data);
    visit(prefix + ".b_update", cell.b_update);
    visit(prefix + ".b_reset", cell.b_reset);
    visit(prefix + ".b_cand", cell.b_cand);
}

void visit_conv(const std::string& prefix, ConvBankParams& bank, const ParamVisitor& visit) {
    for (std::size_t wi = 0; wi < bank.widths.size(); ++wi) {
        const std::string w = std::to_string(bank.widths[wi]);
        visit(prefix + ".kernel_w" + w, bank.kernels[wi].data);
        visit(prefix + ".bias_w" + w, bank.biases[wi]);
    }
}

void visit_projection(const std::string& prefix, ProjectionParams& proj,
                      const ParamVisitor& visit) {
    visit(prefix + ".weight", proj.linear.weight.data);
    visit(prefix + ".bias", proj.linear.bias);
    visit(prefix + ".bn_gamma", proj.bn.gamma);
    visit(prefix + ".bn_beta", proj.bn.beta);
}

}  // namespace

ModelParameters init_parameters(const EncoderConfig& config, Rng& rng) {
    ModelParameters p = make_shapes(config);
    for (double& v : p.word_embedding.data) v = rng.uniform(-0.1, 0.1);
    init_gru(p.text_gru.forward, rng);
    init_gru(p.text_gru.backward, rng);
    init_conv(p.text_conv, rng);
    init_gru(p.visual_gru.forward, rng);
    init_gru(p.visual_gru.backward, rng);
    init_conv(p.visual_conv, rng);
    xavier_init(p.visual_proj.linear.weight, rng);
    xavier_init(p.text_proj.linear.weight, rng);
    xavier_init(p.decoder.linear.weight, rng);
    return p;
}

ModelParameters zero_parameters(const EncoderConfig& config) {
    ModelParameters p = make_shapes(config);
    visit_trainable(p, [](std::string_view, std::span<double> values) {
        for (double& v : values) v = 0.0;
    });
    visit_buffers(p, [](std::string_view, std::span<double> values) {
        for (double& v : values) v = 0.0;
    });
    return p;
}

void visit_trainable(ModelParameters& params, const ParamVisitor& visit) {
    visit("word_embedding", params.word_embedding.data);
    visit_gru("text_gru.fwd", params.text_gru.forward, visit);
    visit_gru("text_gru.bwd", params.text_gru.backward, visit);
    visit_conv("text_conv", params.text_conv, visit);
    visit_gru("visual_gru.fwd", params.visual_gru.forward, visit);
    visit_gru("visual_gru.bwd", params.visual_gru.backward, visit);
    visit_conv("visual_conv", params.visual_conv, visit);
    visit_projection("visual_proj", params.visual_proj, visit);
    visit_projection("text_proj", params.text_proj, visit);
    visit_projection("decoder", params.decoder, visit);
}

void visit_buffers(ModelParameters& params, const ParamVisitor& visit) {
    visit("visual_proj.bn_running_mean", params.visual_proj.bn.running_mean);
    visit("visual_proj.bn_running_var", params.visual_proj.bn.running_var);
    visit("text_proj.bn_running_mean", params.text_proj.bn.running_mean);
    visit("text_proj.bn_running_var", params.text_proj.bn.running_var);
    visit("decoder.bn_running_mean", params.decoder.bn.running_mean);
    visit("decoder.bn_running_var", params.decoder.bn.running_var);
}

// Const walks reuse the mutable traversal; the adapter never writes through.
void visit_trainable(const ModelParameters& params, const ConstParamVisitor& visit) {
    visit_trainable(const_cast<ModelParameters&>(params),
                    [&visit](std::string_view name, std::span<double> values) {
                        visit(name, std::span<const double>(values.data(), values.size()));
                    });
}

void visit_buffers(const ModelParameters& params, const ConstParamVisitor& visit) {
    visit_buffers(const_cast<ModelParameters&>(params),
                  [&visit](std::string_view name, std::span<double> values) {
                      visit(name, std::span<const double>(values.data(), values.size()));
                  });
}

std::size_t trainable_count(const EncoderConfig& config) {
    ModelParameters p = make_shapes(config);
    std::size_t total = 0;
    visit_trainable(p, [&total](std::string_view, std::span<double> values) {
        total += values.size();
    });
    return total;
}

void set_batchnorm_mode(ModelParameters& params, BatchNormMode mode) {
    params.visual_proj.bn.mode = mode;
    params.text_proj.bn.mode = mode;
    params.decoder.bn.mode = mode;
}

}  // namespace dts

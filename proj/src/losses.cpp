#include "dts/losses.hpp"

#include <cmath>
#include <sstream>

#include "dts/error.hpp"

namespace dts {

void LossHyperParams::validate() const {
    if (margin < 0.0) throw ValueError("LossHyperParams: margin must be >= 0");
    if (lambda < 0.0 || lambda > 1.0) throw ValueError("LossHyperParams: lambda must be in [0,1]");
    if (prediction_clip <= 0.0 || prediction_clip >= 0.1)
        throw ValueError("LossHyperParams: prediction_clip must be in (0, 0.1)");
}

LabelVector make_label_vector(std::span<const std::uint8_t> bits) {
    LabelVector labels;
    labels.bits.assign(bits.begin(), bits.end());
    for (std::uint8_t b : labels.bits) {
        if (b > 1) throw ValueError("make_label_vector: entries must be 0 or 1");
        labels.positive_count += b;
    }
    return labels;
}

namespace {

// Cosine values plus what the backward pass needs.
struct CosineTable {
    Tensor2 sim;      // sim(i, j) = cos(video_i, text_j)
    Vec video_norms;
    Vec text_norms;
};

CosineTable cosine_table(const Tensor2& video_emb, const Tensor2& text_emb) {
    CosineTable table;
    table.sim = Tensor2(video_emb.rows, text_emb.rows);
    table.video_norms.resize(static_cast<std::size_t>(video_emb.rows));
    table.text_norms.resize(static_cast<std::size_t>(text_emb.rows));
    for (int i = 0; i < video_emb.rows; ++i) {
        table.video_norms[static_cast<std::size_t>(i)] = l2_norm(video_emb.row(i));
        if (table.video_norms[static_cast<std::size_t>(i)] == 0.0)
            throw ValueError("ranking_loss: zero-norm video embedding");
    }
    for (int j = 0; j < text_emb.rows; ++j) {
        table.text_norms[static_cast<std::size_t>(j)] = l2_norm(text_emb.row(j));
        if (table.text_norms[static_cast<std::size_t>(j)] == 0.0)
            throw ValueError("ranking_loss: zero-norm text embedding");
    }
    for (int i = 0; i < video_emb.rows; ++i)
        for (int j = 0; j < text_emb.rows; ++j)
            table.sim.at(i, j) = dot(video_emb.row(i), text_emb.row(j)) /
                                 (table.video_norms[static_cast<std::size_t>(i)] *
                                  table.text_norms[static_cast<std::size_t>(j)]);
    return table;
}

// Adds weight * d cos(video_i, text_j) to the two gradient rows.
void add_cosine_grad(const Tensor2& video_emb, const Tensor2& text_emb, const CosineTable& table,
                     int i, int j, double weight, Tensor2& d_video, Tensor2& d_text) {
    const double nv = table.video_norms[static_cast<std::size_t>(i)];
    const double nt = table.text_norms[static_cast<std::size_t>(j)];
    const double cos_ij = table.sim.at(i, j);
    const auto v = video_emb.row(i);
    const auto t = text_emb.row(j);
    auto dv = d_video.row(i);
    auto dt = d_text.row(j);
    for (std::size_t k = 0; k < v.size(); ++k) {
        dv[k] += weight * (t[k] / (nv * nt) - cos_ij * v[k] / (nv * nv));
        dt[k] += weight * (v[k] / (nv * nt) - cos_ij * t[k] / (nt * nt));
    }
}

double clip_prob(double p, double clip) {
    if (p < clip) return clip;
    if (p > 1.0 - clip) return 1.0 - clip;
    return p;
}

void check_probs(std::span<const double> probs, const LabelVector& labels, const char* op) {
    if (probs.size() != labels.bits.size()) {
        std::ostringstream msg;
        msg << op << ": " << probs.size() << " probabilities vs " << labels.bits.size()
            << " labels";
        throw ShapeError(msg.str());
    }
}

}  // namespace

RankingLossResult ranking_loss(const Tensor2& video_emb, const Tensor2& text_emb, double margin,
                               std::span<const int> group_ids, bool mean_reduction) {
    if (video_emb.rows != text_emb.rows || video_emb.cols != text_emb.cols) {
        std::ostringstream msg;
        msg << "ranking_loss: embedding batches differ (" << video_emb.rows << "x"
            << video_emb.cols << " vs " << text_emb.rows << "x" << text_emb.cols << ")";
        throw ShapeError(msg.str());
    }
    const int batch = video_emb.rows;
    if (batch < 2) throw ValueError("ranking_loss: batch of 1 has no negatives");
    if (!group_ids.empty() && static_cast<int>(group_ids.size()) != batch)
        throw ShapeError("ranking_loss: group_ids length does not match batch");

    auto group = [&group_ids](int i) {
        return group_ids.empty() ? i : group_ids[static_cast<std::size_t>(i)];
    };

    const CosineTable table = cosine_table(video_emb, text_emb);
    RankingLossResult result;
    result.d_video = Tensor2(batch, video_emb.cols);
    result.d_text = Tensor2(batch, text_emb.cols);

    const double pair_weight = mean_reduction ? 1.0 / batch : 1.0;
    for (int i = 0; i < batch; ++i) {
        int hardest_video = -1;  // argmax_j sim(video_j, text_i), j in another group
        int hardest_text = -1;   // argmax_j sim(video_i, text_j)
        for (int j = 0; j < batch; ++j) {
            if (group(j) == group(i)) continue;
            if (hardest_video < 0 || table.sim.at(j, i) > table.sim.at(hardest_video, i))
                hardest_video = j;
            if (hardest_text < 0 || table.sim.at(i, j) > table.sim.at(i, hardest_text))
                hardest_text = j;
        }
        if (hardest_video < 0) {
            std::ostringstream msg;
            msg << "ranking_loss: pair " << i << " has no negatives in batch";
            throw ValueError(msg.str());
        }

        const double positive = table.sim.at(i, i);
        const double video_hinge = margin + table.sim.at(hardest_video, i) - positive;
        const double text_hinge = margin + table.sim.at(i, hardest_text) - positive;
        if (video_hinge > 0.0) {
            result.loss += pair_weight * video_hinge;
            add_cosine_grad(video_emb, text_emb, table, hardest_video, i, pair_weight,
                            result.d_video, result.d_text);
            add_cosine_grad(video_emb, text_emb, table, i, i, -pair_weight, result.d_video,
                            result.d_text);
        }
        if (text_hinge > 0.0) {
            result.loss += pair_weight * text_hinge;
            add_cosine_grad(video_emb, text_emb, table, i, hardest_text, pair_weight,
                            result.d_video, result.d_text);
            add_cosine_grad(video_emb, text_emb, table, i, i, -pair_weight, result.d_video,
                            result.d_text);
        }
    }
    return result;
}

Vec bce_per_class(std::span<const double> probs, const LabelVector& labels, double clip) {
    check_probs(probs, labels, "bce_per_class");
    Vec losses(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = clip_prob(probs[i], clip);
        losses[i] = labels.bits[i] ? -std::log(p) : -std::log(1.0 - p);
    }
    return losses;
}

namespace {

ClassSensitiveResult weighted_bce(std::span<const double> probs, const LabelVector& labels,
                                  double positive_weight, double negative_weight, double clip) {
    ClassSensitiveResult result;
    result.d_logits.assign(probs.size(), 0.0);
    const Vec losses = bce_per_class(probs, labels, clip);
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double w = labels.bits[i] ? positive_weight : negative_weight;
        if (w == 0.0) continue;
        result.loss += w * losses[i];
        // d BCE / d logit = p - y through the sigmoid; clipped probabilities
        // sit on a flat section of the clipped loss.
        const bool clipped = probs[i] < clip || probs[i] > 1.0 - clip;
        if (!clipped)
            result.d_logits[i] = w * (probs[i] - static_cast<double>(labels.bits[i]));
    }
    return result;
}

}  // namespace

ClassSensitiveResult class_sensitive_loss(std::span<const double> probs, const LabelVector& labels,
                                          double lambda, double clip) {
    check_probs(probs, labels, "class_sensitive_loss");
    if (lambda < 0.0 || lambda > 1.0)
        throw ValueError("class_sensitive_loss: lambda must be in [0,1]");
    const int positives = labels.positive_count;
    const int negatives = labels.size() - positives;
    const double positive_weight = positives > 0 ? lambda / positives : 0.0;
    const double negative_weight = negatives > 0 ? (1.0 - lambda) / negatives : 0.0;
    return weighted_bce(probs, labels, positive_weight, negative_weight, clip);
}

ClassSensitiveResult plain_bce_loss(std::span<const double> probs, const LabelVector& labels,
                                    double clip) {
    check_probs(probs, labels, "plain_bce_loss");
    const double w = 1.0 / static_cast<double>(labels.size());
    return weighted_bce(probs, labels, w, w, clip);
}

double combined_loss(double matching, double classification) {
    if (!std::isfinite(matching) || !std::isfinite(classification))
        throw ValueError("combined_loss: non-finite component");
    return matching + classification;
}

}  // namespace dts

#include "artdream/artnet/train.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace artdream::artnet {

void TrainConfig::validate() const {
    if (epochs == 0) throw ValidationError("train config: epochs must be positive");
    if (batch_size == 0) throw ValidationError("train config: batch size must be positive");
    if (!(learning_rate > 0.0)) throw ValidationError("train config: learning rate must be positive");
    if (!(momentum > 0.0 && momentum < 1.0)) throw ValidationError("train config: momentum must lie in (0, 1)");
    if (!seed) throw ValidationError("train config: a seed is required");
}

TrainResult train(const ModelSpec& spec, std::span<const LabeledImage> data, const LabelTree& labels,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
    config.validate();
    return train(Model<float>::random(spec, *config.seed), data, labels, config, on_epoch);
}

TrainResult train(Model<float> model, std::span<const LabeledImage> data, const LabelTree& labels,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
    config.validate();
    if (data.empty()) throw ValidationError("train: empty dataset");
    if (labels.leaf_count() != model.spec().num_classes) {
        throw ValidationError("train: label tree has " + std::to_string(labels.leaf_count()) +
                              " leaves but the classifier has " + std::to_string(model.spec().num_classes) +
                              " classes");
    }
    std::vector<std::size_t> targets;
    targets.reserve(data.size());
    for (const auto& sample : data) targets.push_back(labels.leaf_index(sample.label));

    // Separate stream from the initializer so shuffling does not depend on model size.
    std::mt19937_64 rng(*config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    auto& weights = model.mutable_weights();
    auto params = weights.tensors();
    std::vector<std::vector<float>> velocity;
    for (const auto* p : params) velocity.emplace_back(p->size(), 0.0f);

    const auto lr = static_cast<float>(config.learning_rate);
    const auto mu = static_cast<float>(config.momentum);

    TrainResult result;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            std::vector<std::vector<float>> grad_sum;
            for (const auto* p : params) grad_sum.emplace_back(p->size(), 0.0f);
            // samples are reduced in batch order, so results do not depend on scheduling
            for (std::size_t b = start; b < stop; ++b) {
                const std::size_t idx = order[b];
                auto lg = model.loss_and_gradients(data[idx].image, targets[idx]);
                loss_sum += lg.loss;
                const auto best = static_cast<std::size_t>(
                    std::max_element(lg.probabilities.begin(), lg.probabilities.end()) - lg.probabilities.begin());
                if (best == targets[idx]) ++correct;
                const auto grads = lg.gradients.tensors();
                for (std::size_t t = 0; t < grads.size(); ++t) {
                    const auto g = grads[t]->data();
                    auto& acc = grad_sum[t];
                    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
                }
            }
            const float inv = 1.0f / static_cast<float>(stop - start);
            for (std::size_t t = 0; t < params.size(); ++t) {
                auto w = params[t]->data();
                auto& v = velocity[t];
                const auto& g = grad_sum[t];
                for (std::size_t i = 0; i < w.size(); ++i) {
                    v[i] = mu * v[i] - lr * g[i] * inv;
                    w[i] += v[i];
                }
                params[t]->check_finite("training update");
            }
        }
        const double mean_loss = loss_sum / static_cast<double>(data.size());
        const double accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
        result.loss_curve.push_back(mean_loss);
        result.accuracy_curve.push_back(accuracy);
        if (on_epoch && !on_epoch(epoch, mean_loss, accuracy, model)) break;
    }
    result.weights = model.weights();
    return result;
}

double evaluate_accuracy(const Model<float>& model, std::span<const LabeledImage> data, const LabelTree& labels) {
    if (data.empty()) throw ValidationError("evaluate_accuracy: empty dataset");
    std::size_t correct = 0;
    for (const auto& sample : data) {
        const auto probs = model.classify(sample.image);
        const auto best =
            static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
        if (best == labels.leaf_index(sample.label)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace artdream::artnet

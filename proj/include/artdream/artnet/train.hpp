#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "artdream/artnet/dataset.hpp"
#include "artdream/artnet/model.hpp"

namespace artdream::artnet {

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 16;
    double learning_rate = 0.05;
    double momentum = 0.9;
    std::optional<std::uint64_t> seed;  // required

    void validate() const;
};

struct LabeledImage {
    Tensor image;
    std::string label;
};

struct TrainResult {
    Weights<float> weights;
    std::vector<double> loss_curve;      // mean per-sample loss of each epoch
    std::vector<double> accuracy_curve;  // running training accuracy of each epoch
};

// Called after every epoch with (epoch, mean loss, running accuracy, model);
// returning false stops training early.
using EpochCallback = std::function<bool(std::size_t, double, double, const Model<float>&)>;

// Minibatch SGD with momentum on softmax cross-entropy over the label tree's
// leaves. Initial weights come from Model::random(spec, seed).
TrainResult train(const ModelSpec& spec, std::span<const LabeledImage> data, const LabelTree& labels,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

TrainResult train(Model<float> initial, std::span<const LabeledImage> data, const LabelTree& labels,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

// Fraction of samples whose arg-max class equals their label.
double evaluate_accuracy(const Model<float>& model, std::span<const LabeledImage> data, const LabelTree& labels);

}  // namespace artdream::artnet

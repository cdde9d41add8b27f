#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "naaloss/adam.hpp"
#include "naaloss/checkpoint.hpp"
#include "naaloss/loss.hpp"
#include "naaloss/synth.hpp"

namespace naaloss {

enum class Regime { pretrain, finetune, scratch };

struct TrainConfig {
    Regime regime = Regime::pretrain;
    int epochs = 50;  // pretrain 50, finetune 20, scratch 70 by convention
    int batch_size = 8;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    ArtifactOption option = ArtifactOption::beta;
    LossWeights weights{0.1, 0.1};  // ignored for pretrain
    DistanceSpec distance{};
    std::filesystem::path checkpoint_in;  // required for finetune
    bool fresh_moments = false;           // opt out of "past momentum loaded"
    std::optional<double> lr_override;    // replaces a restored state's lr
    double validation_fraction = 0.1;
};

struct EpochLogRow {
    int epoch = 0;
    std::string split;  // "train" | "val"
    double l_estim = 0.0;
    double l_deatf = 0.0;
    double l_ignor = 0.0;
    double l_naa = 0.0;
};

struct TrainResult {
    std::filesystem::path best_checkpoint;
    std::filesystem::path final_checkpoint;
    std::vector<EpochLogRow> log;
    int best_epoch = 0;
};

struct DatasetSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
};

// Deterministic shuffle, then the last fraction becomes validation.
inline DatasetSplit split_dataset(std::size_t n, double fraction, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("train: empty dataset");
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    detail::seeded_shuffle(order, detail::sub_seed(seed, 0x5b17));
    const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction));
    DatasetSplit split;
    split.train.assign(order.begin(), order.end() - static_cast<long>(n_val));
    split.val.assign(order.end() - static_cast<long>(n_val), order.end());
    if (split.train.empty())
        throw std::invalid_argument("train: validation fraction leaves no training data");
    return split;
}

namespace detail {

struct LossComponents {
    double l_estim = 0.0, l_deatf = 0.0, l_ignor = 0.0, l_naa = 0.0;
    void add(const NaaLossResult& r) {
        l_estim += r.l_estim;
        l_deatf += r.l_deatf;
        l_ignor += r.l_ignor;
        l_naa += r.value;
    }
    void scale(double s) {
        l_estim *= s;
        l_deatf *= s;
        l_ignor *= s;
        l_naa *= s;
    }
};

inline LossComponents evaluate_losses(const MaskModelParams& params,
                                      const std::vector<TrainTriple>& triples,
                                      const std::vector<std::size_t>& idxs,
                                      ArtifactOption option, const LossWeights& weights,
                                      const DistanceSpec& distance) {
    LossComponents acc;
    for (std::size_t idx : idxs) {
        const TrainTriple& tr = triples[idx];
        acc.add(naaloss_value_and_grad(params, tr.x, tr.y, tr.z, option, weights, distance));
    }
    if (!idxs.empty()) acc.scale(1.0 / static_cast<double>(idxs.size()));
    return acc;
}

inline void scale_gradients(ParamGradients& g, double s) {
    for (LayerTensors& lt : g) {
        for (double& v : lt.w.data) v *= s;
        for (double& v : lt.b) v *= s;
    }
}

}  // namespace detail

// Runs one training regime. pretrain optimizes the estimation loss only
// (weights forced to zero); finetune restores parameters and Adam moments
// from checkpoint_in; scratch starts fresh with the configured weights.
// Epoch 0 rows log the initial model before any update. The best-validation
// checkpoint and the final state are both written under out_dir.
inline TrainResult train(const TrainConfig& cfg, const ModelConfig& model_cfg,
                         const std::vector<TrainTriple>& dataset,
                         const std::filesystem::path& out_dir) {
    if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
    if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be positive");
    if (cfg.epochs < 0) throw std::invalid_argument("train: epochs must be nonnegative");

    LossWeights weights = cfg.weights;
    if (cfg.regime == Regime::pretrain) weights = LossWeights{0.0, 0.0};
    validate_weights(weights);

    MaskModelParams params;
    AdamState adam;
    if (cfg.regime == Regime::finetune) {
        if (cfg.checkpoint_in.empty())
            throw std::invalid_argument("train: finetune requires checkpoint_in");
        Checkpoint ck = load_checkpoint(cfg.checkpoint_in);
        params = std::move(ck.params);
        if (ck.adam.has_value()) {
            adam = std::move(*ck.adam);
            if (cfg.lr_override.has_value()) adam.lr = *cfg.lr_override;
        } else if (cfg.fresh_moments) {
            adam = init_adam_state(params, cfg.lr_override.value_or(cfg.lr));
        } else {
            throw std::runtime_error(
                "train: checkpoint has no optimizer state (missing momentum); pass "
                "fresh_moments to start with new moments");
        }
    } else {
        params = init_params(model_cfg);
        adam = init_adam_state(params, cfg.lr_override.value_or(cfg.lr));
    }

    const DatasetSplit split = split_dataset(dataset.size(), cfg.validation_fraction, cfg.seed);

    TrainResult result;
    auto log_eval = [&](int epoch, const MaskModelParams& p) -> double {
        const auto tr = detail::evaluate_losses(p, dataset, split.train, cfg.option, weights,
                                                cfg.distance);
        result.log.push_back({epoch, "train", tr.l_estim, tr.l_deatf, tr.l_ignor, tr.l_naa});
        double select_value = tr.l_naa;
        if (!split.val.empty()) {
            const auto va = detail::evaluate_losses(p, dataset, split.val, cfg.option, weights,
                                                    cfg.distance);
            result.log.push_back({epoch, "val", va.l_estim, va.l_deatf, va.l_ignor, va.l_naa});
            select_value = va.l_naa;
        }
        return select_value;
    };

    double best_value = log_eval(0, params);
    MaskModelParams best_params = params;
    AdamState best_adam = adam;
    result.best_epoch = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<std::size_t> order = split.train;
        detail::seeded_shuffle(order, detail::sub_seed(cfg.seed,
                                                       0xe0c000ull + static_cast<std::uint64_t>(epoch)));
        detail::LossComponents epoch_acc;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            ParamGradients batch_grads = zero_gradients(params);
            for (std::size_t k = start; k < stop; ++k) {
                const TrainTriple& tr = dataset[order[k]];
                NaaLossResult r = naaloss_value_and_grad(params, tr.x, tr.y, tr.z, cfg.option,
                                                         weights, cfg.distance);
                if (!std::isfinite(r.value))
                    throw std::runtime_error("train: non-finite loss at epoch " +
                                             std::to_string(epoch));
                epoch_acc.add(r);
                detail::accumulate(batch_grads, r.grads);
            }
            detail::scale_gradients(batch_grads, 1.0 / static_cast<double>(stop - start));
            auto [new_params, new_adam] = adam_step(params, batch_grads, adam);
            params = std::move(new_params);
            adam = std::move(new_adam);
        }
        epoch_acc.scale(1.0 / static_cast<double>(order.size()));
        result.log.push_back(
            {epoch, "train", epoch_acc.l_estim, epoch_acc.l_deatf, epoch_acc.l_ignor, epoch_acc.l_naa});

        double select_value = epoch_acc.l_naa;
        if (!split.val.empty()) {
            const auto va = detail::evaluate_losses(params, dataset, split.val, cfg.option,
                                                    weights, cfg.distance);
            result.log.push_back({epoch, "val", va.l_estim, va.l_deatf, va.l_ignor, va.l_naa});
            select_value = va.l_naa;
        }
        if (!std::isfinite(select_value))
            throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
        if (select_value < best_value) {
            best_value = select_value;
            best_params = params;
            best_adam = adam;
            result.best_epoch = epoch;
        }
    }

    std::filesystem::create_directories(out_dir);
    result.best_checkpoint = out_dir / "best.ckpt";
    result.final_checkpoint = out_dir / "final.ckpt";
    save_checkpoint(best_params, &best_adam, result.best_checkpoint);
    save_checkpoint(params, &adam, result.final_checkpoint);
    return result;
}

}  // namespace naaloss

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "naaloss/loss.hpp"
#include "naaloss/mask_model.hpp"
#include "naaloss/synth.hpp"
#include "naaloss/trainer.hpp"

namespace naaloss {

// Flat `key = value` experiment configuration with `#` comments. Every key
// has a default; unknown keys are rejected. See the README for the full
// key reference.
struct ExperimentConfig {
    // corpus
    std::string clean_source = "synth:speechlike";
    std::string noise_source = "synth:whitenoise";
    int sample_rate_hz = 16000;
    double duration_s = 1.0;
    std::size_t count = 100;
    std::size_t eval_count = 20;
    std::vector<double> snr_list{0.0, 5.0, 10.0, 15.0};
    std::uint64_t seed = 1234;

    // stft / model
    int fft_size = 512;
    int hop_size = 256;
    WindowKind window = WindowKind::hann;
    int context_radius = 1;
    std::vector<int> hidden_sizes{64};
    std::uint64_t model_seed = 7;

    // loss
    ArtifactOption artifact_option = ArtifactOption::beta;
    double alpha = 0.1;
    double beta = 0.1;
    DistanceMetric distance_metric = DistanceMetric::l2_squared_mean;
    DistanceDomain distance_domain = DistanceDomain::time_waveform;

    // training
    int pretrain_epochs = 50;
    int finetune_epochs = 20;
    int scratch_epochs = 70;
    int batch_size = 8;
    double lr = 1e-3;
    std::optional<double> finetune_lr;  // overrides the restored state's lr
    double validation_fraction = 0.1;

    std::string work_dir = "runs/exp";

    ModelConfig model_config() const {
        ModelConfig mc;
        mc.stft = StftConfig{fft_size, hop_size, window};
        mc.sample_rate_hz = sample_rate_hz;
        mc.context_radius = context_radius;
        mc.hidden_sizes = hidden_sizes;
        mc.seed = model_seed;
        return mc;
    }
    DistanceSpec distance_spec() const { return DistanceSpec{distance_metric, distance_domain}; }
    LossWeights loss_weights() const { return LossWeights{alpha, beta}; }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    std::size_t b = s.find_last_not_of(" \t");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (...) {
        throw std::runtime_error("config: bad number for '" + key + "': " + v);
    }
}

inline long long parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long d = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (...) {
        throw std::runtime_error("config: bad integer for '" + key + "': " + v);
    }
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> items;
    std::string item;
    std::stringstream ss(v);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path.string());

    ExperimentConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: expected 'key = value' at " + path.string() + ":" +
                                     std::to_string(line_no));
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));

        if (key == "clean_source") cfg.clean_source = value;
        else if (key == "noise_source") cfg.noise_source = value;
        else if (key == "sample_rate_hz") cfg.sample_rate_hz = static_cast<int>(detail::parse_int(key, value));
        else if (key == "duration_s") cfg.duration_s = detail::parse_double(key, value);
        else if (key == "count") cfg.count = static_cast<std::size_t>(detail::parse_int(key, value));
        else if (key == "eval_count") cfg.eval_count = static_cast<std::size_t>(detail::parse_int(key, value));
        else if (key == "snr_list") {
            cfg.snr_list.clear();
            for (const auto& item : detail::split_list(value))
                cfg.snr_list.push_back(detail::parse_double(key, item));
        } else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(detail::parse_int(key, value));
        else if (key == "fft_size") cfg.fft_size = static_cast<int>(detail::parse_int(key, value));
        else if (key == "hop_size") cfg.hop_size = static_cast<int>(detail::parse_int(key, value));
        else if (key == "window") {
            if (value == "hann") cfg.window = WindowKind::hann;
            else if (value == "rectangular") cfg.window = WindowKind::rectangular;
            else throw std::runtime_error("config: unknown window '" + value + "'");
        } else if (key == "context_radius") cfg.context_radius = static_cast<int>(detail::parse_int(key, value));
        else if (key == "hidden_sizes") {
            cfg.hidden_sizes.clear();
            for (const auto& item : detail::split_list(value))
                cfg.hidden_sizes.push_back(static_cast<int>(detail::parse_int(key, item)));
        } else if (key == "model_seed") cfg.model_seed = static_cast<std::uint64_t>(detail::parse_int(key, value));
        else if (key == "artifact_option") {
            if (value == "alpha") cfg.artifact_option = ArtifactOption::alpha;
            else if (value == "beta") cfg.artifact_option = ArtifactOption::beta;
            else throw std::runtime_error("config: unknown artifact_option '" + value + "'");
        } else if (key == "alpha") cfg.alpha = detail::parse_double(key, value);
        else if (key == "beta") cfg.beta = detail::parse_double(key, value);
        else if (key == "distance_metric") {
            if (value == "l1") cfg.distance_metric = DistanceMetric::l1;
            else if (value == "l2") cfg.distance_metric = DistanceMetric::l2_squared_mean;
            else throw std::runtime_error("config: unknown distance_metric '" + value + "'");
        } else if (key == "distance_domain") {
            if (value == "time") cfg.distance_domain = DistanceDomain::time_waveform;
            else if (value == "stft_magnitude") cfg.distance_domain = DistanceDomain::stft_magnitude;
            else throw std::runtime_error("config: unknown distance_domain '" + value + "'");
        } else if (key == "pretrain_epochs") cfg.pretrain_epochs = static_cast<int>(detail::parse_int(key, value));
        else if (key == "finetune_epochs") cfg.finetune_epochs = static_cast<int>(detail::parse_int(key, value));
        else if (key == "scratch_epochs") cfg.scratch_epochs = static_cast<int>(detail::parse_int(key, value));
        else if (key == "batch_size") cfg.batch_size = static_cast<int>(detail::parse_int(key, value));
        else if (key == "lr") cfg.lr = detail::parse_double(key, value);
        else if (key == "finetune_lr") cfg.finetune_lr = detail::parse_double(key, value);
        else if (key == "validation_fraction") cfg.validation_fraction = detail::parse_double(key, value);
        else if (key == "work_dir") cfg.work_dir = value;
        else throw std::runtime_error("config: unknown key '" + key + "' at " + path.string() + ":" +
                                      std::to_string(line_no));
    }
    return cfg;
}

}  // namespace naaloss

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "naaloss/experiment.hpp"

namespace fs = std::filesystem;
using namespace naaloss;

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
};

ExperimentConfig load_config(const CommonOpts& opts) {
    if (opts.config_path.empty()) throw std::runtime_error("config: --config is required");
    ExperimentConfig cfg = parse_experiment_config(opts.config_path);
    if (opts.seed.has_value()) cfg.seed = *opts.seed;
    return cfg;
}

std::vector<TrainTriple> synthesize_from_config(const ExperimentConfig& cfg) {
    return synthesize_dataset(parse_source(cfg.clean_source), parse_source(cfg.noise_source),
                              cfg.snr_list, cfg.count, cfg.seed, cfg.sample_rate_hz,
                              cfg.duration_s);
}

TrainConfig train_config_from(const ExperimentConfig& cfg, Regime regime) {
    TrainConfig tc;
    tc.regime = regime;
    tc.epochs = regime == Regime::pretrain    ? cfg.pretrain_epochs
                : regime == Regime::finetune  ? cfg.finetune_epochs
                                              : cfg.scratch_epochs;
    tc.batch_size = cfg.batch_size;
    tc.lr = cfg.lr;
    tc.seed = cfg.seed;
    tc.option = cfg.artifact_option;
    tc.weights = cfg.loss_weights();
    tc.distance = cfg.distance_spec();
    tc.validation_fraction = cfg.validation_fraction;
    return tc;
}

int run_training(const ExperimentConfig& cfg, TrainConfig tc, const fs::path& data_dir,
                 const fs::path& out_dir) {
    const auto dataset = load_dataset(data_dir);
    const TrainResult result = train(tc, cfg.model_config(), dataset, out_dir);
    write_train_log(result.log, out_dir / "train_log.csv");
    std::cout << "best checkpoint: " << result.best_checkpoint.string() << " (epoch "
              << result.best_epoch << ")\n"
              << "final checkpoint: " << result.final_checkpoint.string() << "\n"
              << "training log: " << (out_dir / "train_log.csv").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Speech-enhancement training toolkit with a noise- and artifact-aware loss"};
    app.require_subcommand(1);

    CommonOpts common;

    // synth
    auto* synth = app.add_subcommand("synth", "Synthesize a triple dataset (x, y, z WAVs + manifest)");
    std::string synth_out;
    synth->add_option("--config", common.config_path, "experiment config file")->required();
    synth->add_option("--out", synth_out, "output dataset directory")->required();
    synth->add_option("--seed", common.seed, "seed override");

    // run-matrix
    auto* matrix = app.add_subcommand("run-matrix", "Train org/pre/scr model combinations and evaluate");
    std::string matrix_data, matrix_out;
    matrix->add_option("--config", common.config_path, "experiment config file")->required();
    matrix->add_option("--data", matrix_data, "dataset directory (from synth)")->required();
    matrix->add_option("--out", matrix_out, "output directory")->required();
    matrix->add_option("--seed", common.seed, "seed override");

    // pretrain / finetune / train-scratch
    std::string train_data, train_out, train_ckpt;
    bool fresh_moments = false;
    std::optional<double> lr_flag;
    auto* pretrain = app.add_subcommand("pretrain", "Train with the estimation loss only");
    auto* finetune = app.add_subcommand("finetune", "Fine-tune with NAaLoss from a checkpoint");
    auto* scratch = app.add_subcommand("train-scratch", "Train with NAaLoss from fresh parameters");
    for (auto* cmd : {pretrain, finetune, scratch}) {
        cmd->add_option("--config", common.config_path, "experiment config file")->required();
        cmd->add_option("--data", train_data, "dataset directory")->required();
        cmd->add_option("--out", train_out, "output directory")->required();
        cmd->add_option("--seed", common.seed, "seed override");
    }
    finetune->add_option("--checkpoint", train_ckpt, "pretrained checkpoint")->required();
    finetune->add_flag("--fresh-moments", fresh_moments, "start with fresh Adam moments");
    finetune->add_option("--lr", lr_flag, "override the restored learning rate");

    // enhance
    auto* enhance = app.add_subcommand("enhance", "Run the enhancer over one WAV");
    std::string enh_ckpt, enh_in, enh_out;
    enhance->add_option("--checkpoint", enh_ckpt, "model checkpoint")->required();
    enhance->add_option("--in", enh_in, "input WAV")->required();
    enhance->add_option("--out-wav", enh_out, "output WAV")->required();

    // decompose
    auto* decompose_cmd = app.add_subcommand("decompose", "Export artifact decomposition for a triple");
    std::string dec_ckpt, dec_x, dec_y, dec_z, dec_opt = "beta", dec_out;
    bool dec_identity = false;
    decompose_cmd->add_option("--checkpoint", dec_ckpt, "model checkpoint");
    decompose_cmd->add_flag("--identity", dec_identity, "use the exact identity enhancer");
    decompose_cmd->add_option("--x", dec_x, "clean WAV")->required();
    decompose_cmd->add_option("--y", dec_y, "noise WAV")->required();
    decompose_cmd->add_option("--z", dec_z, "noisy WAV")->required();
    decompose_cmd->add_option("--option", dec_opt, "artifact option: alpha | beta");
    decompose_cmd->add_option("--out", dec_out, "output directory")->required();
    decompose_cmd->add_option("--config", common.config_path,
                              "experiment config (STFT for --identity exports)");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Per-clip metrics over a dataset");
    std::string eval_ckpt, eval_data, eval_out, eval_opt = "beta";
    std::size_t eval_count = 0;
    evaluate->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required();
    evaluate->add_option("--data", eval_data, "dataset directory")->required();
    evaluate->add_option("--out", eval_out, "output CSV")->required();
    evaluate->add_option("--option", eval_opt, "artifact option: alpha | beta");
    evaluate->add_option("--count", eval_count, "evaluate only the first N triples");

    // werr
    auto* werr_cmd = app.add_subcommand("werr", "Relative WER reduction from a WER table");
    std::string werr_in, werr_out;
    werr_cmd->add_option("--in", werr_in, "input CSV: system_label,am_label,wer_percent")->required();
    werr_cmd->add_option("--out", werr_out, "output CSV")->required();

    // report
    auto* report = app.add_subcommand("report", "Render a matrix CSV as a text table");
    std::string report_matrix, report_out;
    report->add_option("--matrix", report_matrix, "matrix CSV from run-matrix")->required();
    report->add_option("--out", report_out, "output text file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "ERROR: usage: " << e.what() << "\n";
        return 1;
    }

    try {
        if (synth->parsed()) {
            const ExperimentConfig cfg = load_config(common);
            const auto triples = synthesize_from_config(cfg);
            write_dataset(triples, synth_out, cfg.seed);
            std::cout << "wrote " << triples.size() << " triples to " << synth_out << "\n";
        } else if (matrix->parsed()) {
            const ExperimentConfig cfg = load_config(common);
            const auto dataset = load_dataset(matrix_data);
            const ExperimentMatrixResult result = run_matrix(cfg, dataset, matrix_out);
            write_matrix_csv(result, fs::path(matrix_out) / "matrix.csv");
            const std::string table = render_matrix_table(result);
            std::ofstream(fs::path(matrix_out) / "matrix.txt") << table;
            std::cout << table;
        } else if (pretrain->parsed()) {
            const ExperimentConfig cfg = load_config(common);
            return run_training(cfg, train_config_from(cfg, Regime::pretrain), train_data, train_out);
        } else if (finetune->parsed()) {
            const ExperimentConfig cfg = load_config(common);
            TrainConfig tc = train_config_from(cfg, Regime::finetune);
            tc.checkpoint_in = train_ckpt;
            tc.fresh_moments = fresh_moments;
            tc.lr_override = lr_flag.has_value() ? lr_flag : cfg.finetune_lr;
            return run_training(cfg, tc, train_data, train_out);
        } else if (scratch->parsed()) {
            const ExperimentConfig cfg = load_config(common);
            return run_training(cfg, train_config_from(cfg, Regime::scratch), train_data, train_out);
        } else if (enhance->parsed()) {
            const Checkpoint ck = load_checkpoint(enh_ckpt);
            const AudioClip in = read_wav(enh_in);
            write_wav(forward(ck.params, in).enhanced, enh_out);
            std::cout << "wrote " << enh_out << "\n";
        } else if (decompose_cmd->parsed()) {
            Enhancer enhancer;
            StftConfig stft_cfg;
            if (dec_identity) {
                if (!common.config_path.empty()) {
                    const ExperimentConfig cfg = parse_experiment_config(common.config_path);
                    stft_cfg = StftConfig{cfg.fft_size, cfg.hop_size, cfg.window};
                }
            } else {
                if (dec_ckpt.empty())
                    throw std::runtime_error("config: decompose needs --checkpoint or --identity");
                enhancer.params = load_checkpoint(dec_ckpt).params;
                stft_cfg = enhancer.params->config.stft;
            }
            const ArtifactOption option =
                dec_opt == "alpha" ? ArtifactOption::alpha
                : dec_opt == "beta"
                    ? ArtifactOption::beta
                    : throw std::runtime_error("config: unknown artifact option '" + dec_opt + "'");
            decompose_export(enhancer, read_wav(dec_x), read_wav(dec_y), read_wav(dec_z), option,
                             stft_cfg, dec_out);
            std::cout << "wrote decomposition to " << dec_out << "\n";
        } else if (evaluate->parsed()) {
            const Checkpoint ck = load_checkpoint(eval_ckpt);
            const auto dataset = load_dataset(eval_data);
            const ArtifactOption option =
                eval_opt == "alpha" ? ArtifactOption::alpha
                : eval_opt == "beta"
                    ? ArtifactOption::beta
                    : throw std::runtime_error("config: unknown artifact option '" + eval_opt + "'");
            const std::size_t n =
                eval_count == 0 ? dataset.size() : std::min(eval_count, dataset.size());
            const Enhancer enhancer{ck.params};
            std::vector<std::pair<std::string, MetricReport>> rows;
            for (std::size_t i = 0; i < n; ++i) {
                const TripleEvaluation ev = evaluate_triple(enhancer, dataset[i], option);
                rows.emplace_back(detail::triple_stem(i), ev.metrics_z);
            }
            write_metric_csv(rows, eval_out);
            std::cout << "wrote " << rows.size() << " rows to " << eval_out << "\n";
        } else if (werr_cmd->parsed()) {
            const CsvTable out = compute_werr_table(read_csv(werr_in));
            write_csv(out, werr_out);
            for (const auto& row : out.rows)
                std::cout << row[0] << ": uc=" << row[1] << " org=" << row[2] << " naa=" << row[3]
                          << " werr=" << (row[4].empty() ? row[5] : row[4] + "%") << "\n";
        } else if (report->parsed()) {
            const CsvTable table = read_csv(report_matrix);
            ExperimentMatrixResult result;
            const int model_col = find_column(table, "model");
            const int input_col = find_column(table, "input");
            const int status_col = find_column(table, "status");
            const int reason_col = find_column(table, "reason");
            const int si_col = find_column(table, "si_snr_db");
            const int stoi_col = find_column(table, "stoi");
            const int art_col = find_column(table, "artifact_energy_db");
            const int res_col = find_column(table, "residual_noise_energy_db");
            for (const auto& row : table.rows) {
                MatrixCell cell;
                cell.model = row[static_cast<std::size_t>(model_col)];
                cell.input = row[static_cast<std::size_t>(input_col)];
                cell.ok = row[static_cast<std::size_t>(status_col)] == "ok";
                cell.reason = row[static_cast<std::size_t>(reason_col)];
                if (cell.ok) {
                    cell.metrics.si_snr_db = std::stod(row[static_cast<std::size_t>(si_col)]);
                    cell.metrics.stoi = std::stod(row[static_cast<std::size_t>(stoi_col)]);
                    cell.metrics.artifact_energy_db = std::stod(row[static_cast<std::size_t>(art_col)]);
                    cell.metrics.residual_noise_energy_db =
                        std::stod(row[static_cast<std::size_t>(res_col)]);
                }
                result.cells.push_back(std::move(cell));
            }
            const std::string text = render_matrix_table(result);
            if (report_out.empty()) {
                std::cout << text;
            } else {
                std::ofstream out(report_out, std::ios::trunc);
                out << text;
                if (!out) throw std::runtime_error("io: write failed: " + report_out);
                std::cout << "wrote " << report_out << "\n";
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "ERROR: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "naaloss/checkpoint.hpp"
#include "naaloss/config.hpp"
#include "naaloss/csv.hpp"
#include "naaloss/loss.hpp"
#include "naaloss/metrics.hpp"
#include "naaloss/trainer.hpp"
#include "naaloss/wav.hpp"

namespace naaloss {

namespace detail {

inline std::string triple_stem(std::size_t id) {
    std::ostringstream os;
    os << std::setw(4) << std::setfill('0') << id;
    return os.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// dataset on disk: x_####.wav / y_####.wav / z_####.wav + manifest.csv
// ---------------------------------------------------------------------------

inline void write_dataset(const std::vector<TrainTriple>& triples,
                          const std::filesystem::path& dir, std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    CsvTable manifest;
    manifest.header = {"id", "snr_db", "clean_source", "noise_source", "seed"};
    for (std::size_t i = 0; i < triples.size(); ++i) {
        const std::string stem = detail::triple_stem(i);
        write_wav(triples[i].x, dir / ("x_" + stem + ".wav"));
        write_wav(triples[i].y, dir / ("y_" + stem + ".wav"));
        write_wav(triples[i].z, dir / ("z_" + stem + ".wav"));
        manifest.rows.push_back({stem, detail::format_double(triples[i].snr_db),
                                 triples[i].clean_id, triples[i].noise_id,
                                 std::to_string(seed)});
    }
    write_csv(manifest, dir / "manifest.csv");
}

// Loads a dataset directory. The WAV container is float32, so the stored z
// is verified against x + y within container tolerance and then recomputed
// in double precision so the z = x + y identity holds exactly downstream.
inline std::vector<TrainTriple> load_dataset(const std::filesystem::path& dir) {
    const CsvTable manifest = read_csv(dir / "manifest.csv");
    const int id_col = find_column(manifest, "id");
    const int snr_col = find_column(manifest, "snr_db");
    const int clean_col = find_column(manifest, "clean_source");
    const int noise_col = find_column(manifest, "noise_source");

    std::vector<TrainTriple> triples;
    triples.reserve(manifest.rows.size());
    for (const auto& row : manifest.rows) {
        const std::string& stem = row[static_cast<std::size_t>(id_col)];
        TrainTriple tr;
        tr.x = read_wav(dir / ("x_" + stem + ".wav"));
        tr.y = read_wav(dir / ("y_" + stem + ".wav"));
        tr.z = read_wav(dir / ("z_" + stem + ".wav"));
        tr.snr_db = std::stod(row[static_cast<std::size_t>(snr_col)]);
        tr.clean_id = row[static_cast<std::size_t>(clean_col)];
        tr.noise_id = row[static_cast<std::size_t>(noise_col)];
        require_compatible(tr.x, tr.y, "dataset triple " + stem);
        require_compatible(tr.x, tr.z, "dataset triple " + stem);
        double dev = 0.0, peak = 1.0;
        for (std::size_t i = 0; i < tr.x.samples.size(); ++i) {
            dev = std::max(dev, std::abs(tr.z.samples[i] - tr.x.samples[i] - tr.y.samples[i]));
            peak = std::max(peak, std::abs(tr.z.samples[i]));
        }
        if (dev > 1e-6 * peak)
            throw std::runtime_error("data: triple " + stem + " violates z = x + y, max deviation " +
                                     std::to_string(dev));
        for (std::size_t i = 0; i < tr.z.samples.size(); ++i)
            tr.z.samples[i] = tr.x.samples[i] + tr.y.samples[i];
        triples.push_back(std::move(tr));
    }
    if (triples.empty()) throw std::runtime_error("data: dataset manifest has no rows");
    return triples;
}

// ---------------------------------------------------------------------------
// enhancement / evaluation
// ---------------------------------------------------------------------------

// A model checkpoint or the exact identity (mask forced to one, used by the
// decompose command's debug flag and by tests).
struct Enhancer {
    std::optional<MaskModelParams> params;

    AudioClip operator()(const AudioClip& clip) const {
        if (!params.has_value()) return clip;
        return forward(*params, clip).enhanced;
    }
};

// Mean artifact energy in dB for a decomposition: option alpha reports the
// energy of theta, option beta the mean of the theta_c and theta_m energies.
inline double artifact_energy_db(const ArtifactDecomposition& dec) {
    if (dec.option == ArtifactOption::alpha) return signal_energy_db(dec.theta);
    return 0.5 * (signal_energy_db(dec.theta_c) + signal_energy_db(dec.theta_m));
}

struct TripleEvaluation {
    MetricReport metrics_x;  // enhancer fed the clean input x
    MetricReport metrics_z;  // enhancer fed the noisy input z
};

inline TripleEvaluation evaluate_triple(const Enhancer& enhancer, const TrainTriple& triple,
                                        ArtifactOption option) {
    const AudioClip fx = enhancer(triple.x);
    const AudioClip fy = enhancer(triple.y);
    const AudioClip fz = enhancer(triple.z);
    const ArtifactDecomposition dec = decompose(fx, fy, fz, triple.x, option);

    TripleEvaluation ev;
    ev.metrics_x.si_snr_db = si_snr(fx, triple.x);
    ev.metrics_x.stoi = stoi(fx, triple.x);
    ev.metrics_z.si_snr_db = si_snr(fz, triple.x);
    ev.metrics_z.stoi = stoi(fz, triple.x);
    const double artifact_db = artifact_energy_db(dec);
    const double residual_db = signal_energy_db(dec.residual_noise);
    ev.metrics_x.artifact_energy_db = artifact_db;
    ev.metrics_z.artifact_energy_db = artifact_db;
    ev.metrics_x.residual_noise_energy_db = residual_db;
    ev.metrics_z.residual_noise_energy_db = residual_db;
    return ev;
}

struct EvalMeans {
    MetricReport mean_x;
    MetricReport mean_z;
    std::size_t count = 0;
};

inline EvalMeans evaluate_set(const Enhancer& enhancer, const std::vector<TrainTriple>& triples,
                              const std::vector<std::size_t>& idxs, ArtifactOption option) {
    if (idxs.empty()) throw std::invalid_argument("eval: empty evaluation set");
    EvalMeans means;
    for (std::size_t idx : idxs) {
        const TripleEvaluation ev = evaluate_triple(enhancer, triples[idx], option);
        means.mean_x.si_snr_db += ev.metrics_x.si_snr_db;
        means.mean_x.stoi += ev.metrics_x.stoi;
        means.mean_x.artifact_energy_db += ev.metrics_x.artifact_energy_db;
        means.mean_x.residual_noise_energy_db += ev.metrics_x.residual_noise_energy_db;
        means.mean_z.si_snr_db += ev.metrics_z.si_snr_db;
        means.mean_z.stoi += ev.metrics_z.stoi;
        means.mean_z.artifact_energy_db += ev.metrics_z.artifact_energy_db;
        means.mean_z.residual_noise_energy_db += ev.metrics_z.residual_noise_energy_db;
        ++means.count;
    }
    const double inv = 1.0 / static_cast<double>(means.count);
    for (MetricReport* r : {&means.mean_x, &means.mean_z}) {
        r->si_snr_db *= inv;
        r->stoi *= inv;
        r->artifact_energy_db *= inv;
        r->residual_noise_energy_db *= inv;
    }
    return means;
}

// Per-clip metric CSV with the pinned schema.
inline void write_metric_csv(const std::vector<std::pair<std::string, MetricReport>>& rows,
                             const std::filesystem::path& path) {
    CsvTable table;
    table.header = {"clip_id", "si_snr_db", "stoi", "artifact_energy_db",
                    "residual_noise_energy_db"};
    for (const auto& [id, r] : rows)
        table.rows.push_back({id, detail::format_double(r.si_snr_db), detail::format_double(r.stoi),
                              detail::format_double(r.artifact_energy_db),
                              detail::format_double(r.residual_noise_energy_db)});
    write_csv(table, path);
}

// ---------------------------------------------------------------------------
// training log CSV
// ---------------------------------------------------------------------------

inline void write_train_log(const std::vector<EpochLogRow>& rows,
                            const std::filesystem::path& path) {
    CsvTable table;
    table.header = {"epoch", "split", "l_estim", "l_deatf", "l_ignor", "l_naa"};
    for (const EpochLogRow& r : rows)
        table.rows.push_back({std::to_string(r.epoch), r.split, detail::format_double(r.l_estim),
                              detail::format_double(r.l_deatf), detail::format_double(r.l_ignor),
                              detail::format_double(r.l_naa)});
    write_csv(table, path);
}

// ---------------------------------------------------------------------------
// decomposition export (Fig-style analysis data)
// ---------------------------------------------------------------------------

inline void write_spectrogram_csv(const AudioClip& clip, const StftConfig& cfg,
                                  const std::filesystem::path& path) {
    const ComplexSpectrogram spec = stft(clip, cfg);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("io: cannot open for writing: " + path.string());
    out << "# fft_size=" << cfg.fft_size << " hop_size=" << cfg.hop_size
        << " sample_rate_hz=" << clip.sample_rate_hz << " frames=" << spec.frames
        << " bins=" << spec.bins << '\n';
    out.precision(9);
    for (std::size_t t = 0; t < spec.frames; ++t) {
        for (std::size_t f = 0; f < spec.bins; ++f) {
            if (f) out << ',';
            out << std::abs(spec.at(t, f));
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("io: write failed: " + path.string());
}

// Writes component WAVs, magnitude-spectrogram CSVs for each, and an energy
// summary. Option beta exports {x, f_x, f_y, f_z, theta_c, theta_m,
// residual_noise}; option alpha exports theta instead of the theta_c/theta_m
// pair.
inline void decompose_export(const Enhancer& enhancer, const AudioClip& x, const AudioClip& y,
                             const AudioClip& z, ArtifactOption option, const StftConfig& stft_cfg,
                             const std::filesystem::path& out_dir) {
    require_compatible(x, y, "decompose input");
    require_compatible(x, z, "decompose input");
    double dev = 0.0, peak = 1.0;
    for (std::size_t i = 0; i < x.samples.size(); ++i) {
        dev = std::max(dev, std::abs(z.samples[i] - x.samples[i] - y.samples[i]));
        peak = std::max(peak, std::abs(z.samples[i]));
    }
    if (dev > 1e-6 * peak)
        throw std::runtime_error("data: triple violates z = x + y, max deviation " +
                                 std::to_string(dev));
    AudioClip z_exact = x;
    for (std::size_t i = 0; i < z_exact.samples.size(); ++i)
        z_exact.samples[i] = x.samples[i] + y.samples[i];

    const AudioClip fx = enhancer(x);
    const AudioClip fy = enhancer(y);
    const AudioClip fz = enhancer(z_exact);
    const ArtifactDecomposition dec = decompose(fx, fy, fz, x, option);

    std::filesystem::create_directories(out_dir);
    std::vector<std::pair<std::string, const AudioClip*>> components;
    components.emplace_back("x", &x);
    components.emplace_back("f_x", &fx);
    components.emplace_back("f_y", &fy);
    components.emplace_back("f_z", &fz);
    if (option == ArtifactOption::alpha) {
        components.emplace_back("theta", &dec.theta);
    } else {
        components.emplace_back("theta_c", &dec.theta_c);
        components.emplace_back("theta_m", &dec.theta_m);
    }
    components.emplace_back("residual_noise", &dec.residual_noise);

    CsvTable summary;
    summary.header = {"component", "energy_db"};
    for (const auto& [name, clip] : components) {
        write_wav(*clip, out_dir / (name + ".wav"));
        write_spectrogram_csv(*clip, stft_cfg, out_dir / (name + "_spec.csv"));
        summary.rows.push_back({name, detail::format_double(signal_energy_db(*clip))});
    }
    write_csv(summary, out_dir / "summary.csv");
}

// ---------------------------------------------------------------------------
// the experiment matrix (org / pre-alpha / pre-beta / scr-alpha / scr-beta)
// ---------------------------------------------------------------------------

struct MatrixCell {
    std::string model;
    std::string input;  // "x" | "z"
    bool ok = false;
    std::string reason;
    MetricReport metrics;
};

struct ExperimentMatrixResult {
    std::vector<MatrixCell> cells;
    std::filesystem::path pretrain_checkpoint;
};

namespace detail {

inline void push_cells(std::vector<MatrixCell>& cells, const std::string& model,
                       const EvalMeans& means) {
    cells.push_back({model, "x", true, "", means.mean_x});
    cells.push_back({model, "z", true, "", means.mean_z});
}

inline void push_failed(std::vector<MatrixCell>& cells, const std::string& model,
                        const std::string& reason) {
    cells.push_back({model, "x", false, reason, {}});
    cells.push_back({model, "z", false, reason, {}});
}

}  // namespace detail

// Pretrains once, fine-tunes options alpha and beta from that checkpoint,
// trains both options from scratch, and evaluates every model on the
// held-out split with clean and noisy inputs. Training failures mark the
// affected cells failed and the matrix continues.
inline ExperimentMatrixResult run_matrix(const ExperimentConfig& cfg,
                                         const std::vector<TrainTriple>& dataset,
                                         const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const ModelConfig model_cfg = cfg.model_config();
    const DatasetSplit split = split_dataset(dataset.size(), cfg.validation_fraction, cfg.seed);
    if (split.val.empty())
        throw std::runtime_error("data: matrix needs a nonempty held-out split");

    ExperimentMatrixResult result;

    TrainConfig base;
    base.batch_size = cfg.batch_size;
    base.lr = cfg.lr;
    base.seed = cfg.seed;
    base.weights = cfg.loss_weights();
    base.distance = cfg.distance_spec();
    base.validation_fraction = cfg.validation_fraction;

    // f_org: pretrained with the estimation loss only
    TrainConfig pre_cfg = base;
    pre_cfg.regime = Regime::pretrain;
    pre_cfg.epochs = cfg.pretrain_epochs;
    const TrainResult pre = train(pre_cfg, model_cfg, dataset, out_dir / "pretrain");
    write_train_log(pre.log, out_dir / "pretrain" / "train_log.csv");
    result.pretrain_checkpoint = pre.best_checkpoint;
    const MaskModelParams org_params = load_checkpoint(pre.best_checkpoint).params;
    detail::push_cells(result.cells, "org",
                       evaluate_set(Enhancer{org_params}, dataset, split.val, cfg.artifact_option));

    struct Job {
        std::string name;
        Regime regime;
        ArtifactOption option;
        int epochs;
    };
    const Job jobs[] = {
        {"pre_alpha", Regime::finetune, ArtifactOption::alpha, cfg.finetune_epochs},
        {"pre_beta", Regime::finetune, ArtifactOption::beta, cfg.finetune_epochs},
        {"scr_alpha", Regime::scratch, ArtifactOption::alpha, cfg.scratch_epochs},
        {"scr_beta", Regime::scratch, ArtifactOption::beta, cfg.scratch_epochs},
    };
    for (const Job& job : jobs) {
        TrainConfig tc = base;
        tc.regime = job.regime;
        tc.option = job.option;
        tc.epochs = job.epochs;
        if (job.regime == Regime::finetune) {
            tc.checkpoint_in = pre.best_checkpoint;
            tc.lr_override = cfg.finetune_lr;
        }
        try {
            const TrainResult tr = train(tc, model_cfg, dataset, out_dir / job.name);
            write_train_log(tr.log, out_dir / job.name / "train_log.csv");
            const MaskModelParams params = load_checkpoint(tr.best_checkpoint).params;
            detail::push_cells(result.cells, job.name,
                               evaluate_set(Enhancer{params}, dataset, split.val, job.option));
        } catch (const std::exception& e) {
            detail::push_failed(result.cells, job.name, e.what());
        }
    }
    return result;
}

inline void write_matrix_csv(const ExperimentMatrixResult& result,
                             const std::filesystem::path& path) {
    CsvTable table;
    table.header = {"model", "input", "status", "si_snr_db", "stoi", "artifact_energy_db",
                    "residual_noise_energy_db", "reason"};
    for (const MatrixCell& c : result.cells) {
        if (c.ok)
            table.rows.push_back({c.model, c.input, "ok", detail::format_double(c.metrics.si_snr_db),
                                  detail::format_double(c.metrics.stoi),
                                  detail::format_double(c.metrics.artifact_energy_db),
                                  detail::format_double(c.metrics.residual_noise_energy_db), ""});
        else
            table.rows.push_back({c.model, c.input, "failed", "", "", "", "", c.reason});
    }
    write_csv(table, path);
}

// Text table, metric rows x model(input) columns.
inline std::string render_matrix_table(const ExperimentMatrixResult& result) {
    std::vector<std::string> col_names;
    for (const MatrixCell& c : result.cells) col_names.push_back(c.model + "(" + c.input + ")");

    auto fmt = [](double v) {
        std::ostringstream os;
        os << std::fixed << std::setprecision(2) << v;
        return os.str();
    };
    const char* metric_names[] = {"si_snr_db", "stoi", "artifact_db", "residual_db"};
    std::vector<std::vector<std::string>> rows(4);
    for (const MatrixCell& c : result.cells) {
        rows[0].push_back(c.ok ? fmt(c.metrics.si_snr_db) : "failed");
        rows[1].push_back(c.ok ? fmt(c.metrics.stoi) : "failed");
        rows[2].push_back(c.ok ? fmt(c.metrics.artifact_energy_db) : "failed");
        rows[3].push_back(c.ok ? fmt(c.metrics.residual_noise_energy_db) : "failed");
    }

    std::vector<std::size_t> widths;
    widths.push_back(11);  // metric label column
    for (std::size_t j = 0; j < col_names.size(); ++j) {
        std::size_t w = col_names[j].size();
        for (int i = 0; i < 4; ++i) w = std::max(w, rows[static_cast<std::size_t>(i)][j].size());
        widths.push_back(w);
    }

    std::ostringstream os;
    auto cell = [&](const std::string& s, std::size_t w) { os << std::setw(static_cast<int>(w) + 2) << s; };
    cell("", widths[0]);
    for (std::size_t j = 0; j < col_names.size(); ++j) cell(col_names[j], widths[j + 1]);
    os << '\n';
    for (int i = 0; i < 4; ++i) {
        cell(metric_names[i], widths[0]);
        for (std::size_t j = 0; j < col_names.size(); ++j)
            cell(rows[static_cast<std::size_t>(i)][j], widths[j + 1]);
        os << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// WERR over externally supplied WER tables
// ---------------------------------------------------------------------------

// Input CSV: system_label,am_label,wer_percent with system labels uc/org/naa.
// One WERR row per am_label group; degenerate groups (org == uc) are flagged
// instead of producing a value.
inline CsvTable compute_werr_table(const CsvTable& input) {
    const int sys_col = find_column(input, "system_label");
    const int am_col = find_column(input, "am_label");
    const int wer_col = find_column(input, "wer_percent");

    std::vector<std::string> am_order;
    std::map<std::string, std::map<std::string, double>> groups;
    for (const auto& row : input.rows) {
        const std::string& sys = row[static_cast<std::size_t>(sys_col)];
        const std::string& am = row[static_cast<std::size_t>(am_col)];
        if (sys != "uc" && sys != "org" && sys != "naa")
            throw std::runtime_error("format: system_label must be uc, org or naa; got '" + sys + "'");
        double wer = 0.0;
        try {
            wer = std::stod(row[static_cast<std::size_t>(wer_col)]);
        } catch (...) {
            throw std::runtime_error("format: bad wer_percent value");
        }
        if (!std::isfinite(wer) || wer < 0.0)
            throw std::runtime_error("format: wer_percent must be finite and nonnegative");
        if (groups.find(am) == groups.end()) am_order.push_back(am);
        if (!groups[am].emplace(sys, wer).second)
            throw std::runtime_error("format: duplicate system_label '" + sys + "' for am_label '" +
                                     am + "'");
    }

    CsvTable out;
    out.header = {"am_label", "wer_uc", "wer_org", "wer_naa", "werr_percent", "note"};
    for (const std::string& am : am_order) {
        const auto& g = groups[am];
        if (g.size() != 3)
            throw std::runtime_error("format: am_label '" + am + "' needs uc, org and naa rows");
        const double uc = g.at("uc"), org = g.at("org"), naa = g.at("naa");
        std::string value, note;
        if (org == uc) {
            note = "degenerate: wer_org equals wer_uc";
        } else {
            value = detail::format_double(werr(uc, org, naa));
        }
        out.rows.push_back({am, detail::format_double(uc), detail::format_double(org),
                            detail::format_double(naa), value, note});
    }
    return out;
}

}  // namespace naaloss

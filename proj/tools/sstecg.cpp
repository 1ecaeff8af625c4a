#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "sstecg/pipeline.hpp"
#include "sstecg/synth.hpp"

namespace {

using sstecg::pipeline::LeadMode;
using sstecg::pipeline::PipelineConfig;

// Key-value config files (`key = value`, '#' comments). Flags given on the
// command line override these values.
void apply_config_file(const std::string& path, PipelineConfig& cfg) {
    std::ifstream f(path);
    if (!f) throw sstecg::DataError("cannot open config file: " + path);
    std::string line;
    while (std::getline(f, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty()) continue;
        if (key == "data_dir") cfg.data_dir = val;
        else if (key == "out_dir") cfg.out_dir = val;
        else if (key == "labels") cfg.labels_path = val;
        else if (key == "records") cfg.records_filter = val;
        else if (key == "train_records") cfg.train_records = val;
        else if (key == "test_records") cfg.test_records = val;
        else if (key == "lead") cfg.lead_mode = val == "secondary" ? LeadMode::secondary
                                                : val == "merged" ? LeadMode::merged
                                                                  : LeadMode::primary;
        else if (key == "w1_ms") cfg.detector.w1_ms = std::stod(val);
        else if (key == "w2_ms") cfg.detector.w2_ms = std::stod(val);
        else if (key == "beta") cfg.detector.beta = std::stod(val);
        else if (key == "refractory_ms") cfg.detector.refractory_ms = std::stod(val);
        else if (key == "block") cfg.sst.block = std::stoi(val);
        else if (key == "overlap") cfg.sst.overlap = std::stod(val);
        else if (key == "voices") cfg.sst.voices = std::stoi(val);
        else if (key == "bins") cfg.sst.bins = std::stoi(val);
        else if (key == "gamma_sst") cfg.sst.gamma_abs = std::stod(val);
        else if (key == "tol_ms") cfg.score_tol_ms = std::stod(val);
        else if (key == "seed") cfg.seed = std::stoull(val);
        else if (key == "jobs") cfg.jobs = std::stoi(val);
        else if (key == "recovery") cfg.recovery = val == "1" || val == "true";
        else if (key == "task") cfg.task = val;
        else if (key == "C") cfg.svm.C = std::stod(val);
        else if (key == "gamma") cfg.svm.gamma = std::stod(val);
        else if (key == "cv") cfg.run_cv = val == "1" || val == "true";
        else if (key == "folds") cfg.cv_folds = std::stoi(val);
        else if (key == "k") cfg.knn_k = std::stoi(val);
        else throw sstecg::DataError("unknown config key: " + key);
    }
}

void add_common_flags(CLI::App* cmd, PipelineConfig& cfg, std::string& config_path) {
    cmd->add_option("--config", config_path, "key=value config file");
    cmd->add_option("--data", cfg.data_dir, "record directory (*.hea or *.csv)");
    cmd->add_option("--out", cfg.out_dir, "output directory");
    cmd->add_option("--records", cfg.records_filter, "comma-separated record ids");
    cmd->add_option("--seed", cfg.seed, "deterministic seed");
    cmd->add_option("--jobs", cfg.jobs, "worker threads");
    std::map<std::string, LeadMode> lead_map{{"primary", LeadMode::primary},
                                             {"secondary", LeadMode::secondary},
                                             {"merged", LeadMode::merged}};
    cmd->add_option("--lead", cfg.lead_mode, "lead selection")
        ->transform(CLI::CheckedTransformer(lead_map, CLI::ignore_case));
    cmd->add_option("--tol-ms", cfg.score_tol_ms, "beat matching tolerance (ms)");
    cmd->add_option("--block", cfg.sst.block, "SST block size (power of two)");
    cmd->add_option("--overlap", cfg.sst.overlap, "SST block overlap fraction");
    cmd->add_option("--voices", cfg.sst.voices, "CWT voices per octave");
    cmd->add_option("--bins", cfg.sst.bins, "squeeze frequency bins");
    cmd->add_option("--gamma-sst", cfg.sst.gamma_abs, "absolute CWT threshold");
    cmd->add_option("--w1-ms", cfg.detector.w1_ms, "QRS window (ms)");
    cmd->add_option("--w2-ms", cfg.detector.w2_ms, "beat window (ms)");
    cmd->add_option("--beta", cfg.detector.beta, "detector threshold offset factor");
    cmd->add_option("--refractory-ms", cfg.detector.refractory_ms, "refractory period (ms)");
}

int run_synth(const std::string& kind, double f0, double fs, double duration, std::uint64_t seed,
              double noise, const std::string& out) {
    sstecg::synth::AnhSpec spec;
    if (kind == "ecg") {
        spec = sstecg::synth::AnhSpec::ecg_like_default(f0);
    } else if (kind == "tone") {
        spec.f0_hz = f0;
    } else if (kind == "chirp") {
        spec.f0_hz = f0;
        spec.chirp_rate_hz_per_s = 0.02 * f0;
        spec.eps = std::max(spec.eps, 0.05);
    } else {
        std::cerr << "unknown synth kind: " << kind << "\n";
        return sstecg::pipeline::exit_data;
    }
    spec.noise_sigma = noise;
    const auto gt = sstecg::synth::generate(spec, fs, duration, seed);
    std::ofstream f(out);
    if (!f) {
        std::cerr << "cannot write " << out << "\n";
        return sstecg::pipeline::exit_data;
    }
    f << "time_s,value\n";
    f.precision(12);
    for (size_t i = 0; i < gt.signal.size(); ++i) {
        f << static_cast<double>(i) / fs << ',' << gt.signal[i] << "\n";
    }
    std::cout << "wrote " << gt.signal.size() << " samples, " << gt.true_peaks.size()
              << " true peaks to " << out << "\n";
    return 0;
}

int run_sst_dump(const std::string& input, const std::string& out, const std::string& format,
                 double center, int lead_index) {
    const auto rec = sstecg::pipeline::load_record(input);
    if (lead_index < 0 || static_cast<size_t>(lead_index) >= rec.leads.size()) {
        std::cerr << "record has no lead " << lead_index << "\n";
        return sstecg::pipeline::exit_data;
    }
    const auto& ecg = rec.leads[static_cast<size_t>(lead_index)].samples;
    const auto pre = sstecg::dsp::preprocess_xm(ecg, rec.fs);
    const size_t n = std::min<size_t>(pre.x_m.size(), 4096);
    std::span<const double> seg(pre.x_m.data(), n);

    const sstecg::sst::MotherWavelet w(center, 0.8 * center);
    const auto scales = sstecg::sst::log_scales(w, 0.25 * center, 4.0 * center, 32);
    const auto cw = sstecg::sst::cwt(seg, rec.fs, scales, w);
    const auto field = sstecg::sst::reassign(cw);
    const auto bins = sstecg::sst::linear_bins(0.25 * center, 4.0 * center, 512);
    const auto plane = sstecg::sst::squeeze(cw, field, bins);
    if (format == "csv") {
        sstecg::sst::write_plane_csv(plane, out);
    } else {
        sstecg::sst::write_plane_binary(plane, out);
    }
    std::cout << "wrote squeezed plane (" << plane.n_rows() << " x " << plane.n_times()
              << ") to " << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synchrosqueezing-based single-lead ECG analysis pipeline"};
    app.require_subcommand(1);

    PipelineConfig cfg;
    if (const char* env = std::getenv("SSTECG_DATA")) cfg.data_dir = env;
    std::string config_path;

    auto* detect = app.add_subcommand("detect", "R-peak detection with phase-based recovery");
    add_common_flags(detect, cfg, config_path);
    bool no_recovery = false;
    detect->add_flag("--no-recovery", no_recovery, "skip SST missed-beat recovery");

    auto* trainval = app.add_subcommand("trainval", "train on DS1, evaluate on DS2");
    add_common_flags(trainval, cfg, config_path);
    trainval->add_option("--task", cfg.task, "binary or four")
        ->check(CLI::IsMember({"binary", "four"}));
    bool cv = false;
    trainval->add_flag("--cv", cv, "grid-search hyperparameters with 10-fold CV");
    trainval->add_option("--C", cfg.svm.C, "SVM penalty");
    trainval->add_option("--gamma", cfg.svm.gamma, "RBF kernel gamma");
    trainval->add_option("--train-records", cfg.train_records,
                         "explicit training record ids (bypasses the standard split)");
    trainval->add_option("--test-records", cfg.test_records, "explicit test record ids");

    auto* quality = app.add_subcommand("quality", "KNN quality classification from labels CSV");
    add_common_flags(quality, cfg, config_path);
    quality->add_option("--labels", cfg.labels_path, "per-beat quality labels CSV");
    quality->add_option("--k", cfg.knn_k, "neighbors");
    quality->add_option("--folds", cfg.cv_folds, "CV folds");

    auto* synth = app.add_subcommand("synth", "export a synthetic test signal as CSV");
    std::string synth_kind = "ecg", synth_out = "synthetic.csv";
    double synth_f0 = 1.2, synth_fs = 360, synth_dur = 60, synth_noise = 0;
    std::uint64_t synth_seed = 1;
    synth->add_option("--kind", synth_kind, "ecg | tone | chirp");
    synth->add_option("--f0", synth_f0, "fundamental frequency (Hz)");
    synth->add_option("--fs", synth_fs, "sampling rate (Hz)");
    synth->add_option("--duration", synth_dur, "seconds");
    synth->add_option("--noise", synth_noise, "white noise sigma");
    synth->add_option("--seed", synth_seed, "noise seed");
    synth->add_option("--out", synth_out, "output CSV");

    auto* dump = app.add_subcommand("sst-dump", "write a squeezed plane for external plotting");
    std::string dump_in, dump_out = "plane.bin", dump_fmt = "bin";
    double dump_center = 1.2;
    int dump_lead = 0;
    dump->add_option("--input", dump_in, "record header or CSV")->required();
    dump->add_option("--out", dump_out, "output file");
    dump->add_option("--format", dump_fmt, "bin or csv")->check(CLI::IsMember({"bin", "csv"}));
    dump->add_option("--center", dump_center, "wavelet center frequency (Hz)");
    dump->add_option("--lead-index", dump_lead, "lead index");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!config_path.empty()) {
            PipelineConfig file_cfg;
            if (const char* env = std::getenv("SSTECG_DATA")) file_cfg.data_dir = env;
            apply_config_file(config_path, file_cfg);
            // command-line flags win over config-file values
            if (detect->count("--data") + trainval->count("--data") + quality->count("--data") == 0)
                std::swap(cfg.data_dir, file_cfg.data_dir);
            auto keep_flag = [&](const std::string& flag) {
                return detect->count(flag) + trainval->count(flag) + quality->count(flag) > 0;
            };
            if (!keep_flag("--out")) cfg.out_dir = file_cfg.out_dir;
            if (!keep_flag("--seed")) cfg.seed = file_cfg.seed;
            if (!keep_flag("--records")) cfg.records_filter = file_cfg.records_filter;
            if (!keep_flag("--tol-ms")) cfg.score_tol_ms = file_cfg.score_tol_ms;
            if (!keep_flag("--lead")) cfg.lead_mode = file_cfg.lead_mode;
            if (!keep_flag("--jobs")) cfg.jobs = file_cfg.jobs;
        }
        cfg.recovery = !no_recovery;
        cfg.run_cv = cv;

        if (app.got_subcommand(detect)) return sstecg::pipeline::cmd_detect(cfg, std::cout);
        if (app.got_subcommand(trainval)) return sstecg::pipeline::cmd_trainval(cfg, std::cout);
        if (app.got_subcommand(quality)) return sstecg::pipeline::cmd_quality(cfg, std::cout);
        if (app.got_subcommand(synth)) {
            return run_synth(synth_kind, synth_f0, synth_fs, synth_dur, synth_seed, synth_noise,
                             synth_out);
        }
        if (app.got_subcommand(dump)) {
            return run_sst_dump(dump_in, dump_out, dump_fmt, dump_center, dump_lead);
        }
    } catch (const sstecg::IntegrityError& e) {
        std::cerr << "integrity error: " << e.what() << "\n";
        return sstecg::pipeline::exit_integrity;
    } catch (const sstecg::ConvergenceError& e) {
        std::cerr << "convergence error: " << e.what() << "\n";
        return sstecg::pipeline::exit_convergence;
    } catch (const sstecg::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return sstecg::pipeline::exit_data;
    }
    return 0;
}

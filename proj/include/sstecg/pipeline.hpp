#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sstecg/common.hpp"
#include "sstecg/dsp.hpp"
#include "sstecg/features.hpp"
#include "sstecg/knn.hpp"
#include "sstecg/metrics.hpp"
#include "sstecg/rpeak.hpp"
#include "sstecg/sst.hpp"
#include "sstecg/svm.hpp"
#include "sstecg/wfdb.hpp"

namespace sstecg::pipeline {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

enum class LeadMode { primary, secondary, merged };

inline const char* lead_mode_name(LeadMode m) {
    switch (m) {
        case LeadMode::primary: return "primary";
        case LeadMode::secondary: return "secondary";
        case LeadMode::merged: return "merged";
    }
    return "?";
}

// exit codes shared by the commands and the CLI
inline constexpr int exit_ok = 0;
inline constexpr int exit_data = 2;
inline constexpr int exit_integrity = 3;
inline constexpr int exit_convergence = 4;

struct PipelineConfig {
    std::string data_dir;
    std::string out_dir = "out";
    std::string labels_path;
    std::string records_filter;  // comma-separated ids, empty = all
    std::string train_records;   // override DS1 ids for non-MIT datasets
    std::string test_records;    // override DS2 ids for non-MIT datasets
    LeadMode lead_mode = LeadMode::primary;
    rpeak::DetectorConfig detector;
    sst::BlockConfig sst;
    double score_tol_ms = 150;
    std::uint64_t seed = 1;
    int jobs = 1;
    bool recovery = true;
    std::string task = "four";  // "binary" or "four"
    ml::SvmParams svm;
    bool run_cv = false;
    int cv_folds = 10;
    int knn_k = 9;
    bool paper_params = true;  // preset C/gamma/weights per task when no CV

    // analysis parameters only, so identical inputs + seed hash identically
    // regardless of where the data lives or the outputs go
    std::string canonical() const {
        std::ostringstream os;
        os << std::setprecision(17);
        os << "records=" << records_filter << ";train=" << train_records
           << ";test=" << test_records << ";lead=" << lead_mode_name(lead_mode)
           << ";w1=" << detector.w1_ms << ";w2=" << detector.w2_ms << ";beta=" << detector.beta
           << ";refractory=" << detector.refractory_ms << ";th1=" << detector.recovery_scale
           << ";min_gap=" << detector.min_gap_ms << ";block=" << sst.block
           << ";overlap=" << sst.overlap << ";voices=" << sst.voices << ";bins=" << sst.bins
           << ";gamma_sst=" << sst.gamma_abs << ";band=" << sst.band_rel
           << ";sigma=" << sst.sigma_rel << ";tol_ms=" << score_tol_ms << ";seed=" << seed
           << ";recovery=" << recovery << ";task=" << task << ";C=" << svm.C
           << ";gamma=" << svm.gamma << ";cv=" << run_cv << ";folds=" << cv_folds
           << ";k=" << knn_k;
        for (const auto& [c, w] : svm.class_weights) os << ";w" << c << "=" << w;
        return os.str();
    }

    std::string fingerprint() const {
        std::ostringstream os;
        os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(canonical());
        return os.str();
    }
};

// ---------------------------------------------------------------------------
// dataset loading
// ---------------------------------------------------------------------------

inline std::vector<fs::path> list_record_paths(const std::string& data_dir) {
    if (!fs::is_directory(data_dir)) throw DataError("data dir not found: " + data_dir);
    std::vector<fs::path> heas, csvs;
    for (const auto& e : fs::directory_iterator(data_dir)) {
        if (!e.is_regular_file()) continue;
        if (e.path().extension() == ".hea") heas.push_back(e.path());
        if (e.path().extension() == ".csv") {
            const auto stem = e.path().stem().string();
            if (stem.size() > 4 && stem.substr(stem.size() - 4) == ".ann") continue;
            csvs.push_back(e.path());
        }
    }
    auto& chosen = heas.empty() ? csvs : heas;
    std::sort(chosen.begin(), chosen.end());
    if (chosen.empty()) throw DataError("no records (*.hea or *.csv) in " + data_dir);
    return chosen;
}

inline wfdb::EcgRecord load_record(const fs::path& p) {
    return p.extension() == ".hea" ? wfdb::read_record(p) : wfdb::read_csv_record(p);
}

inline std::set<std::string> parse_id_list(const std::string& csv) {
    std::set<std::string> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok.erase(std::remove_if(tok.begin(), tok.end(), ::isspace), tok.end());
        if (!tok.empty()) out.insert(tok);
    }
    return out;
}

// ---------------------------------------------------------------------------
// per-record analysis
// ---------------------------------------------------------------------------

struct LeadAnalysis {
    rpeak::PeakList base;
    rpeak::PeakList with_recovery;
    sst::PhaseEstimate phase;
    rpeak::DetectorDebug runs;
    dsp::PreprocSignal pre;
};

inline LeadAnalysis analyze_lead(std::span<const double> ecg, double fs,
                                 const PipelineConfig& cfg) {
    LeadAnalysis r;
    r.base = rpeak::detect_elgendi(ecg, fs, cfg.detector, &r.runs);
    r.pre = dsp::preprocess_xm(ecg, fs);
    r.phase = sst::sst_blocks(r.pre, fs, r.base.indices, cfg.sst);
    r.with_recovery = cfg.recovery
                          ? rpeak::recover_missed(r.base, r.phase, ecg, fs, cfg.detector)
                          : r.base;
    return r;
}

// Six-feature rows at the annotated beat positions of one lead.
inline std::vector<features::BeatFeatures> training_features(const wfdb::EcgRecord& rec,
                                                             size_t lead,
                                                             const PipelineConfig& cfg) {
    if (lead >= rec.leads.size()) throw DataError("record " + rec.record_id + " lacks lead");
    const auto& ecg = rec.leads[lead].samples;
    const auto beats = rec.beats();
    if (beats.empty()) throw DataError("record " + rec.record_id + " has no beat annotations");

    LeadAnalysis an = analyze_lead(ecg, rec.fs, cfg);
    std::vector<std::int64_t> peaks;
    std::vector<std::optional<wfdb::AamiClass>> labels;
    for (const auto& b : beats) {
        peaks.push_back(b.sample_index);
        labels.push_back(b.aami);
    }
    return features::beat_features(rec.record_id, ecg, rec.fs, peaks, an.phase, an.pre, an.runs,
                                   labels, cfg.detector.w1_ms);
}

// ---------------------------------------------------------------------------
// report helpers
// ---------------------------------------------------------------------------

inline ordered_json score_json(const rpeak::DetectionScore& s) {
    return ordered_json{{"tp", s.tp},
                        {"fn", s.fn},
                        {"fp", s.fp},
                        {"se_pct", 100.0 * s.se()},
                        {"ppv_pct", 100.0 * s.ppv()}};
}

inline ordered_json eval_json(const ml::EvalReport& rep) {
    ordered_json j;
    j["classes"] = rep.classes;
    std::vector<std::vector<std::int64_t>> conf;
    for (Eigen::Index r = 0; r < rep.confusion.rows(); ++r) {
        std::vector<std::int64_t> row;
        for (Eigen::Index c = 0; c < rep.confusion.cols(); ++c) row.push_back(rep.confusion(r, c));
        conf.push_back(row);
    }
    j["confusion"] = conf;
    j["se_pct"] = rep.se;
    j["ppv_pct"] = rep.ppv;
    j["acc_pct"] = rep.acc;
    j["total"] = rep.total;
    j["has_other_bucket"] = rep.has_other;
    return j;
}

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot write " + path.string());
    f << text;
}

inline void write_confusion_csv(const fs::path& path, const ml::EvalReport& rep) {
    std::ostringstream os;
    os << "ref\\pred";
    for (const auto& c : rep.classes) os << ',' << c;
    os << "\n";
    for (Eigen::Index r = 0; r < rep.confusion.rows() && r < static_cast<Eigen::Index>(rep.classes.size()); ++r) {
        os << rep.classes[static_cast<size_t>(r)];
        for (Eigen::Index c = 0; c < rep.confusion.cols(); ++c) os << ',' << rep.confusion(r, c);
        os << "\n";
    }
    write_text(path, os.str());
}

inline void write_peaks_csv(const fs::path& path, const rpeak::PeakList& peaks, double fs) {
    std::ostringstream os;
    os << "sample_index,time_s,source\n";
    for (size_t i = 0; i < peaks.indices.size(); ++i) {
        os << peaks.indices[i] << ',' << static_cast<double>(peaks.indices[i]) / fs << ','
           << (peaks.source[i] == rpeak::PeakSource::base ? "base" : "recovered") << "\n";
    }
    write_text(path, os.str());
}

// plot-ready per-beat phase trace (relative phase at each detected peak)
inline void write_phase_trace_csv(const fs::path& path, const rpeak::PeakList& peaks,
                                  const sst::PhaseEstimate& phase, double fs) {
    std::ostringstream os;
    os << "sample_index,time_s,zeta_cycles\n";
    const auto zetas = features::phase_at_peaks(phase, peaks.indices);
    for (size_t i = 0; i < peaks.indices.size(); ++i) {
        os << peaks.indices[i] << ',' << static_cast<double>(peaks.indices[i]) / fs << ','
           << zetas[i] << "\n";
    }
    write_text(path, os.str());
}

// ---------------------------------------------------------------------------
// SVM model serialization (versioned JSON)
// ---------------------------------------------------------------------------

inline ordered_json svm_model_to_json(const ml::SvmModel& m) {
    ordered_json j;
    j["format"] = "sstecg-svm";
    j["version"] = 1;
    j["kernel"] = "rbf";
    j["gamma"] = m.params.gamma;
    j["C"] = m.params.C;
    j["tol"] = m.params.tol;
    j["classes"] = m.classes;
    ordered_json w;
    for (const auto& [c, v] : m.params.class_weights) w[std::to_string(c)] = v;
    j["class_weights"] = w;
    j["standardizer"] = {
        {"mean", std::vector<double>(m.standardizer.mean.data(),
                                     m.standardizer.mean.data() + m.standardizer.mean.size())},
        {"scale", std::vector<double>(m.standardizer.scale.data(),
                                      m.standardizer.scale.data() + m.standardizer.scale.size())}};
    ordered_json pairs = ordered_json::array();
    for (const auto& p : m.pairs) {
        ordered_json pj;
        pj["pos"] = p.class_pos;
        pj["neg"] = p.class_neg;
        pj["rho"] = p.rho;
        pj["coef"] = std::vector<double>(p.coef.data(), p.coef.data() + p.coef.size());
        std::vector<std::vector<double>> sv;
        for (Eigen::Index r = 0; r < p.support_vectors.rows(); ++r) {
            sv.emplace_back(p.support_vectors.row(r).data(),
                            p.support_vectors.row(r).data() + p.support_vectors.cols());
        }
        pj["support_vectors"] = sv;
        pairs.push_back(pj);
    }
    j["pairs"] = pairs;
    return j;
}

inline ml::SvmModel svm_model_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "sstecg-svm" || j.value("version", 0) != 1) {
        throw DataError("svm model: unsupported format or version");
    }
    ml::SvmModel m;
    m.params.gamma = j.at("gamma").get<double>();
    m.params.C = j.at("C").get<double>();
    m.classes = j.at("classes").get<std::vector<int>>();
    for (const auto& [k, v] : j.at("class_weights").items()) {
        m.params.class_weights[std::stoi(k)] = v.get<double>();
    }
    const auto mean = j.at("standardizer").at("mean").get<std::vector<double>>();
    const auto scale = j.at("standardizer").at("scale").get<std::vector<double>>();
    m.standardizer.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    m.standardizer.scale = Eigen::Map<const Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(scale.size()));
    for (const auto& pj : j.at("pairs")) {
        ml::PairModel p;
        p.class_pos = pj.at("pos").get<int>();
        p.class_neg = pj.at("neg").get<int>();
        p.rho = pj.at("rho").get<double>();
        const auto coef = pj.at("coef").get<std::vector<double>>();
        p.coef = Eigen::Map<const Eigen::VectorXd>(coef.data(), static_cast<Eigen::Index>(coef.size()));
        const auto sv = pj.at("support_vectors").get<std::vector<std::vector<double>>>();
        p.support_vectors.resize(static_cast<Eigen::Index>(sv.size()),
                                 static_cast<Eigen::Index>(sv.empty() ? 0 : sv[0].size()));
        for (size_t r = 0; r < sv.size(); ++r) {
            p.support_vectors.row(static_cast<Eigen::Index>(r)) =
                Eigen::Map<const Eigen::VectorXd>(sv[r].data(), static_cast<Eigen::Index>(sv[r].size()));
        }
        m.pairs.push_back(std::move(p));
    }
    return m;
}

// ---------------------------------------------------------------------------
// cmd_detect
// ---------------------------------------------------------------------------

struct DetectRecordRow {
    std::string id;
    rpeak::DetectionScore base;
    rpeak::DetectionScore with_recovery;
    bool scored = false;
    std::string error;
};

inline int cmd_detect(const PipelineConfig& cfg, std::ostream& log) {
    std::vector<fs::path> paths;
    try {
        paths = list_record_paths(cfg.data_dir);
    } catch (const DataError& e) {
        log << "error: " << e.what() << "\n";
        return exit_data;
    }
    const auto filter = parse_id_list(cfg.records_filter);
    if (!filter.empty()) {
        std::erase_if(paths, [&](const fs::path& p) { return !filter.count(p.stem().string()); });
    }
    if (paths.empty()) {
        log << "error: no records selected\n";
        return exit_data;
    }
    fs::create_directories(cfg.out_dir);
    fs::create_directories(fs::path(cfg.out_dir) / "peaks");
    fs::create_directories(fs::path(cfg.out_dir) / "phase");

    const size_t lead = cfg.lead_mode == LeadMode::secondary ? 1 : 0;
    std::vector<DetectRecordRow> rows(paths.size());

    std::atomic<size_t> next{0};
    const int jobs = std::max(1, cfg.jobs);
    auto worker = [&]() {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= paths.size()) return;
            DetectRecordRow& row = rows[i];
            row.id = paths[i].stem().string();
            try {
                const auto rec = load_record(paths[i]);
                if (lead >= rec.leads.size()) throw DataError("missing requested lead");
                const auto& ecg = rec.leads[lead].samples;
                const LeadAnalysis an = analyze_lead(ecg, rec.fs, cfg);

                std::vector<std::int64_t> ref;
                for (const auto& a : rec.beats()) ref.push_back(a.sample_index);
                if (!ref.empty()) {
                    row.base = rpeak::score_detection(an.base.indices, ref, rec.fs, cfg.score_tol_ms);
                    row.with_recovery = rpeak::score_detection(an.with_recovery.indices, ref,
                                                               rec.fs, cfg.score_tol_ms);
                    row.scored = true;
                }
                const std::string stem = row.id + "_" + lead_mode_name(cfg.lead_mode);
                write_peaks_csv(fs::path(cfg.out_dir) / "peaks" / (stem + ".csv"),
                                an.with_recovery, rec.fs);
                write_phase_trace_csv(fs::path(cfg.out_dir) / "phase" / (stem + ".csv"),
                                      an.with_recovery, an.phase, rec.fs);
            } catch (const Error& e) {
                row.error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    rpeak::DetectionScore agg_base, agg_rec;
    bool any_skipped = false;
    ordered_json record_rows = ordered_json::array();
    for (const auto& row : rows) {
        ordered_json rj;
        rj["id"] = row.id;
        if (!row.error.empty()) {
            rj["skipped"] = row.error;
            any_skipped = true;
            log << "skipped record " << row.id << ": " << row.error << "\n";
        } else if (row.scored) {
            rj["base"] = score_json(row.base);
            rj["with_recovery"] = score_json(row.with_recovery);
            agg_base.tp += row.base.tp;
            agg_base.fn += row.base.fn;
            agg_base.fp += row.base.fp;
            agg_rec.tp += row.with_recovery.tp;
            agg_rec.fn += row.with_recovery.fn;
            agg_rec.fp += row.with_recovery.fp;
        } else {
            rj["unscored"] = "no beat annotations";
        }
        record_rows.push_back(rj);
    }

    ordered_json report;
    report["command"] = "detect";
    report["config_fingerprint"] = cfg.fingerprint();
    report["lead"] = lead_mode_name(cfg.lead_mode);
    report["tol_ms"] = cfg.score_tol_ms;
    report["recovery"] = cfg.recovery;
    report["records"] = record_rows;
    report["aggregate"] = {{"base", score_json(agg_base)}, {"with_recovery", score_json(agg_rec)}};
    write_text(fs::path(cfg.out_dir) / "detect_report.json", report.dump(2) + "\n");

    if (agg_rec.tp + agg_rec.fn > 0) {
        log << "detect: Se " << 100.0 * agg_rec.se() << "% +P " << 100.0 * agg_rec.ppv()
            << "% (base Se " << 100.0 * agg_base.se() << "% +P " << 100.0 * agg_base.ppv()
            << "%)\n";
    } else {
        log << "detect: no annotated records to score; peak lists written\n";
    }
    return any_skipped ? exit_data : exit_ok;
}

// ---------------------------------------------------------------------------
// cmd_trainval
// ---------------------------------------------------------------------------

namespace detail {

struct FeatureTable {
    Eigen::MatrixXd x;
    std::vector<int> y;                      // class ints
    std::vector<features::BeatFeatures> rows;
};

inline FeatureTable to_table(const std::vector<features::BeatFeatures>& rows, bool binary) {
    FeatureTable t;
    std::vector<const features::BeatFeatures*> usable;
    for (const auto& r : rows) {
        if (!r.label || *r.label == wfdb::AamiClass::Q) continue;  // class Q not classified
        usable.push_back(&r);
    }
    t.x.resize(static_cast<Eigen::Index>(usable.size()), 6);
    for (size_t i = 0; i < usable.size(); ++i) {
        const auto& r = *usable[i];
        t.x.row(static_cast<Eigen::Index>(i)) << r.zeta, r.r_amp, r.rr_prev, r.rr_next,
            r.rr_mean10, r.qrs_dur;
        const int cls = static_cast<int>(*r.label);
        t.y.push_back(binary ? (cls == 0 ? 0 : 1) : cls);
        t.rows.push_back(r);
    }
    return t;
}

inline ml::SvmParams paper_defaults(const std::string& task, ml::SvmParams base) {
    if (task == "binary") {
        base.C = 8.38;
        base.gamma = 0.52;
        base.class_weights = {{0, 1.0}, {1, 5.0}};
    } else {
        base.C = 3.98;
        base.gamma = 1.98;
        base.class_weights = {{0, 0.42}, {1, 55.0}, {2, 0.85}, {3, 5.3}};
    }
    return base;
}

inline ml::GridSpec default_grid(const std::string& task) {
    ml::GridSpec g;
    if (task == "binary") {
        g.c_values = {1.0, 2.9, 8.38, 24.0};
        g.gamma_values = {0.18, 0.52, 1.5};
        g.weight_sets = {{{0, 1.0}, {1, 1.0}}, {{0, 1.0}, {1, 5.0}}, {{0, 1.0}, {1, 10.0}}};
    } else {
        g.c_values = {1.4, 3.98, 11.2};
        g.gamma_values = {0.7, 1.98, 5.6};
        g.weight_sets = {{{0, 1.0}, {1, 1.0}, {2, 1.0}, {3, 1.0}},
                         {{0, 0.42}, {1, 55.0}, {2, 0.85}, {3, 5.3}},
                         {{0, 1.0}, {1, 50.0}, {2, 1.0}, {3, 5.0}}};
    }
    return g;
}

}  // namespace detail

inline int cmd_trainval(const PipelineConfig& cfg, std::ostream& log) {
    try {
        const auto paths = list_record_paths(cfg.data_dir);
        std::map<std::string, fs::path> by_id;
        for (const auto& p : paths) by_id[p.stem().string()] = p;

        std::set<std::string> train_ids = parse_id_list(cfg.train_records);
        std::set<std::string> test_ids = parse_id_list(cfg.test_records);
        if (train_ids.empty() || test_ids.empty()) {
            // the standard MIT-BIH split, validated against the reference counts
            std::vector<wfdb::EcgRecord> all;
            for (const auto& [id, p] : by_id) all.push_back(load_record(p));
            const auto split = wfdb::split_ds(all);
            train_ids = {split.ds1.begin(), split.ds1.end()};
            test_ids = {split.ds2.begin(), split.ds2.end()};
            log << "split: DS1/DS2 validated against reference counts\n";
        }

        const bool binary = cfg.task == "binary";
        const std::vector<std::string> class_names =
            binary ? std::vector<std::string>{"N", "abnormal"}
                   : std::vector<std::string>{"N", "S", "V", "F"};
        const std::vector<size_t> leads =
            cfg.lead_mode == LeadMode::merged
                ? std::vector<size_t>{0, 1}
                : std::vector<size_t>{cfg.lead_mode == LeadMode::secondary ? size_t{1} : size_t{0}};

        std::map<size_t, std::vector<features::BeatFeatures>> train_rows, test_rows;
        for (const auto& id : train_ids) {
            if (!by_id.count(id)) throw DataError("train record missing: " + id);
            const auto rec = load_record(by_id[id]);
            if (rec.beats().empty()) throw DataError("missing annotations for " + id);
            for (size_t l : leads) {
                auto f = training_features(rec, l, cfg);
                auto& dst = train_rows[l];
                dst.insert(dst.end(), f.begin(), f.end());
            }
        }
        for (const auto& id : test_ids) {
            if (!by_id.count(id)) throw DataError("test record missing: " + id);
            const auto rec = load_record(by_id[id]);
            if (rec.beats().empty()) throw DataError("missing annotations for " + id);
            for (size_t l : leads) {
                auto f = training_features(rec, l, cfg);
                auto& dst = test_rows[l];
                dst.insert(dst.end(), f.begin(), f.end());
            }
        }

        fs::create_directories(cfg.out_dir);
        features::write_features_csv((fs::path(cfg.out_dir) / "features_train.csv").string(),
                                     train_rows[leads[0]]);
        features::write_features_csv((fs::path(cfg.out_dir) / "features_test.csv").string(),
                                     test_rows[leads[0]]);

        std::map<size_t, ml::SvmModel> models;
        ml::SvmParams params = cfg.paper_params && !cfg.run_cv
                                   ? detail::paper_defaults(cfg.task, cfg.svm)
                                   : cfg.svm;
        for (size_t l : leads) {
            auto table = detail::to_table(train_rows[l], binary);
            if (cfg.run_cv) {
                const auto grid = detail::default_grid(cfg.task);
                const auto res = ml::grid_search_cv(table.x, table.y, grid, cfg.cv_folds,
                                                    cfg.seed, cfg.svm);
                params = res.best;
                log << "cv lead " << l << ": best C=" << params.C << " gamma=" << params.gamma
                    << " score=" << res.best_score << "\n";
            }
            models.emplace(l, ml::svm_train(table.x, table.y, params));
            write_text(fs::path(cfg.out_dir) /
                           ("model_" + cfg.task + "_lead" + std::to_string(l) + ".json"),
                       svm_model_to_json(models.at(l)).dump() + "\n");
        }

        // evaluate on the test set; merged mode pools votes across leads and
        // requires the per-lead tables to align row-by-row
        std::vector<int> pred, ref;
        const auto table0 = detail::to_table(test_rows[leads[0]], binary);
        if (cfg.lead_mode == LeadMode::merged) {
            const auto table1 = detail::to_table(test_rows[leads[1]], binary);
            std::map<std::pair<std::string, std::int64_t>, Eigen::Index> index1;
            for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(table1.rows.size()); ++i) {
                index1[{table1.rows[static_cast<size_t>(i)].record_id,
                        table1.rows[static_cast<size_t>(i)].sample_index}] = i;
            }
            for (size_t i = 0; i < table0.rows.size(); ++i) {
                const auto key = std::make_pair(table0.rows[i].record_id, table0.rows[i].sample_index);
                const auto it = index1.find(key);
                if (it == index1.end()) continue;
                pred.push_back(ml::svm_predict_merged(models.at(leads[0]), models.at(leads[1]),
                                                      table0.x.row(static_cast<Eigen::Index>(i)),
                                                      table1.x.row(it->second)));
                ref.push_back(table0.y[i]);
            }
        } else {
            for (Eigen::Index i = 0; i < table0.x.rows(); ++i) {
                pred.push_back(ml::svm_predict(models.at(leads[0]), table0.x.row(i)));
                ref.push_back(table0.y[static_cast<size_t>(i)]);
            }
        }
        const auto rep = ml::evaluate(pred, ref, class_names);

        ordered_json report;
        report["command"] = "trainval";
        report["config_fingerprint"] = cfg.fingerprint();
        report["task"] = cfg.task;
        report["lead"] = lead_mode_name(cfg.lead_mode);
        report["params"] = {{"C", params.C}, {"gamma", params.gamma}};
        ordered_json wj;
        for (const auto& [c, w] : params.class_weights) wj[std::to_string(c)] = w;
        report["params"]["class_weights"] = wj;
        report["train_beats"] = detail::to_table(train_rows[leads[0]], binary).y.size();
        report["test_beats"] = ref.size();
        report["eval"] = eval_json(rep);
        write_text(fs::path(cfg.out_dir) / ("eval_" + cfg.task + ".json"), report.dump(2) + "\n");
        write_confusion_csv(fs::path(cfg.out_dir) / ("confusion_" + cfg.task + ".csv"), rep);

        log << "trainval " << cfg.task << ": ACC " << rep.acc << "% on " << ref.size()
            << " test beats\n";
        return exit_ok;
    } catch (const IntegrityError& e) {
        log << "integrity error: " << e.what() << "\n";
        return exit_integrity;
    } catch (const ConvergenceError& e) {
        log << "convergence error: " << e.what() << "\n";
        return exit_convergence;
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return exit_data;
    }
}

// ---------------------------------------------------------------------------
// cmd_quality
// ---------------------------------------------------------------------------

inline int cmd_quality(const PipelineConfig& cfg, std::ostream& log) {
    try {
        if (cfg.labels_path.empty()) throw DataError("quality labels CSV required");
        std::ifstream lf(cfg.labels_path);
        if (!lf) throw DataError("cannot open labels: " + cfg.labels_path);

        // labels: record_id,sample_index,quality with quality in {LQ, MQ, HQ}
        std::map<std::pair<std::string, std::int64_t>, int> labels;
        const std::map<std::string, int> level = {{"LQ", 0}, {"MQ", 1}, {"HQ", 2}};
        std::string line;
        while (std::getline(lf, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::stringstream ss(line);
            std::string id, idx, q;
            if (!std::getline(ss, id, ',') || !std::getline(ss, idx, ',') ||
                !std::getline(ss, q, ','))
                continue;
            q.erase(std::remove_if(q.begin(), q.end(), ::isspace), q.end());
            if (!level.count(q)) continue;
            labels[{id, std::stoll(idx)}] = level.at(q);
        }
        if (labels.empty()) throw DataError("labels file holds no LQ/MQ/HQ rows");

        const auto paths = list_record_paths(cfg.data_dir);
        std::set<std::string> use_ids;
        {
            std::set<std::string> present;
            for (const auto& p : paths) present.insert(p.stem().string());
            bool full_mitbih = present.size() == 48;
            for (const auto& id : wfdb::ds1_record_ids()) full_mitbih &= present.count(id) > 0;
            for (const auto& id : wfdb::ds2_record_ids()) full_mitbih &= present.count(id) > 0;
            if (full_mitbih) {
                use_ids.insert(wfdb::ds1_record_ids().begin(), wfdb::ds1_record_ids().end());
                use_ids.insert(wfdb::ds2_record_ids().begin(), wfdb::ds2_record_ids().end());
            } else {
                use_ids = present;
            }
        }

        // quality features: phase, amplitude and RR intervals at the beat
        std::vector<std::array<double, 5>> feats;
        std::vector<int> y;
        std::vector<std::pair<std::string, std::int64_t>> unmatched;
        for (const auto& p : paths) {
            if (!use_ids.count(p.stem().string())) continue;
            const auto rec = load_record(p);
            if (rec.beats().empty()) continue;
            for (size_t l = 0; l < 1; ++l) {
                const auto rows = training_features(rec, l, cfg);
                for (const auto& r : rows) {
                    const auto key = std::make_pair(r.record_id, r.sample_index);
                    const auto it = labels.find(key);
                    if (it == labels.end()) {
                        unmatched.push_back(key);
                        continue;
                    }
                    feats.push_back({r.zeta, r.r_amp, r.rr_prev, r.rr_next, r.rr_mean10});
                    y.push_back(it->second);
                }
            }
        }
        if (!unmatched.empty()) {
            log << "label/beat join mismatch for " << unmatched.size() << " beats:\n";
            for (size_t i = 0; i < std::min<size_t>(unmatched.size(), 20); ++i) {
                log << "  " << unmatched[i].first << " @ " << unmatched[i].second << "\n";
            }
            return exit_data;
        }
        if (feats.empty()) throw DataError("no labeled beats to classify");

        std::set<int> distinct(y.begin(), y.end());
        if (distinct.size() < 2) {
            log << "warning: degenerate strata, only one quality level present\n";
        }

        Eigen::MatrixXd x(static_cast<Eigen::Index>(feats.size()), 5);
        for (size_t i = 0; i < feats.size(); ++i) {
            for (int c = 0; c < 5; ++c) x(static_cast<Eigen::Index>(i), c) = feats[i][static_cast<size_t>(c)];
        }

        const auto fold_of = ml::stratified_folds(y, cfg.cv_folds, cfg.seed);
        std::vector<int> pred(y.size(), -1);
        for (int f = 0; f < cfg.cv_folds; ++f) {
            std::vector<int> tr, va;
            for (size_t i = 0; i < y.size(); ++i) (fold_of[i] == f ? va : tr).push_back(static_cast<int>(i));
            Eigen::MatrixXd xt(static_cast<Eigen::Index>(tr.size()), 5);
            std::vector<int> yt(tr.size());
            for (size_t i = 0; i < tr.size(); ++i) {
                xt.row(static_cast<Eigen::Index>(i)) = x.row(tr[i]);
                yt[i] = y[static_cast<size_t>(tr[i])];
            }
            const auto model = ml::knn_fit(xt, yt, cfg.knn_k);
            for (int i : va) pred[static_cast<size_t>(i)] = ml::knn_predict(model, x.row(i));
        }

        const auto rep = ml::evaluate(pred, y, {"LQ", "MQ", "HQ"});
        fs::create_directories(cfg.out_dir);
        ordered_json report;
        report["command"] = "quality";
        report["config_fingerprint"] = cfg.fingerprint();
        report["k"] = cfg.knn_k;
        report["folds"] = cfg.cv_folds;
        report["beats"] = y.size();
        report["eval"] = eval_json(rep);
        write_text(fs::path(cfg.out_dir) / "quality_report.json", report.dump(2) + "\n");
        write_confusion_csv(fs::path(cfg.out_dir) / "confusion_quality.csv", rep);
        log << "quality: ACC " << rep.acc << "% over " << y.size() << " beats\n";
        return exit_ok;
    } catch (const ConvergenceError& e) {
        log << "convergence error: " << e.what() << "\n";
        return exit_convergence;
    } catch (const IntegrityError& e) {
        log << "integrity error: " << e.what() << "\n";
        return exit_integrity;
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return exit_data;
    }
}

}  // namespace sstecg::pipeline

#pragma once

#include <array>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "sstecg/common.hpp"

namespace sstecg::wfdb {

enum class AamiClass : int { N = 0, S = 1, V = 2, F = 3, Q = 4 };

inline const char* aami_name(AamiClass c) {
    switch (c) {
        case AamiClass::N: return "N";
        case AamiClass::S: return "S";
        case AamiClass::V: return "V";
        case AamiClass::F: return "F";
        case AamiClass::Q: return "Q";
    }
    return "?";
}

// Beat symbol -> AAMI class. Non-beat and unknown symbols yield no class.
inline std::optional<AamiClass> map_beat_class(char symbol) {
    switch (symbol) {
        case 'N': case 'L': case 'R': case 'e': case 'j':
            return AamiClass::N;
        case 'A': case 'a': case 'J': case 'S':
            return AamiClass::S;
        case 'V': case 'E':
            return AamiClass::V;
        case 'F':
            return AamiClass::F;
        case '/': case 'f': case 'Q':
            return AamiClass::Q;
        default:
            return std::nullopt;
    }
}

// MIT annotation code <-> mnemonic tables (codes 0..49).
inline const std::array<char, 50>& annotation_symbols() {
    static const std::array<char, 50> tbl = {
        ' ', 'N', 'L', 'R', 'a', 'V', 'F', 'J', 'A', 'S',
        'E', 'j', '/', 'Q', '~', '?', '|', '?', 's', 'T',
        '*', 'D', '"', '=', 'p', 'B', '^', 't', '+', 'u',
        '?', '!', 'x', 'f', '(', ')', 'e', 'n', '@', '?',
        '?', 'r', '?', '?', '?', '?', '?', '?', '?', '?'};
    return tbl;
}

inline bool code_is_beat(int code) {
    static const std::array<bool, 50> qrs = {
        false, true,  true,  true,  true,  true,  true,  true,  true,  true,
        true,  true,  true,  true,  false, false, false, false, false, false,
        false, false, false, false, false, true,  false, false, false, false,
        true,  true,  false, true,  false, false, true,  true,  false, false,
        false, true,  false, false, false, false, false, false, false, false};
    return code >= 0 && code < 50 && qrs[static_cast<size_t>(code)];
}

inline int symbol_to_code(char symbol) {
    const auto& tbl = annotation_symbols();
    for (int c = 1; c < 50; ++c) {
        if (tbl[static_cast<size_t>(c)] == symbol && tbl[static_cast<size_t>(c)] != '?') return c;
    }
    return -1;
}

struct Annotation {
    std::int64_t sample_index = 0;
    char symbol = ' ';
    int code = 0;
    bool is_beat = false;
    std::optional<AamiClass> aami;
};

struct Lead {
    std::string name;
    Signal samples;  // mV after gain/baseline correction
    double gain = 200.0;
    int baseline = 0;
};

struct EcgRecord {
    std::string record_id;
    double fs = 0;
    std::vector<Lead> leads;
    std::vector<Annotation> annotations;  // all annotations, beats and others
    bool lead_names_flagged = false;      // channel 0 is not an MLII-style lead

    std::int64_t n_samples() const {
        return leads.empty() ? 0 : static_cast<std::int64_t>(leads.front().samples.size());
    }

    std::vector<Annotation> beats() const {
        std::vector<Annotation> out;
        for (const auto& a : annotations) {
            if (a.is_beat) out.push_back(a);
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// format 212: two 12-bit two's-complement samples packed into 3 bytes
// ---------------------------------------------------------------------------

inline std::vector<std::int16_t> decode_format212(std::span<const std::uint8_t> bytes,
                                                  size_t n_samples) {
    const size_t need = (n_samples + 1) / 2 * 3;
    if (bytes.size() < need) throw DataError("format 212: truncated payload");
    std::vector<std::int16_t> out;
    out.reserve(n_samples);
    for (size_t i = 0; i + 2 < need; i += 3) {
        int s1 = bytes[i] | ((bytes[i + 1] & 0x0F) << 8);
        int s2 = ((bytes[i + 1] & 0xF0) << 4) | bytes[i + 2];
        if (s1 & 0x800) s1 -= 0x1000;
        if (s2 & 0x800) s2 -= 0x1000;
        out.push_back(static_cast<std::int16_t>(s1));
        if (out.size() < n_samples) out.push_back(static_cast<std::int16_t>(s2));
    }
    out.resize(n_samples);
    return out;
}

inline std::vector<std::uint8_t> encode_format212(std::span<const std::int16_t> samples) {
    std::vector<std::uint8_t> out;
    out.reserve((samples.size() + 1) / 2 * 3);
    for (size_t i = 0; i < samples.size(); i += 2) {
        const int s1 = samples[i];
        const int s2 = i + 1 < samples.size() ? samples[i + 1] : 0;
        if (s1 < -2048 || s1 > 2047 || s2 < -2048 || s2 > 2047) {
            throw InvalidArgument("format 212: sample out of 12-bit range");
        }
        const unsigned u1 = static_cast<unsigned>(s1) & 0xFFFu;
        const unsigned u2 = static_cast<unsigned>(s2) & 0xFFFu;
        out.push_back(static_cast<std::uint8_t>(u1 & 0xFF));
        out.push_back(static_cast<std::uint8_t>(((u1 >> 8) & 0x0F) | ((u2 >> 4) & 0xF0)));
        out.push_back(static_cast<std::uint8_t>(u2 & 0xFF));
    }
    return out;
}

// ---------------------------------------------------------------------------
// MIT annotation file: 2-byte words, 6-bit code + 10-bit time increment;
// codes 59-63 are SKIP / NUM / SUB / CHN / AUX pseudo-annotations
// ---------------------------------------------------------------------------

inline std::vector<Annotation> decode_annotations(std::span<const std::uint8_t> bytes) {
    std::vector<Annotation> out;
    std::int64_t time = 0;
    size_t i = 0;
    auto word_at = [&](size_t j) -> unsigned {
        return static_cast<unsigned>(bytes[j]) | (static_cast<unsigned>(bytes[j + 1]) << 8);
    };
    while (i + 1 < bytes.size()) {
        const unsigned w = word_at(i);
        i += 2;
        const int code = static_cast<int>(w >> 10);
        const int interval = static_cast<int>(w & 0x3FF);
        if (w == 0) break;  // end of file
        if (code == 59) {   // SKIP: 4-byte interval, high word first
            if (i + 3 >= bytes.size()) throw DataError("annotations: truncated skip interval");
            const unsigned hi = word_at(i);
            const unsigned lo = word_at(i + 2);
            i += 4;
            auto delta = static_cast<std::int64_t>((static_cast<std::uint32_t>(hi) << 16) | lo);
            if (delta & 0x80000000LL) delta -= 0x100000000LL;
            time += delta;
            continue;
        }
        if (code == 60 || code == 61 || code == 62) continue;  // NUM / SUB / CHN
        if (code == 63) {                                      // AUX: length + padded bytes
            size_t len = static_cast<size_t>(interval);
            len += len & 1;
            if (i + len > bytes.size()) throw DataError("annotations: truncated aux field");
            i += len;
            continue;
        }
        time += interval;
        Annotation a;
        a.sample_index = time;
        a.code = code;
        a.symbol = code < 50 ? annotation_symbols()[static_cast<size_t>(code)] : '?';
        a.is_beat = code_is_beat(code);
        a.aami = a.is_beat ? map_beat_class(a.symbol) : std::nullopt;
        out.push_back(a);
    }
    return out;
}

inline std::vector<std::uint8_t> encode_annotations(std::span<const Annotation> anns) {
    std::vector<std::uint8_t> out;
    auto put_word = [&](unsigned w) {
        out.push_back(static_cast<std::uint8_t>(w & 0xFF));
        out.push_back(static_cast<std::uint8_t>((w >> 8) & 0xFF));
    };
    std::int64_t time = 0;
    for (const auto& a : anns) {
        std::int64_t delta = a.sample_index - time;
        if (delta < 0) throw InvalidArgument("encode_annotations: indices must be increasing");
        if (delta > 1023) {
            put_word(59u << 10);
            const auto d = static_cast<std::uint32_t>(delta);
            put_word((d >> 16) & 0xFFFF);
            put_word(d & 0xFFFF);
            delta = 0;
        }
        put_word((static_cast<unsigned>(a.code) << 10) | static_cast<unsigned>(delta));
        time = a.sample_index;
    }
    put_word(0);
    return out;
}

// ---------------------------------------------------------------------------
// header + record reading
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

struct SignalSpec {
    std::string file;
    int format = 0;
    double gain = 200.0;
    int baseline = 0;
    int adc_zero = 0;
    std::string description;
};

inline std::vector<std::uint8_t> read_all_bytes(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw DataError("cannot open " + p.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

}  // namespace detail

// Parse a WFDB header plus its format-212 signal file and, when present, the
// companion .atr annotation file. Samples are converted to millivolts with
// the per-lead gain and baseline.
inline EcgRecord read_record(const std::filesystem::path& header_path) {
    std::ifstream hf(header_path);
    if (!hf) throw DataError("cannot open header " + header_path.string());

    std::string line;
    std::vector<std::string> lines;
    while (std::getline(hf, line)) {
        line = detail::trim(line);
        if (line.empty() || line[0] == '#') continue;
        lines.push_back(line);
    }
    if (lines.empty()) throw DataError("malformed header: " + header_path.string());

    const auto head = detail::split_ws(lines[0]);
    if (head.size() < 2) throw DataError("malformed header record line: " + header_path.string());
    EcgRecord rec;
    rec.record_id = head[0].substr(0, head[0].find('/'));
    int nsig = 0;
    std::int64_t nsamples = -1;
    try {
        nsig = std::stoi(head[1]);
        rec.fs = head.size() > 2 ? std::stod(head[2].substr(0, head[2].find('/'))) : 250.0;
        if (head.size() > 3) nsamples = std::stoll(head[3]);
    } catch (const std::exception&) {
        throw DataError("malformed header record line: " + header_path.string());
    }
    if (nsig < 1 || static_cast<int>(lines.size()) < 1 + nsig) {
        throw DataError("malformed header: missing signal lines in " + header_path.string());
    }
    if (!(rec.fs > 0)) throw DataError("malformed header: bad sampling rate");

    std::vector<detail::SignalSpec> specs;
    for (int s = 0; s < nsig; ++s) {
        const auto tok = detail::split_ws(lines[static_cast<size_t>(1 + s)]);
        if (tok.size() < 2) throw DataError("malformed signal line in " + header_path.string());
        detail::SignalSpec sp;
        sp.file = tok[0];
        std::string fmt = tok[1];
        for (const char c : std::string("x:+")) {
            if (const auto pos = fmt.find(c); pos != std::string::npos) fmt = fmt.substr(0, pos);
        }
        try {
            sp.format = std::stoi(fmt);
            if (tok.size() > 2) {
                std::string g = tok[2];
                if (const auto slash = g.find('/'); slash != std::string::npos) g = g.substr(0, slash);
                if (const auto par = g.find('('); par != std::string::npos) {
                    sp.baseline = std::stoi(g.substr(par + 1));
                    g = g.substr(0, par);
                }
                sp.gain = std::stod(g);
                if (sp.gain == 0.0) sp.gain = 200.0;
            }
            if (tok.size() > 4) sp.adc_zero = std::stoi(tok[4]);
        } catch (const std::exception&) {
            throw DataError("malformed signal line in " + header_path.string());
        }
        if (tok.size() > 2 && tok[2].find('(') == std::string::npos) sp.baseline = sp.adc_zero;
        if (tok.size() > 8) {
            sp.description = tok[8];
            for (size_t t = 9; t < tok.size(); ++t) sp.description += " " + tok[t];
        }
        if (sp.format != 212) {
            throw DataError("unsupported storage format " + std::to_string(sp.format) + " in " +
                            header_path.string());
        }
        specs.push_back(sp);
    }
    for (const auto& sp : specs) {
        if (sp.file != specs[0].file) {
            throw DataError("format 212 signals must share one file: " + header_path.string());
        }
    }
    if (nsig > 2) throw DataError("format 212 supports at most 2 interleaved signals");

    const auto dir = header_path.parent_path();
    const auto bytes = detail::read_all_bytes(dir / specs[0].file);
    if (bytes.empty()) throw DataError("truncated signal file: " + (dir / specs[0].file).string());

    if (nsamples < 0) {
        nsamples = static_cast<std::int64_t>(bytes.size() / 3 * 2 / nsig);
    }
    const auto total = static_cast<size_t>(nsamples) * static_cast<size_t>(nsig);
    const auto raw = decode_format212(bytes, total);

    for (int s = 0; s < nsig; ++s) {
        Lead lead;
        lead.name = specs[static_cast<size_t>(s)].description;
        lead.gain = specs[static_cast<size_t>(s)].gain;
        lead.baseline = specs[static_cast<size_t>(s)].baseline;
        lead.samples.resize(static_cast<size_t>(nsamples));
        for (std::int64_t i = 0; i < nsamples; ++i) {
            const auto v = raw[static_cast<size_t>(i * nsig + s)];
            lead.samples[static_cast<size_t>(i)] =
                (static_cast<double>(v) - lead.baseline) / lead.gain;
        }
        rec.leads.push_back(std::move(lead));
    }
    if (!rec.leads.empty()) {
        const auto& nm = rec.leads[0].name;
        rec.lead_names_flagged = !(nm.empty() || nm.find("II") != std::string::npos ||
                                   nm.find("ii") != std::string::npos);
    }

    const auto ann_path = dir / (rec.record_id + ".atr");
    if (std::filesystem::exists(ann_path)) {
        rec.annotations = decode_annotations(detail::read_all_bytes(ann_path));
        // non-beat annotations may share a sample with a beat; beat indices
        // themselves must strictly increase
        std::int64_t prev = -1, prev_beat = -1;
        for (const auto& a : rec.annotations) {
            if (a.sample_index < prev) {
                throw DataError("annotations not sorted in " + ann_path.string());
            }
            if (a.is_beat) {
                if (a.sample_index <= prev_beat) {
                    throw DataError("beat annotations not strictly increasing in " +
                                    ann_path.string());
                }
                prev_beat = a.sample_index;
            }
            if (a.sample_index >= nsamples) {
                throw DataError("annotation index beyond signal end in " + ann_path.string());
            }
            prev = a.sample_index;
        }
    }
    return rec;
}

// CSV fallback: first column time in seconds, remaining columns one lead
// each (header row optional). Annotations may accompany the file as
// `<stem>.ann.csv` with columns sample_index,symbol.
inline EcgRecord read_csv_record(const std::filesystem::path& csv_path) {
    std::ifstream f(csv_path);
    if (!f) throw DataError("cannot open " + csv_path.string());
    EcgRecord rec;
    rec.record_id = csv_path.stem().string();

    std::string line;
    std::vector<std::string> lead_names;
    std::vector<double> times;
    bool first = true;
    while (std::getline(f, line)) {
        line = detail::trim(line);
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(detail::trim(cell));
        if (cells.size() < 2) throw DataError("csv record needs time plus one lead column");
        if (first) {
            first = false;
            bool numeric = true;
            try {
                (void)std::stod(cells[0]);
            } catch (const std::exception&) {
                numeric = false;
            }
            if (!numeric) {
                for (size_t c = 1; c < cells.size(); ++c) lead_names.push_back(cells[c]);
                continue;
            }
        }
        if (rec.leads.empty()) {
            rec.leads.resize(cells.size() - 1);
            for (size_t c = 0; c < rec.leads.size(); ++c) {
                rec.leads[c].name = c < lead_names.size() ? lead_names[c]
                                                          : "ch" + std::to_string(c);
            }
        }
        if (cells.size() != rec.leads.size() + 1) throw DataError("csv record: ragged row");
        try {
            times.push_back(std::stod(cells[0]));
            for (size_t c = 0; c < rec.leads.size(); ++c) {
                rec.leads[c].samples.push_back(std::stod(cells[c + 1]));
            }
        } catch (const std::exception&) {
            throw DataError("csv record: non-numeric cell in " + csv_path.string());
        }
    }
    if (times.size() < 2) throw DataError("csv record too short: " + csv_path.string());
    const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    if (!(dt > 0)) throw DataError("csv record: time column must increase");
    for (size_t i = 1; i < times.size(); ++i) {
        if (std::abs(times[i] - times[i - 1] - dt) > 1e-6 * std::max(1.0, dt)) {
            throw DataError("csv record: non-uniform sampling in " + csv_path.string());
        }
    }
    rec.fs = 1.0 / dt;

    auto ann_path = csv_path;
    ann_path.replace_extension();
    ann_path += ".ann.csv";
    if (std::filesystem::exists(ann_path)) {
        std::ifstream af(ann_path);
        std::int64_t prev = -1;
        while (std::getline(af, line)) {
            line = detail::trim(line);
            if (line.empty() || line[0] == '#') continue;
            std::stringstream ss(line);
            std::string si, sym;
            if (!std::getline(ss, si, ',') || !std::getline(ss, sym, ',')) continue;
            si = detail::trim(si);
            sym = detail::trim(sym);
            if (si.empty() || !std::isdigit(static_cast<unsigned char>(si[0]))) continue;
            Annotation a;
            a.sample_index = std::stoll(si);
            a.symbol = sym.empty() ? 'N' : sym[0];
            a.code = symbol_to_code(a.symbol);
            a.is_beat = a.code >= 0 && code_is_beat(a.code);
            a.aami = a.is_beat ? map_beat_class(a.symbol) : std::nullopt;
            if (a.sample_index <= prev || a.sample_index >= rec.n_samples()) {
                throw DataError("csv annotations invalid in " + ann_path.string());
            }
            prev = a.sample_index;
            rec.annotations.push_back(a);
        }
    }
    return rec;
}

// ---------------------------------------------------------------------------
// DS1/DS2 split (de Chazal record lists) with hard count validation
// ---------------------------------------------------------------------------

struct DatasetSplit {
    std::vector<std::string> ds1;
    std::vector<std::string> ds2;
    std::vector<std::string> excluded_paced;
};

inline const std::vector<std::string>& ds1_record_ids() {
    static const std::vector<std::string> ids = {
        "101", "106", "108", "109", "112", "114", "115", "116", "118", "119", "122",
        "124", "201", "203", "205", "207", "208", "209", "215", "220", "223", "230"};
    return ids;
}

inline const std::vector<std::string>& ds2_record_ids() {
    static const std::vector<std::string> ids = {
        "100", "103", "105", "111", "113", "117", "121", "123", "200", "202", "210",
        "212", "213", "214", "219", "221", "222", "228", "231", "232", "233", "234"};
    return ids;
}

inline const std::vector<std::string>& paced_record_ids() {
    static const std::vector<std::string> ids = {"102", "104", "107", "217"};
    return ids;
}

// Reference per-symbol beat counts for each set.
inline const std::map<char, std::pair<std::int64_t, std::int64_t>>& reference_split_counts() {
    //                         symbol -> {DS1, DS2}
    static const std::map<char, std::pair<std::int64_t, std::int64_t>> counts = {
        {'N', {38102, 36444}}, {'L', {3949, 4126}}, {'R', {3783, 3476}}, {'A', {810, 1736}},
        {'a', {100, 50}},      {'J', {32, 51}},     {'S', {2, 0}},       {'V', {3683, 3220}},
        {'F', {415, 388}},     {'e', {16, 0}},      {'j', {16, 213}},    {'E', {105, 1}},
        {'Q', {8, 7}},
    };
    return counts;
}

inline DatasetSplit split_ds(const std::vector<EcgRecord>& records) {
    if (records.size() != 48) {
        throw DataError("split_ds: expected all 48 records, got " +
                        std::to_string(records.size()));
    }
    auto in = [](const std::vector<std::string>& ids, const std::string& id) {
        return std::find(ids.begin(), ids.end(), id) != ids.end();
    };
    DatasetSplit split;
    std::map<char, std::pair<std::int64_t, std::int64_t>> counts;
    for (const auto& rec : records) {
        const bool is1 = in(ds1_record_ids(), rec.record_id);
        const bool is2 = in(ds2_record_ids(), rec.record_id);
        const bool paced = in(paced_record_ids(), rec.record_id);
        if (!is1 && !is2 && !paced) {
            throw DataError("split_ds: unknown record id " + rec.record_id);
        }
        if (paced) {
            split.excluded_paced.push_back(rec.record_id);
            continue;
        }
        (is1 ? split.ds1 : split.ds2).push_back(rec.record_id);
        for (const auto& a : rec.annotations) {
            if (!a.is_beat) continue;
            auto& c = counts[a.symbol];
            (is1 ? c.first : c.second) += 1;
        }
    }
    if (split.ds1.size() != 22 || split.ds2.size() != 22 || split.excluded_paced.size() != 4) {
        throw IntegrityError("split_ds: record partition sizes are off");
    }
    for (const auto& [sym, expect] : reference_split_counts()) {
        const auto got = counts.count(sym) ? counts[sym] : std::pair<std::int64_t, std::int64_t>{0, 0};
        if (got.first != expect.first) {
            throw IntegrityError(std::string("split_ds: DS1 count mismatch for '") + sym +
                                 "': expected " + std::to_string(expect.first) + ", got " +
                                 std::to_string(got.first));
        }
        if (got.second != expect.second) {
            throw IntegrityError(std::string("split_ds: DS2 count mismatch for '") + sym +
                                 "': expected " + std::to_string(expect.second) + ", got " +
                                 std::to_string(got.second));
        }
    }
    return split;
}

}  // namespace sstecg::wfdb

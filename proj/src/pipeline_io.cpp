#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ckl/pipeline.hpp"

namespace ckl {

const char* to_string(PsdMode m) {
    return m == PsdMode::FULL_MATRIX ? "full" : "train-only";
}

const char* to_string(SdsKind k) {
    switch (k) {
        case SdsKind::SDS_2D: return "2d";
        case SdsKind::SDS_CM: return "cm";
        case SdsKind::NONE: return "none";
    }
    return "?";
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoFailure("cannot open " + path + " for reading");
    return f;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoFailure("cannot open " + path + " for writing");
    return f;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            parts.push_back(s.substr(start));
            break;
        }
        parts.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

double parse_double(const std::string& s, const std::string& what) {
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE)
        throw ValidationError("cannot parse " + what + ": '" + s + "'");
    return v;
}

std::int64_t parse_int(const std::string& s, const std::string& what) {
    errno = 0;
    char* end = nullptr;
    long long v = std::strtoll(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE)
        throw ValidationError("cannot parse " + what + ": '" + s + "'");
    return v;
}

void check_drug_id(const std::string& id) {
    if (id.empty()) throw ValidationError("empty drug id");
    if (id.find(',') != std::string::npos || id.find(';') != std::string::npos)
        throw ValidationError("drug id may not contain ',' or ';': " + id);
}

} // namespace

EventLog read_events_csv(const std::string& path) {
    std::ifstream f = open_in(path);
    EventLog log;
    std::string line;
    if (!std::getline(f, line) || trim(line) != "event_id,adr,drugs")
        throw ValidationError(path + ": expected header 'event_id,adr,drugs'");
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::vector<std::string> cols = split(trim(line), ',');
        if (cols.size() != 3)
            throw ValidationError(path + ":" + std::to_string(line_no) + ": expected 3 columns");
        EventRecord ev;
        ev.event_id = cols[0];
        if (cols[1] == "1")
            ev.adr = true;
        else if (cols[1] == "0")
            ev.adr = false;
        else
            throw ValidationError(path + ":" + std::to_string(line_no) + ": adr must be 0 or 1");
        std::vector<int> indices;
        for (const std::string& id : split(cols[2], ';')) {
            check_drug_id(id);
            indices.push_back(log.drugs.intern(id));
        }
        try {
            ev.combination = canonicalize(std::move(indices));
        } catch (const EmptyCombination&) {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": event without drugs");
        }
        log.events.push_back(std::move(ev));
    }
    return log;
}

void write_events_csv(const std::string& path, const std::vector<EventRecord>& events,
                      const DrugRegistry& drugs) {
    std::ofstream f = open_out(path);
    f << "event_id,adr,drugs\n";
    for (const EventRecord& ev : events) {
        f << ev.event_id << ',' << (ev.adr ? 1 : 0) << ',';
        for (std::size_t i = 0; i < ev.combination.drugs.size(); ++i) {
            if (i) f << ';';
            f << drugs.id(ev.combination.drugs[i]);
        }
        f << '\n';
    }
    if (!f) throw IoFailure("error writing " + path);
}

SymmetricMatrix read_matrix_csv(const std::string& path) {
    std::ifstream f = open_in(path);
    std::string line;
    if (!std::getline(f, line)) throw ValidationError(path + ": empty matrix file");
    int n = static_cast<int>(parse_int(trim(line), "matrix dimension"));
    if (n < 0) throw ValidationError(path + ": negative matrix dimension");
    SymmetricMatrix m(n);
    for (int i = 0; i < n; ++i) {
        if (!std::getline(f, line)) throw ValidationError(path + ": truncated matrix");
        std::vector<std::string> cols = split(trim(line), ',');
        if (static_cast<int>(cols.size()) != n)
            throw ValidationError(path + ": row " + std::to_string(i) + " has wrong width");
        for (int j = 0; j < n; ++j) {
            double v = parse_double(cols[j], "matrix entry");
            if (j >= i) {
                m.set(i, j, v);
            } else if (m(i, j) != v) {
                throw ValidationError(path + ": matrix is not symmetric at (" +
                                      std::to_string(i) + "," + std::to_string(j) + ")");
            }
        }
    }
    return m;
}

void write_matrix_csv(const std::string& path, const SymmetricMatrix& m) {
    std::ofstream f = open_out(path);
    f << m.size() << '\n';
    for (int i = 0; i < m.size(); ++i) {
        for (int j = 0; j < m.size(); ++j) {
            if (j) f << ',';
            f << format_double(m(i, j));
        }
        f << '\n';
    }
    if (!f) throw IoFailure("error writing " + path);
}

std::map<std::string, Fingerprint> read_fingerprints(const std::string& path) {
    std::ifstream f = open_in(path);
    std::map<std::string, Fingerprint> out;
    std::string line;
    std::size_t line_no = 0;
    int width = -1;
    while (std::getline(f, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty()) continue;
        std::size_t tab = t.find('\t');
        if (tab == std::string::npos)
            throw ValidationError(path + ":" + std::to_string(line_no) +
                                  ": expected drug_id<TAB>bitstring");
        std::string id = t.substr(0, tab);
        std::string bits = t.substr(tab + 1);
        check_drug_id(id);
        if (width < 0) width = static_cast<int>(bits.size());
        if (static_cast<int>(bits.size()) != width) throw WidthMismatch();
        out.insert_or_assign(id, Fingerprint::from_bitstring(bits));
    }
    return out;
}

void write_dataset_tsv(const std::string& path, const std::vector<LabeledInstance>& instances,
                       const DrugRegistry& drugs) {
    std::ofstream f = open_out(path);
    for (const LabeledInstance& inst : instances) {
        f << (inst.label > 0 ? "+1" : "-1") << '\t' << to_string(inst.source) << '\t'
          << inst.frequency << '\t'
          << (inst.odds_ratio ? format_double(*inst.odds_ratio) : "NA") << '\t';
        for (std::size_t i = 0; i < inst.combination.drugs.size(); ++i) {
            if (i) f << ';';
            f << drugs.id(inst.combination.drugs[i]);
        }
        f << '\n';
    }
    if (!f) throw IoFailure("error writing " + path);
}

std::vector<LabeledInstance> read_dataset_tsv(const std::string& path, const DrugRegistry& drugs) {
    std::ifstream f = open_in(path);
    std::vector<LabeledInstance> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty()) continue;
        std::vector<std::string> cols = split(t, '\t');
        if (cols.size() != 5)
            throw ValidationError(path + ":" + std::to_string(line_no) + ": expected 5 columns");
        LabeledInstance inst;
        if (cols[0] == "+1")
            inst.label = +1;
        else if (cols[0] == "-1")
            inst.label = -1;
        else
            throw ValidationError(path + ":" + std::to_string(line_no) + ": label must be +1/-1");
        inst.source = source_from_string(cols[1]);
        inst.frequency = parse_int(cols[2], "frequency");
        if (cols[3] != "NA") inst.odds_ratio = parse_double(cols[3], "odds ratio");
        bool or_expected = inst.source == Source::M_ZERO || inst.source == Source::N_ZERO;
        if (inst.odds_ratio.has_value() != or_expected)
            throw ValidationError(path + ":" + std::to_string(line_no) +
                                  ": odds ratio must be present exactly for M_ZERO/N_ZERO rows");
        std::vector<int> indices;
        for (const std::string& id : split(cols[4], ';')) {
            auto idx = drugs.find(id);
            if (!idx)
                throw ValidationError(path + ":" + std::to_string(line_no) + ": drug '" + id +
                                      "' not present in the event log");
            indices.push_back(*idx);
        }
        inst.combination = canonicalize(std::move(indices));
        out.push_back(std::move(inst));
    }
    return out;
}

std::unordered_set<int> read_dmyo(const std::string& path, const DrugRegistry& drugs) {
    std::ifstream f = open_in(path);
    std::unordered_set<int> out;
    std::string line;
    while (std::getline(f, line)) {
        std::string id = trim(line);
        if (id.empty() || id[0] == '#') continue;
        if (auto idx = drugs.find(id)) out.insert(*idx);
    }
    return out;
}

namespace {

KernelFamily kernel_from_string(const std::string& s) {
    if (s == "gm") return KernelFamily::GM;
    if (s == "cd1") return KernelFamily::CD1;
    if (s == "cd2") return KernelFamily::CD2;
    if (s == "ds") return KernelFamily::DS;
    if (s == "pb") return KernelFamily::PB;
    throw ConfigInvalid("unknown kernel family: " + s);
}

SdsKind sds_from_string(const std::string& s) {
    if (s == "2d") return SdsKind::SDS_2D;
    if (s == "cm") return SdsKind::SDS_CM;
    if (s == "none") return SdsKind::NONE;
    throw ConfigInvalid("unknown sds kind: " + s);
}

PrunePreset preset_from_string(const std::string& s) {
    if (s == "dstar" || s == "d*" || s == "d_star") return PrunePreset::D_STAR;
    if (s == "d4000") return PrunePreset::D4000;
    if (s == "d2000") return PrunePreset::D2000;
    if (s == "custom") return PrunePreset::CUSTOM;
    throw ConfigInvalid("unknown prune preset: " + s);
}

} // namespace

void RunConfig::validate() const {
    if (folds < 2) throw ConfigInvalid("folds must be at least 2");
    kernel.validate();
    if (kernel.sds_kind == SdsKind::SDS_2D && fingerprints_path.empty())
        throw ConfigInvalid("sds 2d requires a fingerprints file");
    if (svm.C <= 0) throw ConfigInvalid("svm_c must be positive");
    for (double c : c_grid)
        if (c <= 0) throw ConfigInvalid("svm_c_grid entries must be positive");
}

RunConfig load_config(const std::string& path) {
    std::ifstream f = open_in(path);
    RunConfig cfg;
    PruneConfig prune = PruneConfig::d_star();

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigInvalid(path + ":" + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));

        if (key == "events") cfg.events_path = value;
        else if (key == "fingerprints") cfg.fingerprints_path = value;
        else if (key == "dmyo") cfg.dmyo_path = value;
        else if (key == "dataset") cfg.dataset_path = value;
        else if (key == "out") cfg.out_dir = value;
        else if (key == "kernel") cfg.kernel.family = kernel_from_string(value);
        else if (key == "sds") cfg.kernel.sds_kind = sds_from_string(value);
        else if (key == "psd_tolerance") cfg.kernel.psd_tolerance = parse_double(value, key);
        else if (key == "pb_ridge") cfg.kernel.pb_ridge = parse_double(value, key);
        else if (key == "pb_cov_ridge") cfg.kernel.pb_cov_ridge = parse_double(value, key);
        else if (key == "folds") cfg.folds = static_cast<int>(parse_int(value, key));
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(value, key));
        else if (key == "psd_mode") {
            if (value == "full") cfg.psd_mode = PsdMode::FULL_MATRIX;
            else if (value == "train-only") cfg.psd_mode = PsdMode::TRAIN_ONLY;
            else throw ConfigInvalid("psd_mode must be full or train-only");
        }
        else if (key == "svm_c") cfg.svm.C = parse_double(value, key);
        else if (key == "svm_kkt_tol") cfg.svm.kkt_tol = parse_double(value, key);
        else if (key == "svm_max_passes") cfg.svm.max_passes = static_cast<int>(parse_int(value, key));
        else if (key == "svm_c_grid") {
            for (const std::string& part : split(value, ','))
                cfg.c_grid.push_back(parse_double(trim(part), key));
        }
        else if (key == "preset") {
            PrunePreset p = preset_from_string(value);
            if (p == PrunePreset::D_STAR) prune = PruneConfig::d_star();
            else if (p == PrunePreset::D4000) prune = PruneConfig::d4000();
            else if (p == PrunePreset::D2000) prune = PruneConfig::d2000();
            else prune.preset = PrunePreset::CUSTOM;
        }
        else if (key == "top_mplus") prune.top_mplus = static_cast<int>(parse_int(value, key));
        else if (key == "alpha") prune.alpha = parse_double(value, key);
        else if (key == "n_nminus") prune.n_nminus = static_cast<int>(parse_int(value, key));
        else if (key == "top_mzero") prune.top_mzero_by_or = static_cast<int>(parse_int(value, key));
        else if (key == "top_nzero") prune.top_nzero_by_or = static_cast<int>(parse_int(value, key));
        else if (key == "synth_n_drugs") cfg.synth.n_drugs = static_cast<int>(parse_int(value, key));
        else if (key == "synth_n_events") cfg.synth.n_events = static_cast<int>(parse_int(value, key));
        else if (key == "synth_risky_fraction") cfg.synth.risky_drug_fraction = parse_double(value, key);
        else if (key == "synth_mean_order") cfg.synth.mean_order = parse_double(value, key);
        else throw ConfigInvalid(path + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    cfg.prune = prune;
    cfg.synth.seed = cfg.seed;
    return cfg;
}

void RunConfig::finalize_kernel() {
    // Common-drug kernels take no drug similarity; drop a configured sds
    // rather than rejecting the config.
    if (kernel.family == KernelFamily::CD1 || kernel.family == KernelFamily::CD2)
        kernel.sds_kind = SdsKind::NONE;
}

} // namespace ckl

#include "diar/config.hpp"

#include <set>
#include <sstream>
#include <stdexcept>

#include "diar/embedding.hpp"
#include "diar/errors.hpp"

namespace diar {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::istringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

[[noreturn]] void fail(int line, const std::string& what) {
    throw ConfigError("line " + std::to_string(line) + ": " + what);
}

double to_double(const std::string& v, int line) {
    try {
        size_t used = 0;
        double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        fail(line, "bad number '" + v + "'");
    }
}

int to_int(const std::string& v, int line) {
    try {
        size_t used = 0;
        int i = std::stoi(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        fail(line, "bad integer '" + v + "'");
    }
}

bool to_bool(const std::string& v, int line) {
    if (v == "true") return true;
    if (v == "false") return false;
    fail(line, "bad boolean '" + v + "' (use true or false)");
}

DoaMode to_doa_mode(const std::string& v, int line) {
    if (v == "off") return DoaMode::off;
    if (v == "emission") return DoaMode::emission;
    if (v == "transition") return DoaMode::transition;
    if (v == "both") return DoaMode::both;
    fail(line, "bad doa_mode '" + v + "' (off, emission, transition or both)");
}

InitMethod to_init(const std::string& v, int line) {
    if (v == "ahc") return InitMethod::ahc;
    if (v == "spectral") return InitMethod::spectral;
    fail(line, "bad init '" + v + "' (ahc or spectral)");
}

VoteMode to_vote_mode(const std::string& v, int line) {
    if (v == "original") return VoteMode::original;
    if (v == "modified") return VoteMode::modified;
    fail(line, "bad mode '" + v + "' (original or modified)");
}

}  // namespace

PipelineConfig parse_config(const std::string& text) {
    PipelineConfig cfg;
    std::istringstream lines(text);
    std::string raw;
    std::string section;
    std::set<std::string> seen;
    int line_no = 0;
    while (std::getline(lines, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;

        if (line.front() == '[') {
            if (line.back() != ']') fail(line_no, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "io" && section != "vbx" && section != "asc" &&
                section != "ovd" && section != "fusion" && section != "scoring")
                fail(line_no, "unknown section [" + section + "]");
            continue;
        }

        size_t eq = line.find('=');
        if (eq == std::string::npos) fail(line_no, "expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (section.empty()) fail(line_no, "key '" + key + "' outside any section");
        if (key.empty()) fail(line_no, "empty key");
        if (!seen.insert(section + "." + key).second)
            fail(line_no, "duplicate key '" + key + "' in [" + section + "]");

        if (section == "io") {
            if (key == "embeddings") cfg.io.embeddings = split_list(value);
            else if (key == "plda") cfg.io.plda = value;
            else if (key == "doa") cfg.io.doa = value;
            else if (key == "ovd") cfg.io.ovd = split_list(value);
            else if (key == "reference") cfg.io.reference = value;
            else if (key == "out_dir") cfg.io.out_dir = value;
            else if (key == "win_len") cfg.io.win_len = to_double(value, line_no);
            else if (key == "win_shift") cfg.io.win_shift = to_double(value, line_no);
            else fail(line_no, "unknown key '" + key + "' in [io]");
        } else if (section == "vbx") {
            if (key == "init") cfg.vbx.init = to_init(value, line_no);
            else if (key == "ahc_threshold") cfg.vbx.ahc_threshold = to_double(value, line_no);
            else if (key == "fa") cfg.vbx.fa = to_double(value, line_no);
            else if (key == "fb") cfg.vbx.fb = to_double(value, line_no);
            else if (key == "p_loop") cfg.vbx.p_loop = to_double(value, line_no);
            else if (key == "max_iters") cfg.vbx.max_iters = to_int(value, line_no);
            else if (key == "elbo_tol") cfg.vbx.elbo_tol = to_double(value, line_no);
            else if (key == "min_speaker_mass") cfg.vbx.min_speaker_mass = to_double(value, line_no);
            else if (key == "doa_sigma") cfg.vbx.doa_sigma = to_double(value, line_no);
            else if (key == "doa_mode") cfg.vbx.doa_mode = to_doa_mode(value, line_no);
            else fail(line_no, "unknown key '" + key + "' in [vbx]");
        } else if (section == "asc") {
            if (key == "kmeans_seed") {
                int seed = to_int(value, line_no);
                if (seed < 0) fail(line_no, "kmeans_seed must be non-negative");
                cfg.asc.kmeans_seed = static_cast<unsigned>(seed);
            } else {
                fail(line_no, "unknown key '" + key + "' in [asc]");
            }
        } else if (section == "ovd") {
            if (key == "threshold") cfg.ovd.threshold = to_double(value, line_no);
            else if (key == "min_silence") cfg.ovd.min_silence = to_double(value, line_no);
            else if (key == "min_overlap") cfg.ovd.min_overlap = to_double(value, line_no);
            else fail(line_no, "unknown key '" + key + "' in [ovd]");
        } else if (section == "fusion") {
            if (key == "mode") cfg.fusion.mode = to_vote_mode(value, line_no);
            else if (key == "rank_exponent") cfg.fusion.rank_exponent = to_double(value, line_no);
            else fail(line_no, "unknown key '" + key + "' in [fusion]");
        } else {  // scoring
            if (key == "collar") cfg.scoring.collar = to_double(value, line_no);
            else if (key == "score_overlap") cfg.scoring.score_overlap = to_bool(value, line_no);
            else fail(line_no, "unknown key '" + key + "' in [scoring]");
        }
    }

    if (cfg.io.win_len <= 0.0 || cfg.io.win_shift <= 0.0)
        throw ConfigError("window geometry must be positive");
    if (cfg.vbx.fa <= 0.0 || cfg.vbx.fb <= 0.0)
        throw ConfigError("fa and fb must be positive");
    if (cfg.vbx.p_loop <= 0.0 || cfg.vbx.p_loop >= 1.0)
        throw ConfigError("p_loop must lie strictly between 0 and 1");
    if (cfg.vbx.max_iters < 1) throw ConfigError("max_iters must be at least 1");
    if (cfg.vbx.elbo_tol < 0.0) throw ConfigError("elbo_tol must not be negative");
    if (cfg.vbx.doa_sigma <= 0.0) throw ConfigError("doa_sigma must be positive");
    if (cfg.ovd.min_silence < 0.0 || cfg.ovd.min_overlap < 0.0)
        throw ConfigError("ovd durations must not be negative");
    if (cfg.scoring.collar < 0.0) throw ConfigError("collar must not be negative");
    return cfg;
}

PipelineConfig read_config_file(const std::string& path) {
    return parse_config(read_text_file(path));
}

}  // namespace diar

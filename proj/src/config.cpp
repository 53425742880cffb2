#include "ibgan/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ibgan::exp {

std::string method_name(Method m) {
    switch (m) {
        case Method::ibgan: return "ibgan";
        case Method::naive_gan: return "naive_gan";
        case Method::plain: return "plain";
        case Method::class_weights: return "class_weights";
        case Method::upsample: return "upsample";
        case Method::downsample: return "downsample";
        case Method::smote: return "smote";
    }
    return "unknown";
}

Method parse_method(const std::string& name) {
    for (Method m : {Method::ibgan, Method::naive_gan, Method::plain, Method::class_weights,
                     Method::upsample, Method::downsample, Method::smote}) {
        if (method_name(m) == name) return m;
    }
    throw std::invalid_argument("config: unknown method '" + name + "'");
}

void ExperimentConfig::validate() const {
    if (replicates < 1) throw std::invalid_argument("config: replicates must be >= 1");
    train.validate();
    if (p_miss_sweep.size() > 1 && train_size_sweep.size() > 1) {
        throw std::invalid_argument("config: only one sweep axis per run");
    }
    for (double p : p_miss_sweep) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw std::invalid_argument("config: p_miss_sweep values must lie in [0,1]");
        }
    }
    if (dataset.source == DatasetConfig::Source::csv && dataset.path.empty()) {
        throw std::invalid_argument("config: csv source needs a path");
    }
}

namespace {

[[noreturn]] void bad(const std::string& msg) { throw std::invalid_argument("config: " + msg); }

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    std::size_t e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& v, const std::string& key) {
    double out = 0.0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        bad("key '" + key + "' expects a number, got '" + v + "'");
    }
    return out;
}

long to_long(const std::string& v, const std::string& key) {
    long out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        bad("key '" + key + "' expects an integer, got '" + v + "'");
    }
    return out;
}

bool to_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad("key '" + key + "' expects true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : v) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
    return out;
}

std::vector<double> to_doubles(const std::string& v, const std::string& key) {
    std::vector<double> out;
    for (const auto& s : split_list(v)) out.push_back(to_double(s, key));
    return out;
}

std::vector<std::size_t> to_sizes(const std::string& v, const std::string& key) {
    std::vector<std::size_t> out;
    for (const auto& s : split_list(v)) {
        const long x = to_long(s, key);
        if (x < 0) bad("key '" + key + "' expects nonnegative integers");
        out.push_back(static_cast<std::size_t>(x));
    }
    return out;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') bad("malformed section at line " + std::to_string(lineno));
            section = line.substr(1, line.size() - 2);
            if (section != "experiment" && section != "dataset" && section != "train") {
                bad("unknown section '" + section + "'");
            }
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) bad("expected key = value at line " + std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (section.empty()) bad("key '" + key + "' before any [section]");

        if (section == "experiment") {
            if (key == "method") cfg.method = parse_method(val);
            else if (key == "replicates") cfg.replicates = static_cast<int>(to_long(val, key));
            else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_long(val, key));
            else if (key == "output") cfg.output = val;
            else if (key == "p_miss_sweep") cfg.p_miss_sweep = to_doubles(val, key);
            else if (key == "train_size_sweep") cfg.train_size_sweep = to_sizes(val, key);
            else if (key == "record_duration") cfg.record_duration = to_bool(val, key);
            else if (key == "smote_k") cfg.smote_k = static_cast<int>(to_long(val, key));
            else bad("unknown key '" + key + "' in [experiment]");
        } else if (section == "dataset") {
            if (key == "source") {
                if (val == "synthetic") cfg.dataset.source = DatasetConfig::Source::synthetic;
                else if (val == "csv") cfg.dataset.source = DatasetConfig::Source::csv;
                else bad("dataset source must be synthetic or csv");
            } else if (key == "path") cfg.dataset.path = val;
            else if (key == "path_test") cfg.dataset.path_test = val;
            else if (key == "test_fraction") cfg.dataset.test_fraction = to_double(val, key);
            else if (key == "imbalance_drop") cfg.dataset.imbalance_drop = to_double(val, key);
            else if (key == "classes") cfg.dataset.synth.classes = static_cast<int>(to_long(val, key));
            else if (key == "channels") cfg.dataset.synth.channels = static_cast<std::size_t>(to_long(val, key));
            else if (key == "length") cfg.dataset.synth.length = static_cast<std::size_t>(to_long(val, key));
            else if (key == "ar_coeff") cfg.dataset.synth.ar_coeff = to_doubles(val, key);
            else if (key == "class_mean") cfg.dataset.synth.class_mean = to_doubles(val, key);
            else if (key == "train_per_class") cfg.dataset.synth.sizes = to_sizes(val, key);
            else if (key == "test_per_class") cfg.dataset.test_sizes = to_sizes(val, key);
            else if (key == "noise_sd") cfg.dataset.synth.noise_sd = to_double(val, key);
            else if (key == "meta_dim") cfg.dataset.synth.meta_dim = static_cast<std::size_t>(to_long(val, key));
            else bad("unknown key '" + key + "' in [dataset]");
        } else {  // train
            if (key == "p_miss") cfg.train.p_miss = to_double(val, key);
            else if (key == "alpha") cfg.train.alpha = to_double(val, key);
            else if (key == "n_mb") cfg.train.n_mb = static_cast<std::size_t>(to_long(val, key));
            else if (key == "epochs") cfg.train.epochs = static_cast<std::size_t>(to_long(val, key));
            else if (key == "lr") cfg.train.lr = to_double(val, key);
            else if (key == "beta1") cfg.train.beta1 = to_double(val, key);
            else if (key == "beta2") cfg.train.beta2 = to_double(val, key);
            else if (key == "adam_eps") cfg.train.adam_eps = to_double(val, key);
            else if (key == "w_d_cap") cfg.train.w_d_cap = to_double(val, key);
            else if (key == "conv_channels") cfg.train.nets.conv_channels = static_cast<std::size_t>(to_long(val, key));
            else if (key == "conv2_filter") cfg.train.nets.conv2_filter = static_cast<std::size_t>(to_long(val, key));
            else if (key == "dense_width") cfg.train.nets.dense_width = static_cast<std::size_t>(to_long(val, key));
            else if (key == "hidden_width") cfg.train.nets.hidden_width = static_cast<std::size_t>(to_long(val, key));
            else if (key == "leaky_slope") cfg.train.nets.leaky_slope = to_double(val, key);
            else if (key == "tanh_scale") cfg.train.nets.tanh_scale = to_double(val, key);
            else if (key == "init_scale") cfg.train.nets.init_scale = to_double(val, key);
            else if (key == "mask_rule") {
                if (val == "inverse_prior") cfg.train.mask_rule = train::MaskPoolRule::inverse_prior;
                else if (val == "exact_balance") cfg.train.mask_rule = train::MaskPoolRule::exact_balance;
                else bad("mask_rule must be inverse_prior or exact_balance");
            } else bad("unknown key '" + key + "' in [train]");
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) bad("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

}  // namespace ibgan::exp

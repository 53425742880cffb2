#include "ibgan/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace ibgan::data {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("dataio: " + msg); }

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, const std::string& where) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e || s.empty()) {
        fail("non-numeric value '" + s + "' at " + where);
    }
    if (!std::isfinite(v)) fail("non-finite value '" + s + "' at " + where);
    return v;
}

long parse_long(const std::string& s, const std::string& where) {
    long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) {
        fail("non-integer value '" + s + "' at " + where);
    }
    return v;
}

std::string fmt_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(static_cast<std::size_t>(class_count), 0);
    for (const Sample& s : samples) counts[static_cast<std::size_t>(s.label)] += 1;
    return counts;
}

std::vector<std::vector<std::size_t>> Dataset::class_members() const {
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(class_count));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        members[static_cast<std::size_t>(samples[i].label)].push_back(i);
    }
    return members;
}

Array flatten_sample(const Sample& s) {
    Array out = Array::zeros({s.series.size() + s.metadata.size()});
    std::copy(s.series.data.begin(), s.series.data.end(), out.data.begin());
    std::copy(s.metadata.data.begin(), s.metadata.data.end(),
              out.data.begin() + static_cast<std::ptrdiff_t>(s.series.size()));
    return out;
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) fail("empty file '" + path + "'");
    const std::vector<std::string> header = split_csv_line(line);
    const std::vector<std::string> fixed = {"sample_id", "channel", "t", "value", "label"};
    if (header.size() < fixed.size()) fail("header too short in '" + path + "'");
    for (std::size_t i = 0; i < fixed.size(); ++i) {
        if (header[i] != fixed[i]) {
            fail("unexpected header column " + std::to_string(i) + " '" + header[i] +
                 "' (want '" + fixed[i] + "')");
        }
    }
    const std::size_t d_meta = header.size() - fixed.size();
    for (std::size_t j = 0; j < d_meta; ++j) {
        const std::string want = "meta_" + std::to_string(j);
        if (header[fixed.size() + j] != want) {
            fail("unexpected metadata column '" + header[fixed.size() + j] + "' (want '" + want +
                 "')");
        }
    }

    struct Raw {
        std::map<std::pair<long, long>, double> cells;  // (channel, t) -> value
        std::string label;
        std::vector<double> meta;
        long max_ch = -1, max_t = -1;
    };
    std::vector<std::string> order;
    std::unordered_map<std::string, Raw> raws;
    std::vector<std::string> label_order;

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(lineno);
        const std::vector<std::string> f = split_csv_line(line);
        if (f.size() != header.size()) {
            fail("row with " + std::to_string(f.size()) + " fields (want " +
                 std::to_string(header.size()) + ") at " + where);
        }
        const std::string& sid = f[0];
        const long ch = parse_long(f[1], where);
        const long tt = parse_long(f[2], where);
        if (ch < 0 || tt < 0) fail("negative channel/t index at " + where);
        const double v = parse_double(f[3], where);
        const std::string& label = f[4];
        std::vector<double> meta(d_meta);
        for (std::size_t j = 0; j < d_meta; ++j) meta[j] = parse_double(f[5 + j], where);

        auto it = raws.find(sid);
        if (it == raws.end()) {
            order.push_back(sid);
            it = raws.emplace(sid, Raw{}).first;
            it->second.label = label;
            it->second.meta = meta;
        } else {
            if (it->second.label != label) {
                fail("inconsistent label for sample '" + sid + "' at " + where);
            }
            if (it->second.meta != meta) {
                fail("inconsistent metadata for sample '" + sid + "' at " + where);
            }
        }
        Raw& r = it->second;
        if (!r.cells.emplace(std::make_pair(ch, tt), v).second) {
            fail("duplicate cell (sample " + sid + ", channel " + std::to_string(ch) + ", t=" +
                 std::to_string(tt) + ") at " + where);
        }
        r.max_ch = std::max(r.max_ch, ch);
        r.max_t = std::max(r.max_t, tt);
        if (std::find(label_order.begin(), label_order.end(), label) == label_order.end()) {
            label_order.push_back(label);
        }
    }
    if (order.empty()) fail("no data rows in '" + path + "'");

    const long k = raws[order[0]].max_ch + 1;
    const long m = raws[order[0]].max_t + 1;
    Dataset ds;
    ds.label_names = label_order;
    ds.class_count = static_cast<int>(label_order.size());
    for (const std::string& sid : order) {
        const Raw& r = raws[sid];
        if (r.max_ch + 1 != k || r.max_t + 1 != m) {
            fail("sample '" + sid + "' has shape " + std::to_string(r.max_ch + 1) + "x" +
                 std::to_string(r.max_t + 1) + " but expected " + std::to_string(k) + "x" +
                 std::to_string(m));
        }
        Sample s;
        s.series = Array::zeros({static_cast<std::size_t>(k), static_cast<std::size_t>(m)});
        for (long c = 0; c < k; ++c) {
            for (long t = 0; t < m; ++t) {
                auto it = r.cells.find({c, t});
                if (it == r.cells.end()) {
                    fail("missing cell (sample " + sid + ", channel " + std::to_string(c) +
                         ", t=" + std::to_string(t) + ")");
                }
                s.series.at(static_cast<std::size_t>(c), static_cast<std::size_t>(t)) = it->second;
            }
        }
        if (r.cells.size() != static_cast<std::size_t>(k * m)) {
            fail("sample '" + sid + "' has stray cells outside the dense grid");
        }
        if (!r.meta.empty()) s.metadata = Array::vec(r.meta);
        const auto lit = std::find(label_order.begin(), label_order.end(), r.label);
        s.label = static_cast<int>(lit - label_order.begin());
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("cannot write '" + path + "'");
    out << "sample_id,channel,t,value,label";
    for (std::size_t j = 0; j < ds.meta_dim(); ++j) out << ",meta_" << j;
    out << "\n";
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const Sample& s = ds.samples[i];
        const std::string& label = ds.label_names.empty()
                                       ? std::to_string(s.label)
                                       : ds.label_names[static_cast<std::size_t>(s.label)];
        std::string meta_suffix;
        for (std::size_t j = 0; j < s.metadata.size(); ++j) {
            meta_suffix += "," + fmt_double(s.metadata.data[j]);
        }
        for (std::size_t c = 0; c < s.series.shape[0]; ++c) {
            for (std::size_t t = 0; t < s.series.shape[1]; ++t) {
                out << i << ',' << c << ',' << t << ',' << fmt_double(s.series.at(c, t)) << ','
                    << label << meta_suffix << "\n";
            }
        }
    }
}

ClassPriors compute_priors(const Dataset& ds) {
    if (ds.samples.empty()) fail("compute_priors: empty dataset");
    const auto counts = ds.class_counts();
    ClassPriors pr;
    pr.w.resize(counts.size());
    for (std::size_t y = 0; y < counts.size(); ++y) {
        if (counts[y] == 0) fail("compute_priors: class " + std::to_string(y) + " is empty");
        pr.w[y] = static_cast<double>(counts[y]) / static_cast<double>(ds.samples.size());
    }
    return pr;
}

ImbalanceResult inject_imbalance(const Dataset& ds, double drop_fraction, Rng& rng) {
    if (!(drop_fraction > 0.0 && drop_fraction < 1.0)) {
        fail("inject_imbalance: drop_fraction must be in (0,1)");
    }
    const std::size_t n_classes = static_cast<std::size_t>(ds.class_count);
    std::vector<std::size_t> class_ids(n_classes);
    std::iota(class_ids.begin(), class_ids.end(), 0);
    // Fisher-Yates prefix; the first floor(|Y|/2) entries are the dropped classes.
    for (std::size_t i = 0; i + 1 < n_classes; ++i) {
        const std::size_t j = i + rng.uniform_index(n_classes - i);
        std::swap(class_ids[i], class_ids[j]);
    }
    const std::size_t n_drop_classes = n_classes / 2;
    std::vector<bool> dropped_class(n_classes, false);
    for (std::size_t i = 0; i < n_drop_classes; ++i) dropped_class[class_ids[i]] = true;

    const auto members = ds.class_members();
    std::vector<bool> removed(ds.samples.size(), false);
    ImbalanceResult result;
    for (std::size_t y = 0; y < n_classes; ++y) {
        if (!dropped_class[y]) continue;
        const auto& idx = members[y];
        std::size_t n_remove = static_cast<std::size_t>(
            std::lround(drop_fraction * static_cast<double>(idx.size())));
        if (n_remove >= idx.size()) {
            n_remove = idx.size() - 1;
            result.warnings.push_back("class " + std::to_string(y) +
                                      " would be emptied; keeping 1 sample");
        }
        std::vector<std::size_t> pool = idx;
        for (std::size_t i = 0; i < n_remove; ++i) {
            const std::size_t j = i + rng.uniform_index(pool.size() - i);
            std::swap(pool[i], pool[j]);
            removed[pool[i]] = true;
        }
    }
    result.ds.class_count = ds.class_count;
    result.ds.label_names = ds.label_names;
    result.ds.stats = ds.stats;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        if (!removed[i]) result.ds.samples.push_back(ds.samples[i]);
    }
    return result;
}

namespace {

ChannelStats compute_stats(const Dataset& ds) {
    const std::size_t k = ds.channels(), m = ds.length(), d = ds.meta_dim();
    const double n_series = static_cast<double>(ds.size() * m);
    ChannelStats st;
    st.mean.assign(k, 0.0);
    st.sd.assign(k, 0.0);
    for (const Sample& s : ds.samples) {
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t t = 0; t < m; ++t) st.mean[c] += s.series.at(c, t);
        }
    }
    for (std::size_t c = 0; c < k; ++c) st.mean[c] /= n_series;
    for (const Sample& s : ds.samples) {
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t t = 0; t < m; ++t) {
                const double dlt = s.series.at(c, t) - st.mean[c];
                st.sd[c] += dlt * dlt;
            }
        }
    }
    for (std::size_t c = 0; c < k; ++c) {
        st.sd[c] = std::sqrt(st.sd[c] / n_series);
        if (st.sd[c] == 0.0) st.sd[c] = 1.0;  // constant channel convention
    }
    st.meta_mean.assign(d, 0.0);
    st.meta_sd.assign(d, 0.0);
    if (d > 0) {
        const double n = static_cast<double>(ds.size());
        for (const Sample& s : ds.samples) {
            for (std::size_t j = 0; j < d; ++j) st.meta_mean[j] += s.metadata.data[j];
        }
        for (std::size_t j = 0; j < d; ++j) st.meta_mean[j] /= n;
        for (const Sample& s : ds.samples) {
            for (std::size_t j = 0; j < d; ++j) {
                const double dlt = s.metadata.data[j] - st.meta_mean[j];
                st.meta_sd[j] += dlt * dlt;
            }
        }
        for (std::size_t j = 0; j < d; ++j) {
            st.meta_sd[j] = std::sqrt(st.meta_sd[j] / n);
            if (st.meta_sd[j] == 0.0) st.meta_sd[j] = 1.0;
        }
    }
    return st;
}

}  // namespace

Dataset standardize_with(const Dataset& ds, const ChannelStats& stats) {
    Dataset out = ds;
    out.stats = stats;
    for (Sample& s : out.samples) {
        for (std::size_t c = 0; c < s.series.shape[0]; ++c) {
            for (std::size_t t = 0; t < s.series.shape[1]; ++t) {
                s.series.at(c, t) = (s.series.at(c, t) - stats.mean[c]) / stats.sd[c];
            }
        }
        for (std::size_t j = 0; j < s.metadata.size(); ++j) {
            s.metadata.data[j] = (s.metadata.data[j] - stats.meta_mean[j]) / stats.meta_sd[j];
        }
    }
    return out;
}

Dataset standardize(const Dataset& ds) {
    if (ds.samples.empty()) fail("standardize: empty dataset");
    return standardize_with(ds, compute_stats(ds));
}

Dataset generate_synthetic(const SyntheticSpec& spec, Rng& rng) {
    if (spec.classes <= 0) fail("generate_synthetic: classes must be positive");
    const std::size_t n_classes = static_cast<std::size_t>(spec.classes);
    if (spec.ar_coeff.size() != n_classes || spec.class_mean.size() != n_classes ||
        spec.sizes.size() != n_classes) {
        fail("generate_synthetic: ar_coeff/class_mean/sizes must each have one entry per class");
    }
    for (double phi : spec.ar_coeff) {
        if (!(std::abs(phi) < 1.0)) fail("generate_synthetic: |AR coefficient| must be < 1");
    }
    for (std::size_t n : spec.sizes) {
        if (n == 0) fail("generate_synthetic: sizes must be >= 1");
    }
    Dataset ds;
    ds.class_count = spec.classes;
    for (int y = 0; y < spec.classes; ++y) ds.label_names.push_back(std::to_string(y));
    for (std::size_t y = 0; y < n_classes; ++y) {
        const double mu = spec.class_mean[y];
        const double phi = spec.ar_coeff[y];
        for (std::size_t i = 0; i < spec.sizes[y]; ++i) {
            Sample s;
            s.label = static_cast<int>(y);
            s.series = Array::zeros({spec.channels, spec.length});
            for (std::size_t c = 0; c < spec.channels; ++c) {
                double prev = mu;
                for (std::size_t t = 0; t < spec.length; ++t) {
                    const double eps = spec.noise_sd == 0.0 ? 0.0 : rng.normal();
                    const double x = mu + phi * (prev - mu) + spec.noise_sd * eps;
                    s.series.at(c, t) = x;
                    prev = x;
                }
            }
            if (spec.meta_dim > 0) {
                s.metadata = Array::zeros({spec.meta_dim});
                for (std::size_t j = 0; j < spec.meta_dim; ++j) {
                    s.metadata.data[j] = mu + (spec.noise_sd == 0.0 ? 0.0 : rng.normal());
                }
            }
            ds.samples.push_back(std::move(s));
        }
    }
    return ds;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, Rng& rng) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        fail("split: test_fraction must be in (0,1)");
    }
    const auto members = ds.class_members();
    std::vector<bool> in_test(ds.samples.size(), false);
    for (std::size_t y = 0; y < members.size(); ++y) {
        const auto& idx = members[y];
        const std::size_t n_test = static_cast<std::size_t>(
            std::lround(test_fraction * static_cast<double>(idx.size())));
        if (n_test == 0 || n_test >= idx.size()) {
            fail("split: class " + std::to_string(y) + " (" + std::to_string(idx.size()) +
                 " samples) too small to appear in both splits at fraction " +
                 std::to_string(test_fraction));
        }
        std::vector<std::size_t> pool = idx;
        for (std::size_t i = 0; i < n_test; ++i) {
            const std::size_t j = i + rng.uniform_index(pool.size() - i);
            std::swap(pool[i], pool[j]);
            in_test[pool[i]] = true;
        }
    }
    Dataset train, test;
    train.class_count = test.class_count = ds.class_count;
    train.label_names = test.label_names = ds.label_names;
    train.stats = test.stats = ds.stats;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        (in_test[i] ? test : train).samples.push_back(ds.samples[i]);
    }
    return {std::move(train), std::move(test)};
}

Dataset subsample(const Dataset& ds, std::size_t target_size, Rng& rng) {
    if (target_size == 0 || target_size > ds.size()) {
        fail("subsample: target size must be in [1, N]");
    }
    const auto members = ds.class_members();
    const double scale = static_cast<double>(target_size) / static_cast<double>(ds.size());
    std::vector<bool> keep(ds.samples.size(), false);
    for (const auto& idx : members) {
        std::size_t n_keep = static_cast<std::size_t>(
            std::lround(scale * static_cast<double>(idx.size())));
        n_keep = std::max<std::size_t>(1, std::min(n_keep, idx.size()));
        std::vector<std::size_t> pool = idx;
        for (std::size_t i = 0; i < n_keep; ++i) {
            const std::size_t j = i + rng.uniform_index(pool.size() - i);
            std::swap(pool[i], pool[j]);
            keep[pool[i]] = true;
        }
    }
    Dataset out;
    out.class_count = ds.class_count;
    out.label_names = ds.label_names;
    out.stats = ds.stats;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        if (keep[i]) out.samples.push_back(ds.samples[i]);
    }
    return out;
}

}  // namespace ibgan::data

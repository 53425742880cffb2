#include "ibgan/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ibgan/baselines.hpp"
#include "ibgan/trainer.hpp"

namespace ibgan::exp {

namespace {

std::string fmt(double v, int decimals = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

struct SplitData {
    data::Dataset train;
    data::Dataset test;
};

/// ingest -> standardize (train statistics) -> optional imbalance injection.
SplitData prepare_data(const ExperimentConfig& cfg, nd::Rng& rng) {
    data::Dataset train, test;
    if (cfg.dataset.source == DatasetConfig::Source::synthetic) {
        train = data::generate_synthetic(cfg.dataset.synth, rng);
        data::SyntheticSpec test_spec = cfg.dataset.synth;
        if (!cfg.dataset.test_sizes.empty()) test_spec.sizes = cfg.dataset.test_sizes;
        test = data::generate_synthetic(test_spec, rng);
    } else {
        data::Dataset whole = data::load_dataset(cfg.dataset.path);
        if (!cfg.dataset.path_test.empty()) {
            train = std::move(whole);
            test = data::load_dataset(cfg.dataset.path_test);
        } else {
            auto parts = data::split(whole, cfg.dataset.test_fraction, rng);
            train = std::move(parts.first);
            test = std::move(parts.second);
        }
    }
    train = data::standardize(train);
    test = data::standardize_with(test, *train.stats);
    if (cfg.dataset.imbalance_drop > 0.0) {
        train = data::inject_imbalance(train, cfg.dataset.imbalance_drop, rng).ds;
    }
    return {std::move(train), std::move(test)};
}

struct SweepPoint {
    std::string key;  // "p_miss", "train_size", "none"
    double value = 0.0;
};

std::vector<SweepPoint> sweep_points(const ExperimentConfig& cfg) {
    std::vector<SweepPoint> pts;
    if (!cfg.p_miss_sweep.empty()) {
        for (double p : cfg.p_miss_sweep) pts.push_back({"p_miss", p});
    } else if (!cfg.train_size_sweep.empty()) {
        for (std::size_t s : cfg.train_size_sweep) {
            pts.push_back({"train_size", static_cast<double>(s)});
        }
    } else {
        pts.push_back({"none", 0.0});
    }
    return pts;
}

void write_losses(std::ostream& out, const RunRecord& rec,
                  const std::vector<train::EpochLosses>& history) {
    for (const auto& e : history) {
        out << "method=" << rec.method << " p_miss=" << fmt(rec.p_miss)
            << " replicate=" << rec.replicate << " epoch=" << e.epoch
            << " loss_d=" << fmt(e.loss_d) << " loss_g_adv=" << fmt(e.loss_g_adv)
            << " loss_c_real=" << fmt(e.loss_c_real) << " loss_c_fake=" << fmt(e.loss_c_fake)
            << "\n";
    }
}

}  // namespace

std::string format_record(const RunRecord& r) {
    std::ostringstream os;
    os << "method=" << r.method;
    if (r.failed) {
        std::string msg = r.error;
        std::replace(msg.begin(), msg.end(), ' ', '_');
        std::replace(msg.begin(), msg.end(), '\n', '_');
        os << " replicate=" << r.replicate << " seed=" << r.seed << " error=" << msg;
        return os.str();
    }
    os << " p_miss=" << fmt(r.p_miss) << " alpha=" << fmt(r.alpha)
       << " train_size=" << r.train_size << " replicate=" << r.replicate << " seed=" << r.seed
       << " balanced_accuracy=" << fmt(r.report.balanced_accuracy)
       << " macro_f1=" << fmt(r.report.macro_f1) << " pr_auc=" << fmt(r.report.pr_auc)
       << " duration_s=" << fmt(r.duration_s, 3);
    return os.str();
}

RunRecord parse_record(const std::string& line) {
    RunRecord r;
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) {
        const std::size_t eq = tok.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("records: malformed token '" + tok + "'");
        }
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        if (key == "method") r.method = val;
        else if (key == "p_miss") r.p_miss = std::stod(val);
        else if (key == "alpha") r.alpha = std::stod(val);
        else if (key == "train_size") r.train_size = static_cast<std::size_t>(std::stoul(val));
        else if (key == "replicate") r.replicate = std::stoi(val);
        else if (key == "seed") r.seed = std::stoull(val);
        else if (key == "balanced_accuracy") r.report.balanced_accuracy = std::stod(val);
        else if (key == "macro_f1") r.report.macro_f1 = std::stod(val);
        else if (key == "pr_auc") r.report.pr_auc = std::stod(val);
        else if (key == "duration_s") r.duration_s = std::stod(val);
        else if (key == "error") {
            r.failed = true;
            r.error = val;
        } else {
            throw std::invalid_argument("records: unknown field '" + key + "'");
        }
    }
    if (r.method.empty()) throw std::invalid_argument("records: line without method field");
    return r;
}

std::vector<RunRecord> read_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("records: cannot open '" + path + "'");
    std::vector<RunRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) out.push_back(parse_record(line));
    }
    return out;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg, std::ostream* progress) {
    cfg.validate();
    std::ofstream records_out(cfg.output, std::ios::app);
    if (!records_out) throw std::runtime_error("run_experiment: cannot open '" + cfg.output + "'");
    std::ofstream losses_out(cfg.output + ".losses", std::ios::app);

    std::vector<RunRecord> records;
    for (const SweepPoint& pt : sweep_points(cfg)) {
        for (int rep = 0; rep < cfg.replicates; ++rep) {
            const std::uint64_t run_seed = nd::child_seed(cfg.seed, static_cast<std::uint64_t>(rep));
            RunRecord rec;
            rec.method = method_name(cfg.method);
            rec.replicate = rep;
            rec.seed = run_seed;
            rec.alpha = cfg.train.alpha;
            rec.p_miss = cfg.method == Method::naive_gan ? 1.0 : cfg.train.p_miss;
            if (pt.key == "p_miss" && cfg.method != Method::naive_gan) rec.p_miss = pt.value;

            const auto t0 = std::chrono::steady_clock::now();
            std::vector<train::EpochLosses> history;
            try {
                nd::Rng data_rng(nd::child_seed(run_seed, 1));
                SplitData dsp = prepare_data(cfg, data_rng);
                if (pt.key == "train_size") {
                    nd::Rng sub_rng(nd::child_seed(run_seed, 2));
                    dsp.train = data::subsample(
                        dsp.train, static_cast<std::size_t>(pt.value), sub_rng);
                }
                rec.train_size = dsp.train.size();

                train::TrainConfig tc = cfg.train;
                tc.seed = nd::child_seed(run_seed, 3);
                tc.p_miss = rec.p_miss;

                nd::Rng method_rng(nd::child_seed(run_seed, 4));
                switch (cfg.method) {
                    case Method::ibgan:
                    case Method::naive_gan: {
                        train::TripletState st = train::train(dsp.train, tc);
                        history = st.history;
                        rec.report = train::evaluate(st.clf, dsp.test);
                        break;
                    }
                    case Method::plain: {
                        auto run = train::train_classifier(dsp.train, tc, {});
                        history = run.history;
                        rec.report = train::evaluate(run.net, dsp.test);
                        break;
                    }
                    case Method::class_weights: {
                        const auto priors = data::compute_priors(dsp.train);
                        auto run = train::train_classifier(
                            dsp.train, tc, baselines::inverse_prior_weights(priors));
                        history = run.history;
                        rec.report = train::evaluate(run.net, dsp.test);
                        break;
                    }
                    case Method::upsample: {
                        data::Dataset up = baselines::upsample(dsp.train, method_rng);
                        auto run = train::train_classifier(up, tc, {});
                        history = run.history;
                        rec.report = train::evaluate(run.net, dsp.test);
                        break;
                    }
                    case Method::downsample: {
                        data::Dataset down = baselines::downsample(dsp.train, method_rng);
                        auto run = train::train_classifier(down, tc, {});
                        history = run.history;
                        rec.report = train::evaluate(run.net, dsp.test);
                        break;
                    }
                    case Method::smote: {
                        auto sm = baselines::smote(dsp.train, cfg.smote_k, {}, method_rng);
                        auto run = train::train_classifier(sm.ds, tc, {});
                        history = run.history;
                        rec.report = train::evaluate(run.net, dsp.test);
                        break;
                    }
                }
            } catch (const std::exception& ex) {
                rec.failed = true;
                rec.error = ex.what();
            }
            const auto t1 = std::chrono::steady_clock::now();
            rec.duration_s = cfg.record_duration
                                 ? std::chrono::duration<double>(t1 - t0).count()
                                 : 0.0;
            records_out << format_record(rec) << "\n";
            records_out.flush();
            if (!rec.failed) {
                write_losses(losses_out, rec, history);
                losses_out.flush();
            }
            if (progress) {
                *progress << format_record(rec) << "\n";
                progress->flush();
            }
            records.push_back(std::move(rec));
        }
    }
    return records;
}

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records) {
    if (records.empty()) throw std::invalid_argument("summarize: no records");
    // Key: method, sweep key/value. When a file mixes several p_miss values
    // for one method it is treated as a p_miss sweep; likewise train_size.
    std::map<std::string, std::vector<double>> pmiss_by_method;
    std::map<std::string, std::vector<std::size_t>> size_by_method;
    for (const auto& r : records) {
        if (r.failed) continue;
        auto& pm = pmiss_by_method[r.method];
        if (std::find(pm.begin(), pm.end(), r.p_miss) == pm.end()) pm.push_back(r.p_miss);
        auto& sz = size_by_method[r.method];
        if (std::find(sz.begin(), sz.end(), r.train_size) == sz.end()) sz.push_back(r.train_size);
    }

    struct Key {
        std::string method;
        std::string sweep_key;
        double sweep_value;
        bool operator<(const Key& o) const {
            if (method != o.method) return method < o.method;
            if (sweep_key != o.sweep_key) return sweep_key < o.sweep_key;
            return sweep_value < o.sweep_value;
        }
    };
    std::map<Key, std::vector<metrics::MetricsReport>> groups;
    for (const auto& r : records) {
        if (r.failed) continue;
        Key key{r.method, "none", 0.0};
        if (pmiss_by_method[r.method].size() > 1) {
            key.sweep_key = "p_miss";
            key.sweep_value = r.p_miss;
        } else if (size_by_method[r.method].size() > 1) {
            key.sweep_key = "train_size";
            key.sweep_value = static_cast<double>(r.train_size);
        }
        groups[key].push_back(r.report);
    }

    std::vector<SummaryRow> rows;
    for (const auto& [key, reports] : groups) {
        const metrics::AggregateReport agg = metrics::aggregate(reports);
        auto push = [&](const std::string& metric, const metrics::AggregateEntry& e) {
            SummaryRow row;
            row.method = key.method;
            row.sweep_key = key.sweep_key;
            row.sweep_value = key.sweep_value;
            row.metric = metric;
            row.mean = e.mean;
            row.stddev = e.stddev;
            row.n = agg.n;
            rows.push_back(row);
        };
        push("balanced_accuracy", agg.balanced_accuracy);
        push("macro_f1", agg.macro_f1);
        push("pr_auc", agg.pr_auc);
    }
    return rows;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
    std::ostringstream os;
    os << "method,sweep_key,sweep_value,metric,mean,stddev,n\n";
    for (const auto& r : rows) {
        os << r.method << ',' << r.sweep_key << ',' << fmt(r.sweep_value, 3) << ',' << r.metric
           << ',' << fmt(r.mean) << ',' << (r.stddev ? fmt(*r.stddev) : "") << ',' << r.n << "\n";
    }
    return os.str();
}

std::string summary_table(const std::vector<SummaryRow>& rows) {
    auto cell = [](const SummaryRow& r) {
        std::string s = fmt(r.mean, 3);
        if (r.stddev) s += " +- " + fmt(*r.stddev, 3);
        return s;
    };
    // one line per (method, sweep point), three metric columns
    struct Line {
        std::string label;
        std::string cells[3];
    };
    std::vector<Line> lines;
    for (std::size_t i = 0; i < rows.size(); i += 3) {
        Line ln;
        ln.label = rows[i].method;
        if (rows[i].sweep_key != "none") {
            ln.label += " " + rows[i].sweep_key + "=" + fmt(rows[i].sweep_value, 3);
        }
        for (std::size_t j = 0; j < 3 && i + j < rows.size(); ++j) ln.cells[j] = cell(rows[i + j]);
        lines.push_back(ln);
    }
    std::size_t w0 = 10;
    for (const auto& ln : lines) w0 = std::max(w0, ln.label.size());
    std::ostringstream os;
    std::string header = "method";
    header.resize(w0 + 2, ' ');
    os << header << "balanced_accuracy      macro_f1               pr_auc\n";
    for (const auto& ln : lines) {
        std::string label = ln.label;
        label.resize(w0 + 2, ' ');
        os << label;
        for (int j = 0; j < 3; ++j) {
            std::string c = ln.cells[j];
            c.resize(23, ' ');
            os << c;
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace ibgan::exp

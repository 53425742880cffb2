#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "ibgan/dataio.hpp"

using namespace ibgan;
using data::Dataset;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const std::string path = "/tmp/ibgan_test_" + name;
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("load_dataset: single sample, labels re-indexed by first appearance") {
    const std::string path = write_temp("basic.csv",
                                        "sample_id,channel,t,value,label\n"
                                        "0,0,0,1,A\n"
                                        "0,0,1,2,A\n"
                                        "0,0,2,3,A\n");
    Dataset ds = data::load_dataset(path);
    CHECK(ds.size() == 1);
    CHECK(ds.channels() == 1);
    CHECK(ds.length() == 3);
    CHECK(ds.samples[0].series.data == std::vector<double>{1, 2, 3});
    CHECK(ds.samples[0].label == 0);
    CHECK(ds.label_names == std::vector<std::string>{"A"});
}

TEST_CASE("load_dataset: first-appearance label order (B before A)") {
    const std::string path = write_temp("order.csv",
                                        "sample_id,channel,t,value,label\n"
                                        "s1,0,0,1,B\n"
                                        "s2,0,0,2,A\n");
    Dataset ds = data::load_dataset(path);
    CHECK(ds.class_count == 2);
    CHECK(ds.label_names == std::vector<std::string>{"B", "A"});
    CHECK(ds.samples[0].label == 0);  // B
    CHECK(ds.samples[1].label == 1);  // A
}

TEST_CASE("load_dataset: a hole is rejected naming the cell") {
    const std::string path = write_temp("hole.csv",
                                        "sample_id,channel,t,value,label\n"
                                        "0,0,0,1,A\n"
                                        "0,0,1,2,A\n"
                                        "0,1,0,3,A\n");
    // channel 1 is missing t=1
    CHECK_THROWS_WITH_AS(data::load_dataset(path),
                         doctest::Contains("missing cell (sample 0, channel 1, t=1)"),
                         std::runtime_error);
}

TEST_CASE("load_dataset: non-numeric and inconsistent shapes rejected") {
    const std::string bad_value = write_temp("nonnum.csv",
                                             "sample_id,channel,t,value,label\n"
                                             "0,0,0,abc,A\n");
    CHECK_THROWS_AS(data::load_dataset(bad_value), std::runtime_error);

    const std::string ragged = write_temp("ragged.csv",
                                          "sample_id,channel,t,value,label\n"
                                          "0,0,0,1,A\n"
                                          "1,0,0,1,A\n"
                                          "1,0,1,2,A\n");
    CHECK_THROWS_AS(data::load_dataset(ragged), std::runtime_error);

    const std::string nonfinite = write_temp("nonfinite.csv",
                                             "sample_id,channel,t,value,label\n"
                                             "0,0,0,nan,A\n");
    CHECK_THROWS_AS(data::load_dataset(nonfinite), std::runtime_error);
}

TEST_CASE("load_dataset: metadata parsed and consistency enforced") {
    const std::string path = write_temp("meta.csv",
                                        "sample_id,channel,t,value,label,meta_0,meta_1\n"
                                        "0,0,0,1,A,7.5,-2\n"
                                        "0,0,1,2,A,7.5,-2\n");
    Dataset ds = data::load_dataset(path);
    CHECK(ds.meta_dim() == 2);
    CHECK(ds.samples[0].metadata.data == std::vector<double>{7.5, -2});

    const std::string inconsistent = write_temp("meta_bad.csv",
                                                "sample_id,channel,t,value,label,meta_0\n"
                                                "0,0,0,1,A,7.5\n"
                                                "0,0,1,2,A,8.5\n");
    CHECK_THROWS_AS(data::load_dataset(inconsistent), std::runtime_error);
}

TEST_CASE("load/save round-trips values bit-exactly") {
    nd::Rng rng(31);
    data::SyntheticSpec spec;
    spec.classes = 3;
    spec.channels = 2;
    spec.length = 5;
    spec.ar_coeff = {0.1, 0.5, -0.3};
    spec.class_mean = {0.0, 1.0, -1.0};
    spec.sizes = {4, 3, 2};
    spec.meta_dim = 2;
    Dataset ds = data::generate_synthetic(spec, rng);
    const std::string path = write_temp("roundtrip.csv", "");
    data::save_dataset(ds, path);
    Dataset back = data::load_dataset(path);
    REQUIRE(back.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(back.samples[i].series.data == ds.samples[i].series.data);
        CHECK(back.samples[i].metadata.data == ds.samples[i].metadata.data);
        CHECK(back.samples[i].label == ds.samples[i].label);
    }
}

TEST_CASE("compute_priors") {
    data::SyntheticSpec spec;
    spec.classes = 2;
    spec.channels = 1;
    spec.length = 2;
    spec.ar_coeff = {0, 0};
    spec.class_mean = {0, 0};
    spec.sizes = {90, 10};
    nd::Rng rng(1);
    Dataset ds = data::generate_synthetic(spec, rng);
    auto pr = data::compute_priors(ds);
    CHECK(pr.w[0] == doctest::Approx(0.9));
    CHECK(pr.w[1] == doctest::Approx(0.1));

    spec.classes = 3;
    spec.ar_coeff = {0, 0, 0};
    spec.class_mean = {0, 0, 0};
    spec.sizes = {3, 5, 2};
    Dataset ds3 = data::generate_synthetic(spec, rng);
    auto pr3 = data::compute_priors(ds3);
    CHECK(pr3.w[0] == doctest::Approx(0.3));
    CHECK(pr3.w[1] == doctest::Approx(0.5));
    CHECK(pr3.w[2] == doctest::Approx(0.2));
}

TEST_CASE("inject_imbalance: 2x100 at 0.75 keeps 25/100") {
    data::SyntheticSpec spec;
    spec.classes = 2;
    spec.channels = 1;
    spec.length = 3;
    spec.ar_coeff = {0, 0};
    spec.class_mean = {0, 1};
    spec.sizes = {100, 100};
    nd::Rng rng(5);
    Dataset ds = data::generate_synthetic(spec, rng);
    nd::Rng inj(9);
    auto res = data::inject_imbalance(ds, 0.75, inj);
    auto counts = res.ds.class_counts();
    std::sort(counts.begin(), counts.end());
    CHECK(counts[0] == 25);
    CHECK(counts[1] == 100);
    CHECK(res.warnings.empty());
}

TEST_CASE("inject_imbalance: 4 classes, two reduced, two untouched; deterministic") {
    data::SyntheticSpec spec;
    spec.classes = 4;
    spec.channels = 1;
    spec.length = 2;
    spec.ar_coeff = {0, 0, 0, 0};
    spec.class_mean = {0, 1, 2, 3};
    spec.sizes = {40, 40, 40, 40};
    nd::Rng rng(5);
    Dataset ds = data::generate_synthetic(spec, rng);

    nd::Rng inj1(77), inj2(77);
    auto r1 = data::inject_imbalance(ds, 0.75, inj1);
    auto r2 = data::inject_imbalance(ds, 0.75, inj2);
    const auto counts = r1.ds.class_counts();
    int reduced = 0, untouched = 0;
    for (std::size_t n : counts) {
        if (n == 10) ++reduced;
        if (n == 40) ++untouched;
    }
    CHECK(reduced == 2);
    CHECK(untouched == 2);
    REQUIRE(r1.ds.size() == r2.ds.size());
    for (std::size_t i = 0; i < r1.ds.size(); ++i) {
        CHECK(r1.ds.samples[i].series.data == r2.ds.samples[i].series.data);
    }
}

TEST_CASE("inject_imbalance never changes kept samples, priors reflect new counts") {
    data::SyntheticSpec spec;
    spec.classes = 2;
    spec.channels = 2;
    spec.length = 4;
    spec.ar_coeff = {0.3, 0.3};
    spec.class_mean = {0, 1};
    spec.sizes = {20, 20};
    nd::Rng rng(8);
    Dataset ds = data::generate_synthetic(spec, rng);
    nd::Rng inj(3);
    auto res = data::inject_imbalance(ds, 0.5, inj);
    // every kept sample appears verbatim in the original
    for (const auto& kept : res.ds.samples) {
        bool found = false;
        for (const auto& orig : ds.samples) {
            if (orig.series.data == kept.series.data && orig.label == kept.label) found = true;
        }
        CHECK(found);
    }
    const auto pr = data::compute_priors(res.ds);
    const auto counts = res.ds.class_counts();
    CHECK(pr.w[0] ==
          doctest::Approx(static_cast<double>(counts[0]) / static_cast<double>(res.ds.size())));
}

TEST_CASE("inject_imbalance keeps one sample when a class would empty") {
    data::SyntheticSpec spec;
    spec.classes = 2;
    spec.channels = 1;
    spec.length = 2;
    spec.ar_coeff = {0, 0};
    spec.class_mean = {0, 1};
    spec.sizes = {2, 2};
    nd::Rng rng(4);
    Dataset ds = data::generate_synthetic(spec, rng);
    nd::Rng inj(12);
    auto res = data::inject_imbalance(ds, 0.9, inj);  // round(1.8) = 2 would empty
    for (std::size_t n : res.ds.class_counts()) CHECK(n >= 1);
    CHECK(res.warnings.size() == 1);
}

TEST_CASE("standardize: {1,2,3} maps to +-1.2247, 0 with population sd") {
    Dataset ds;
    ds.class_count = 1;
    ds.label_names = {"0"};
    data::Sample s;
    s.series = nd::Array({1, 3}, {1, 2, 3});
    s.label = 0;
    ds.samples.push_back(s);
    Dataset std_ds = data::standardize(ds);
    CHECK(std_ds.samples[0].series.data[0] == doctest::Approx(-1.2247).epsilon(1e-4));
    CHECK(std_ds.samples[0].series.data[1] == doctest::Approx(0.0));
    CHECK(std_ds.samples[0].series.data[2] == doctest::Approx(1.2247).epsilon(1e-4));
}

TEST_CASE("standardize: idempotent on standardized data, constant channel convention") {
    nd::Rng rng(21);
    data::SyntheticSpec spec;
    spec.classes = 2;
    spec.channels = 2;
    spec.length = 6;
    spec.ar_coeff = {0.4, 0.4};
    spec.class_mean = {-1, 1};
    spec.sizes = {30, 30};
    Dataset ds = data::standardize(data::generate_synthetic(spec, rng));
    Dataset again = data::standardize(ds);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t j = 0; j < ds.samples[i].series.size(); ++j) {
            CHECK(again.samples[i].series.data[j] ==
                  doctest::Approx(ds.samples[i].series.data[j]).epsilon(1e-12));
        }
    }
    // stats of the standardized train split are (0,1) within 1e-10
    for (std::size_t c = 0; c < 2; ++c) {
        double mean = 0.0, var = 0.0;
        const double n = static_cast<double>(ds.size() * ds.length());
        for (const auto& s : ds.samples) {
            for (std::size_t t = 0; t < ds.length(); ++t) mean += s.series.at(c, t);
        }
        mean /= n;
        for (const auto& s : ds.samples) {
            for (std::size_t t = 0; t < ds.length(); ++t) {
                var += (s.series.at(c, t) - mean) * (s.series.at(c, t) - mean);
            }
        }
        var /= n;
        CHECK(std::abs(mean) < 1e-10);
        CHECK(std::abs(var - 1.0) < 1e-10);
    }

    Dataset flat;
    flat.class_count = 1;
    flat.label_names = {"0"};
    data::Sample s;
    s.series = nd::Array({1, 4}, {5, 5, 5, 5});
    flat.samples.push_back(s);
    Dataset std_flat = data::standardize(flat);
    CHECK(std_flat.samples[0].series.data == std::vector<double>{0, 0, 0, 0});
    CHECK(std_flat.stats->sd[0] == 1.0);
}

TEST_CASE("generate_synthetic: phi=0 sigma=0 gives the constant mean curve") {
    data::SyntheticSpec spec;
    spec.classes = 2;
    spec.channels = 2;
    spec.length = 4;
    spec.ar_coeff = {0.0, 0.0};
    spec.class_mean = {2.5, -1.0};
    spec.sizes = {3, 3};
    spec.noise_sd = 0.0;
    nd::Rng rng(1);
    Dataset ds = data::generate_synthetic(spec, rng);
    for (const auto& s : ds.samples) {
        const double mu = s.label == 0 ? 2.5 : -1.0;
        for (double v : s.series.data) CHECK(v == mu);
    }
}

TEST_CASE("generate_synthetic: mean stump separates offset classes; deterministic") {
    data::SyntheticSpec spec;
    spec.classes = 2;
    spec.channels = 1;
    spec.length = 10;
    spec.ar_coeff = {0.0, 0.0};
    spec.class_mean = {-1.0, 1.0};
    spec.sizes = {200, 200};
    spec.noise_sd = 0.1;
    nd::Rng rng(42);
    Dataset ds = data::generate_synthetic(spec, rng);
    int correct = 0;
    for (const auto& s : ds.samples) {
        double mean = 0.0;
        for (double v : s.series.data) mean += v;
        mean /= static_cast<double>(s.series.size());
        const int pred = mean > 0.0 ? 1 : 0;
        if (pred == s.label) ++correct;
    }
    CHECK(static_cast<double>(correct) / static_cast<double>(ds.size()) > 0.99);

    nd::Rng r1(7), r2(7);
    Dataset a = data::generate_synthetic(spec, r1);
    Dataset b = data::generate_synthetic(spec, r2);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.samples[i].series.data == b.samples[i].series.data);
    }
}

TEST_CASE("split: stratified, exact at round fractions, rejects impossible classes") {
    data::SyntheticSpec spec;
    spec.classes = 2;
    spec.channels = 1;
    spec.length = 3;
    spec.ar_coeff = {0, 0};
    spec.class_mean = {0, 1};
    spec.sizes = {100, 100};
    nd::Rng rng(2);
    Dataset ds = data::generate_synthetic(spec, rng);
    nd::Rng sp(3);
    auto [train, test] = data::split(ds, 0.3, sp);
    CHECK(train.class_counts() == std::vector<std::size_t>{70, 70});
    CHECK(test.class_counts() == std::vector<std::size_t>{30, 30});

    spec.sizes = {10, 10};
    Dataset small = data::generate_synthetic(spec, rng);
    nd::Rng sp2(3);
    auto [tr2, te2] = data::split(small, 0.5, sp2);
    CHECK(tr2.class_counts() == std::vector<std::size_t>{5, 5});
    CHECK(te2.class_counts() == std::vector<std::size_t>{5, 5});

    // seeded determinism
    nd::Rng sa(11), sb(11);
    auto ra = data::split(ds, 0.3, sa);
    auto rb = data::split(ds, 0.3, sb);
    REQUIRE(ra.first.size() == rb.first.size());
    for (std::size_t i = 0; i < ra.first.size(); ++i) {
        CHECK(ra.first.samples[i].series.data == rb.first.samples[i].series.data);
    }

    spec.sizes = {1, 50};
    Dataset tiny = data::generate_synthetic(spec, rng);
    nd::Rng sp3(4);
    CHECK_THROWS_AS(data::split(tiny, 0.5, sp3), std::runtime_error);
}

TEST_CASE("subsample keeps proportions and every class") {
    data::SyntheticSpec spec;
    spec.classes = 2;
    spec.channels = 1;
    spec.length = 3;
    spec.ar_coeff = {0, 0};
    spec.class_mean = {0, 1};
    spec.sizes = {900, 100};
    nd::Rng rng(2);
    Dataset ds = data::generate_synthetic(spec, rng);
    nd::Rng sub(5);
    Dataset small = data::subsample(ds, 200, sub);
    const auto counts = small.class_counts();
    CHECK(counts[0] == 180);
    CHECK(counts[1] == 20);
}

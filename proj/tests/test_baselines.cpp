#include <cmath>

#include "doctest.h"
#include "ibgan/baselines.hpp"

using namespace ibgan;
using nd::Array;

namespace {

data::Dataset two_class(std::size_t n0, std::size_t n1, std::uint64_t seed) {
    data::SyntheticSpec spec;
    spec.classes = 2;
    spec.channels = 2;
    spec.length = 5;
    spec.ar_coeff = {0.3, 0.3};
    spec.class_mean = {-1, 1};
    spec.sizes = {n0, n1};
    nd::Rng rng(seed);
    return data::generate_synthetic(spec, rng);
}

}  // namespace

TEST_CASE("inverse_prior_weights: uniform priors give all ones") {
    data::ClassPriors uni{{0.5, 0.5}};
    const auto v = baselines::inverse_prior_weights(uni);
    CHECK(v[0] == doctest::Approx(1.0));
    CHECK(v[1] == doctest::Approx(1.0));
}

TEST_CASE("class_weighted_loss: equals plain cross-entropy under uniform priors") {
    Array probs({2, 2}, {0.7, 0.3, 0.2, 0.8});
    const std::vector<int> labels = {0, 1};
    data::ClassPriors uni{{0.5, 0.5}};
    const double weighted = baselines::class_weighted_loss(probs, labels, uni);
    const double plain = -(std::log(0.7) + std::log(0.8)) / 2.0;
    CHECK(weighted == plain);  // exact
}

TEST_CASE("class_weighted_loss: minority samples carry 9x the majority weight") {
    data::ClassPriors skew{{0.9, 0.1}};
    const auto v = baselines::inverse_prior_weights(skew);
    CHECK(v[1] / v[0] == doctest::Approx(9.0));
    // and the mean dataset weight is one: 0.9*v0 + 0.1*v1 = 1
    CHECK(0.9 * v[0] + 0.1 * v[1] == doctest::Approx(1.0));
}

TEST_CASE("class_weighted_loss: perfect probabilities give zero loss") {
    Array probs({2, 2}, {1.0, 0.0, 0.0, 1.0});
    data::ClassPriors pr{{0.5, 0.5}};
    CHECK(baselines::class_weighted_loss(probs, {0, 1}, pr) == doctest::Approx(0.0));
}

TEST_CASE("upsample: (100,25) -> (100,100), originals retained") {
    data::Dataset ds = two_class(100, 25, 1);
    nd::Rng rng(2);
    data::Dataset up = baselines::upsample(ds, rng);
    CHECK(up.class_counts() == std::vector<std::size_t>{100, 100});
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(up.samples[i].series.data == ds.samples[i].series.data);
    }
    // every appended sample is a copy of an existing minority sample
    for (std::size_t i = ds.size(); i < up.size(); ++i) {
        CHECK(up.samples[i].label == 1);
        bool found = false;
        for (const auto& orig : ds.samples) {
            if (orig.series.data == up.samples[i].series.data) found = true;
        }
        CHECK(found);
    }
}

TEST_CASE("upsample: balanced input unchanged; deterministic") {
    data::Dataset ds = two_class(30, 30, 3);
    nd::Rng rng(4);
    data::Dataset up = baselines::upsample(ds, rng);
    CHECK(up.size() == ds.size());
    nd::Rng a(5), b(5);
    data::Dataset skew = two_class(40, 10, 6);
    const auto ua = baselines::upsample(skew, a);
    const auto ub = baselines::upsample(skew, b);
    REQUIRE(ua.size() == ub.size());
    for (std::size_t i = 0; i < ua.size(); ++i) {
        CHECK(ua.samples[i].series.data == ub.samples[i].series.data);
    }
}

TEST_CASE("downsample: (100,25) -> (25,25); balanced unchanged; deterministic") {
    data::Dataset ds = two_class(100, 25, 7);
    nd::Rng rng(8);
    data::Dataset down = baselines::downsample(ds, rng);
    CHECK(down.class_counts() == std::vector<std::size_t>{25, 25});
    // kept samples are verbatim copies
    for (const auto& kept : down.samples) {
        bool found = false;
        for (const auto& orig : ds.samples) {
            if (orig.series.data == kept.series.data) found = true;
        }
        CHECK(found);
    }
    data::Dataset bal = two_class(20, 20, 9);
    nd::Rng rng2(10);
    CHECK(baselines::downsample(bal, rng2).size() == 40);

    nd::Rng a(11), b(11);
    const auto da = baselines::downsample(ds, a);
    const auto db = baselines::downsample(ds, b);
    REQUIRE(da.size() == db.size());
    for (std::size_t i = 0; i < da.size(); ++i) {
        CHECK(da.samples[i].series.data == db.samples[i].series.data);
    }
}

TEST_CASE("smote: synthetic count and interpolation formula") {
    data::Dataset ds = two_class(100, 25, 12);
    nd::Rng rng(13);
    const auto res = baselines::smote(ds, 5, {}, rng);
    CHECK(res.ds.class_counts() == std::vector<std::size_t>{100, 100});
    CHECK(res.ds.size() - ds.size() == 75);
    CHECK(res.warnings.empty());
}

TEST_CASE("smote: synthetics lie on the segment between two real same-class points") {
    data::Dataset ds = two_class(60, 15, 14);
    nd::Rng rng(15);
    const auto res = baselines::smote(ds, 5, {}, rng);
    for (std::size_t i = ds.size(); i < res.ds.size(); ++i) {
        const Array s = data::flatten_sample(res.ds.samples[i]);
        const int label = res.ds.samples[i].label;
        // find the two closest same-class originals a, b and verify
        // d(a,s) + d(s,b) = d(a,b) for the generating pair; we search all
        // pairs for one that matches within 1e-9
        double best = 1e18;
        for (std::size_t a = 0; a < ds.size(); ++a) {
            if (ds.samples[a].label != label) continue;
            for (std::size_t b2 = 0; b2 < ds.size(); ++b2) {
                if (b2 == a || ds.samples[b2].label != label) continue;
                const Array fa = data::flatten_sample(ds.samples[a]);
                const Array fb = data::flatten_sample(ds.samples[b2]);
                double das = 0, dsb = 0, dab = 0;
                for (std::size_t j = 0; j < s.size(); ++j) {
                    das += (fa.data[j] - s.data[j]) * (fa.data[j] - s.data[j]);
                    dsb += (s.data[j] - fb.data[j]) * (s.data[j] - fb.data[j]);
                    dab += (fa.data[j] - fb.data[j]) * (fa.data[j] - fb.data[j]);
                }
                best = std::min(best, std::abs(std::sqrt(das) + std::sqrt(dsb) - std::sqrt(dab)));
            }
        }
        CHECK(best < 1e-9);
    }
}

TEST_CASE("smote: u=interpolation stays within the segment endpoints") {
    // two identical samples: every synthetic coincides with them
    data::Dataset ds;
    ds.class_count = 2;
    ds.label_names = {"0", "1"};
    data::Sample a, b, c;
    a.series = Array({1, 2}, {1.0, 2.0});
    a.label = 0;
    b = a;
    c.series = Array({1, 2}, {5.0, 5.0});
    c.label = 1;
    ds.samples = {a, b, c, c, c};
    nd::Rng rng(16);
    const auto res = baselines::smote(ds, 3, {}, rng);
    CHECK(res.ds.class_counts() == std::vector<std::size_t>{3, 3});
    for (std::size_t i = 5; i < res.ds.size(); ++i) {
        if (res.ds.samples[i].label == 0) {
            CHECK(res.ds.samples[i].series.data == std::vector<double>{1.0, 2.0});
        }
    }
}

TEST_CASE("smote: hand interpolation x=[0,0], xn=[2,2], u=0.5 -> [1,1]") {
    // exercised through the formula directly: synthetic = x + u*(xn - x)
    const double u = 0.5;
    const std::vector<double> x = {0, 0}, xn = {2, 2};
    std::vector<double> s(2);
    for (int i = 0; i < 2; ++i) s[static_cast<std::size_t>(i)] = x[i] + u * (xn[i] - x[i]);
    CHECK(s == std::vector<double>{1, 1});
}

TEST_CASE("smote: single-sample class duplicates with a warning") {
    data::Dataset ds;
    ds.class_count = 2;
    ds.label_names = {"0", "1"};
    data::Sample lone, other;
    lone.series = Array({1, 2}, {3.0, 4.0});
    lone.label = 0;
    other.series = Array({1, 2}, {0.0, 0.0});
    other.label = 1;
    ds.samples = {lone, other, other, other};
    nd::Rng rng(17);
    const auto res = baselines::smote(ds, 5, {}, rng);
    CHECK(res.warnings.size() == 1);
    CHECK(res.ds.class_counts() == std::vector<std::size_t>{3, 3});
    for (const auto& s : res.ds.samples) {
        if (s.label == 0) CHECK(s.series.data == std::vector<double>{3.0, 4.0});
    }
}

TEST_CASE("smote: explicit target counts and seeded determinism") {
    data::Dataset ds = two_class(10, 5, 18);
    nd::Rng a(19), b(19);
    const auto ra = baselines::smote(ds, 3, {12, 9}, a);
    const auto rb = baselines::smote(ds, 3, {12, 9}, b);
    CHECK(ra.ds.class_counts() == std::vector<std::size_t>{12, 9});
    REQUIRE(ra.ds.size() == rb.ds.size());
    for (std::size_t i = 0; i < ra.ds.size(); ++i) {
        CHECK(ra.ds.samples[i].series.data == rb.ds.samples[i].series.data);
    }
    CHECK_THROWS_AS(baselines::smote(ds, 0, {}, a), std::invalid_argument);
}

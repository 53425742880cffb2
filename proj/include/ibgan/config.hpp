#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ibgan/dataio.hpp"
#include "ibgan/trainer.hpp"

namespace ibgan::exp {

enum class Method { ibgan, naive_gan, plain, class_weights, upsample, downsample, smote };

std::string method_name(Method m);
Method parse_method(const std::string& name);

struct DatasetConfig {
    enum class Source { synthetic, csv };
    Source source = Source::synthetic;
    std::string path;       // csv train (or whole file when path_test empty)
    std::string path_test;  // optional pre-split test csv
    double test_fraction = 0.3;
    double imbalance_drop = 0.0;  // 0 disables injection
    data::SyntheticSpec synth;    // sizes = training sizes
    std::vector<std::size_t> test_sizes;
};

struct ExperimentConfig {
    Method method = Method::ibgan;
    int replicates = 5;
    std::uint64_t seed = 0;
    std::string output = "results.txt";
    std::vector<double> p_miss_sweep;
    std::vector<std::size_t> train_size_sweep;
    bool record_duration = true;
    int smote_k = 5;
    DatasetConfig dataset;
    train::TrainConfig train;

    void validate() const;
};

/// INI-style sections ([experiment], [dataset], [train]) of key = value
/// lines; '#' starts a comment. Unknown sections or keys are rejected.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

}  // namespace ibgan::exp

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "supou/estimate.hpp"
#include "supou/graph.hpp"
#include "supou/io.hpp"
#include "supou/moments.hpp"
#include "supou/simulate.hpp"

namespace supou {

/// Validated run configuration. Every field is checked when the document is
/// loaded, so commands can assume a consistent model.
struct RunConfig {
    Json raw;  // the document as loaded (after overrides), echoed into provenance
    std::string base_dir;

    SupOUParams params;
    std::optional<GraphSpec> graph;
    double c = 0.0;

    SimConfig sim;
    int paths = 1;

    EstimationConfig estimate;
    std::string estimate_error;  // set when the default estimation settings do not fit the model
    std::vector<double> percentiles;
    std::optional<Vector> truth;  // xi at the configured model, when the map can express it

    std::vector<double> lags{0, 1, 2, 3, 4, 5};
    double check_delta = 1.0;
    std::vector<double> check_r{1, 10, 100};
    int acf_max_lag = 20;
    int histogram_bins = 20;
    std::string output_dir = "out";

    /// Parses a config document. A provenance document ({"config": ...}) is accepted too.
    static RunConfig from_json(const Json& doc, const std::string& base_dir = ".",
                               std::optional<std::uint64_t> seed_override = std::nullopt);
    static RunConfig from_file(const std::string& path,
                               std::optional<std::uint64_t> seed_override = std::nullopt);

    /// FNV-1a digest of the model block.
    std::string params_digest() const;
};

}  // namespace supou

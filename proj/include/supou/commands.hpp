#pragma once

#include <string>

#include "supou/config.hpp"
#include "supou/io.hpp"

namespace supou {

struct CommandOptions {
    std::string out_dir;  // overrides output.directory when non-empty
    unsigned jobs = 1;
};

/// Each command writes its artifacts under the output directory and returns a
/// short JSON summary for stdout.
Json cmd_simulate(const RunConfig& cfg, const CommandOptions& opt);
Json cmd_moments(const RunConfig& cfg, const CommandOptions& opt);
Json cmd_estimate(const RunConfig& cfg, const std::string& path_csv, const CommandOptions& opt);
Json cmd_mc_study(const RunConfig& cfg, const CommandOptions& opt);
Json cmd_check(const RunConfig& cfg, const CommandOptions& opt);

/// JSON views used by the commands (exposed for tests).
Json to_json(const GmmResult& r);
Json to_json(const ExistenceReport& r);
Json moments_report(const RunConfig& cfg);
Json check_report(const RunConfig& cfg);

/// Loads a path CSV written by cmd_simulate (a "t" column followed by one column per coordinate).
Matrix read_path_csv(const std::string& path, int expected_dim);

/// File name of path i.
std::string path_file_name(std::size_t index);

}  // namespace supou

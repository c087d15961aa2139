#pragma once

// Strict JSON loading of channel descriptions. Unknown keys, wrong types and
// inconsistent dimensions raise ConfigError; out-of-range values raise
// ValidationError from the channel constructors.

#include "rbc/channel.hpp"

#include <json.hpp>

#include <string>

namespace rbc {

ParallelGaussianChannel gaussian_channel_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ParallelGaussianChannel& channel);

DegradedDMC dmc_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const DegradedDMC& channel);

/// Read and parse a JSON file; I/O failures throw std::ios_base::failure and
/// syntax errors throw ConfigError.
nlohmann::json read_json_file(const std::string& path);

namespace json_util {

/// Rejects keys outside `allowed` and reports missing `required` keys.
void expect_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                 std::initializer_list<const char*> required, const std::string& where);
double number(const nlohmann::json& v, const std::string& where);
std::size_t count(const nlohmann::json& v, const std::string& where);
std::vector<double> number_array(const nlohmann::json& v, const std::string& where);
Eigen::MatrixXd matrix(const nlohmann::json& v, const std::string& where);

}  // namespace json_util

}  // namespace rbc

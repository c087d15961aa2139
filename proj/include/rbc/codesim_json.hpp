#pragma once

// Strict JSON loading of toy-code simulation requests.

#include "rbc/codesim.hpp"

#include <json.hpp>

#include <optional>

namespace rbc::codesim {

struct CodeRequest {
  DegradedDMC channel;
  dmc::AuxiliaryScheme scheme;
  ToyCodeConfig config;
  std::optional<double> rate_fraction;  // rates = fraction * region point of the scheme
  std::size_t independence_draws = 100000;
};

/// Schema: {"channel": <dmc channel>, "scheme": [{"pu": [...], "px_given_u": [[...]]}, ...],
/// "n", "r1", "r2" | "rate_fraction", "epsilon", "seed", "binning",
/// "satellite_extra_bits", "shared_index", "independence_draws"}.
CodeRequest code_request_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const dmc::AuxiliaryScheme& scheme);

}  // namespace rbc::codesim

#include "rbc/codesim_json.hpp"

#include "rbc/channel_json.hpp"
#include "rbc/error.hpp"

namespace rbc::codesim {

namespace {

dmc::AuxiliaryScheme scheme_from_json(const nlohmann::json& v) {
  if (!v.is_array()) throw ConfigError("scheme: expected an array of sub-channel schemes");
  dmc::AuxiliaryScheme s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string where = "scheme[" + std::to_string(i) + "]";
    json_util::expect_keys(v[i], {"pu", "px_given_u"}, {"pu", "px_given_u"}, where);
    s.subchannels.push_back({json_util::number_array(v[i]["pu"], where + ".pu"),
                             json_util::matrix(v[i]["px_given_u"], where + ".px_given_u")});
  }
  return s;
}

bool boolean(const nlohmann::json& v, const std::string& where) {
  if (!v.is_boolean()) throw ConfigError(where + ": expected a boolean");
  return v.get<bool>();
}

}  // namespace

CodeRequest code_request_from_json(const nlohmann::json& doc) {
  json_util::expect_keys(doc,
                         {"channel", "scheme", "n", "r1", "r2", "rate_fraction", "epsilon", "seed", "binning",
                          "satellite_extra_bits", "shared_index", "independence_draws"},
                         {"channel", "scheme"}, "code");
  CodeRequest req{dmc_from_json(doc["channel"]), scheme_from_json(doc["scheme"]), {}, std::nullopt, 100000};
  dmc::validate_scheme(req.channel, req.scheme);
  auto& c = req.config;
  if (doc.contains("n")) c.n = json_util::count(doc["n"], "n");
  const bool explicit_rates = doc.contains("r1") || doc.contains("r2");
  if (explicit_rates && doc.contains("rate_fraction"))
    throw ConfigError("code: give either r1/r2 or rate_fraction, not both");
  if (doc.contains("r1")) c.r1 = json_util::number(doc["r1"], "r1");
  if (doc.contains("r2")) c.r2 = json_util::number(doc["r2"], "r2");
  if (doc.contains("rate_fraction")) {
    const double f = json_util::number(doc["rate_fraction"], "rate_fraction");
    if (!(f >= 0.0 && f <= 1.0)) throw ValidationError("rate_fraction must lie in [0, 1]");
    req.rate_fraction = f;
    const RatePair region = dmc::dmc_rate_pair(req.channel, req.scheme);
    c.r1 = f * region.r1;
    c.r2 = f * region.r2;
  }
  if (doc.contains("epsilon")) c.epsilon = json_util::number(doc["epsilon"], "epsilon");
  if (doc.contains("seed")) c.seed = json_util::count(doc["seed"], "seed");
  if (doc.contains("binning")) c.binning = boolean(doc["binning"], "binning");
  if (doc.contains("satellite_extra_bits"))
    c.satellite_extra_bits = static_cast<int>(json_util::count(doc["satellite_extra_bits"], "satellite_extra_bits"));
  if (doc.contains("shared_index")) c.shared_index = boolean(doc["shared_index"], "shared_index");
  if (doc.contains("independence_draws"))
    req.independence_draws = json_util::count(doc["independence_draws"], "independence_draws");
  return req;
}

nlohmann::json to_json(const dmc::AuxiliaryScheme& scheme) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : scheme.subchannels) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < s.px_given_u.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(s.px_given_u.cols()));
      for (Eigen::Index c = 0; c < s.px_given_u.cols(); ++c) row[static_cast<std::size_t>(c)] = s.px_given_u(r, c);
      rows.push_back(row);
    }
    out.push_back({{"pu", s.pu}, {"px_given_u", rows}});
  }
  return out;
}

}  // namespace rbc::codesim

#include "rbc/channel_json.hpp"

#include "rbc/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace rbc {

namespace json_util {

void expect_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                 std::initializer_list<const char*> required, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return it.key() == k; });
    if (!known) throw ConfigError(where + ": unknown key \"" + it.key() + "\"");
  }
  for (const char* k : required)
    if (!obj.contains(k)) throw ConfigError(where + ": missing key \"" + k + "\"");
}

double number(const nlohmann::json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError(where + ": expected a number");
  return v.get<double>();
}

std::size_t count(const nlohmann::json& v, const std::string& where) {
  if (!v.is_number_integer() && !v.is_number_unsigned())
    throw ConfigError(where + ": expected an integer");
  const auto n = v.get<long long>();
  if (n < 0) throw ConfigError(where + ": expected a nonnegative integer");
  return static_cast<std::size_t>(n);
}

std::vector<double> number_array(const nlohmann::json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + ": expected an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t j = 0; j < v.size(); ++j)
    out.push_back(number(v[j], where + "[" + std::to_string(j) + "]"));
  return out;
}

Eigen::MatrixXd matrix(const nlohmann::json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ConfigError(where + ": expected a nonempty array of rows");
  const auto first = number_array(v[0], where + "[0]");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(first.size()));
  for (std::size_t r = 0; r < v.size(); ++r) {
    const auto row = number_array(v[r], where + "[" + std::to_string(r) + "]");
    if (row.size() != first.size()) throw ConfigError(where + ": ragged matrix");
    for (std::size_t c = 0; c < row.size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
  }
  return m;
}

}  // namespace json_util

using namespace json_util;

ParallelGaussianChannel gaussian_channel_from_json(const nlohmann::json& doc) {
  expect_keys(doc, {"M", "K", "sigma_sq", "delta_sq", "power"},
              {"M", "K", "sigma_sq", "delta_sq", "power"}, "channel");
  const std::size_t m = count(doc["M"], "M");
  const std::size_t k = count(doc["K"], "K");
  const auto& rows = doc["sigma_sq"];
  if (!rows.is_array()) throw ConfigError("sigma_sq: expected an array of K rows");
  if (rows.size() != k)
    throw ConfigError("sigma_sq has " + std::to_string(rows.size()) + " rows, expected K=" +
                      std::to_string(k));
  std::vector<std::vector<double>> sigma;
  for (std::size_t r = 0; r < k; ++r) {
    sigma.push_back(number_array(rows[r], "sigma_sq[" + std::to_string(r) + "]"));
    if (sigma.back().size() != m)
      throw ConfigError("sigma_sq[" + std::to_string(r) + "] has " +
                        std::to_string(sigma.back().size()) + " entries, expected M=" +
                        std::to_string(m));
  }
  auto delta = number_array(doc["delta_sq"], "delta_sq");
  if (delta.size() != m)
    throw ConfigError("delta_sq has " + std::to_string(delta.size()) + " entries, expected M=" +
                      std::to_string(m));

  const auto& power = doc["power"];
  expect_keys(power, {"per_subchannel", "total"}, {}, "power");
  if (power.size() != 1) throw ConfigError("power: give exactly one of per_subchannel or total");
  PowerConstraint constraint;
  if (power.contains("per_subchannel")) {
    auto caps = number_array(power["per_subchannel"], "power.per_subchannel");
    if (caps.size() != m)
      throw ConfigError("power.per_subchannel has " + std::to_string(caps.size()) +
                        " entries, expected M=" + std::to_string(m));
    constraint = PerSubChannelPower{std::move(caps)};
  } else {
    constraint = TotalPower{number(power["total"], "power.total")};
  }
  return ParallelGaussianChannel(std::move(sigma), std::move(delta), std::move(constraint));
}

nlohmann::json to_json(const ParallelGaussianChannel& channel) {
  nlohmann::json doc;
  doc["M"] = channel.subchannels();
  doc["K"] = channel.receivers();
  doc["sigma_sq"] = channel.sigma_sq();
  doc["delta_sq"] = channel.delta_sq();
  if (channel.has_total_power()) {
    doc["power"] = {{"total", channel.total_power()}};
  } else {
    auto caps = channel.power_caps();
    doc["power"] = {{"per_subchannel", std::vector<double>(caps.begin(), caps.end())}};
  }
  return doc;
}

DegradedDMC dmc_from_json(const nlohmann::json& doc) {
  expect_keys(doc, {"M", "K", "subchannels"}, {"M", "K", "subchannels"}, "dmc");
  const std::size_t m = count(doc["M"], "M");
  const std::size_t k = count(doc["K"], "K");
  const auto& subs = doc["subchannels"];
  if (!subs.is_array() || subs.size() != m)
    throw ConfigError("subchannels: expected an array of M=" + std::to_string(m) + " entries");
  std::vector<DmcSubChannel> out;
  for (std::size_t i = 0; i < m; ++i) {
    const std::string where = "subchannels[" + std::to_string(i) + "]";
    const auto& s = subs[i];
    expect_keys(s, {"inputs", "receivers", "group2", "order"}, {"receivers", "group2", "order"},
                where);
    DmcSubChannel sub;
    sub.group2 = matrix(s["group2"], where + ".group2");
    const auto& recv = s["receivers"];
    if (!recv.is_array() || recv.size() != k)
      throw ConfigError(where + ".receivers: expected K=" + std::to_string(k) + " matrices");
    for (std::size_t r = 0; r < k; ++r)
      sub.receivers.push_back(matrix(recv[r], where + ".receivers[" + std::to_string(r) + "]"));
    if (s.contains("inputs")) {
      const std::size_t inputs = count(s["inputs"], where + ".inputs");
      if (inputs != static_cast<std::size_t>(sub.group2.rows()))
        throw ConfigError(where + ".inputs disagrees with the matrix row count");
    }
    const auto& order = s["order"];
    expect_keys(order, {"perm", "cut"}, {"perm", "cut"}, where + ".order");
    if (!order["perm"].is_array()) throw ConfigError(where + ".order.perm: expected an array");
    for (std::size_t j = 0; j < order["perm"].size(); ++j)
      sub.order.perm.push_back(count(order["perm"][j], where + ".order.perm"));
    sub.order.cut = count(order["cut"], where + ".order.cut");
    out.push_back(std::move(sub));
  }
  return DegradedDMC(std::move(out));
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

nlohmann::json to_json(const DegradedDMC& channel) {
  nlohmann::json doc;
  doc["M"] = channel.subchannels();
  doc["K"] = channel.receivers();
  doc["subchannels"] = nlohmann::json::array();
  for (std::size_t i = 0; i < channel.subchannels(); ++i) {
    const auto& s = channel.subchannel(i);
    nlohmann::json sub;
    sub["inputs"] = s.group2.rows();
    sub["group2"] = matrix_json(s.group2);
    sub["receivers"] = nlohmann::json::array();
    for (const auto& r : s.receivers) sub["receivers"].push_back(matrix_json(r));
    sub["order"] = {{"perm", s.order.perm}, {"cut", s.order.cut}};
    doc["subchannels"].push_back(sub);
  }
  return doc;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace rbc

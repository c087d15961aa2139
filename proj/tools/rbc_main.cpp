#include "rbc/atomic_file.hpp"
#include "rbc/channel_json.hpp"
#include "rbc/codesim_json.hpp"
#include "rbc/dmc_region.hpp"
#include "rbc/error.hpp"
#include "rbc/fading.hpp"
#include "rbc/gaussian_region.hpp"

#include <CLI11.hpp>
#include <fmt/core.h>
#include <json.hpp>

#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

namespace {

enum Exit : int { kOk = 0, kValidation = 1, kNotConverged = 2, kConfig = 3, kUsage = 4, kIo = 5 };

using json = nlohmann::ordered_json;

// Rows of JSON scalars rendered as CSV or as an array of objects.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<json>> rows;

  std::string csv() const {
    std::string out;
    for (std::size_t j = 0; j < header.size(); ++j) out += (j ? "," : "") + header[j];
    out += '\n';
    for (const auto& row : rows) {
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j) out += ',';
        const json& v = row[j];
        if (v.is_boolean()) out += v.get<bool>() ? "1" : "0";
        else if (v.is_number_integer() || v.is_number_unsigned()) out += v.dump();
        else if (v.is_number()) out += fmt::format("{:.12g}", v.get<double>());
        else if (v.is_null()) out += "nan";
        else out += v.get<std::string>();
      }
      out += '\n';
    }
    return out;
  }

  std::string json_text() const {
    json arr = json::array();
    for (const auto& row : rows) {
      json obj = json::object();
      for (std::size_t j = 0; j < row.size(); ++j) obj[header[j]] = row[j];
      arr.push_back(obj);
    }
    return arr.dump(2) + "\n";
  }
};

json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return std::isfinite(v) ? json(v) : json(nullptr);
}

struct Output {
  std::string path;
  std::string format = "csv";

  void add_to(CLI::App* app, bool table = true) {
    app->add_option("--out", path, "Output file (stdout when omitted)");
    if (table) app->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  }

  void write(const std::string& text) const {
    if (path.empty()) std::cout << text;
    else rbc::write_file_atomic(path, text);
  }

  void write(const Table& t) const { write(format == "json" ? t.json_text() : t.csv()); }
};

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, end - pos);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw CLI::ValidationError(what, "'" + item + "' is not a number");
    }
    pos = end + 1;
  }
  return out;
}

void report_failures(const std::vector<std::string>& errors) {
  for (const auto& e : errors) std::cerr << "rbc: " << e << '\n';
}

int run_region_gaussian(const std::string& channel_path, std::size_t points, const Output& out) {
  const auto channel = rbc::gaussian_channel_from_json(rbc::read_json_file(channel_path));
  if (channel.has_total_power())
    throw rbc::ValidationError("channel has a total power budget; use 'region total-power'");
  const auto sweep = rbc::gaussian::boundary_sweep(channel, points);
  Table t;
  t.header = {"r1_target", "r1", "r2"};
  for (std::size_t i = 0; i < channel.subchannels(); ++i) t.header.push_back(fmt::format("q_{}", i + 1));
  t.header.insert(t.header.end(), {"max_kkt_residual", "converged"});
  std::vector<std::string> errors;
  for (const auto& p : sweep) {
    std::vector<json> row{number(p.r1_target), number(p.rates.r1), number(p.rates.r2)};
    for (std::size_t i = 0; i < channel.subchannels(); ++i)
      row.push_back(p.error.empty() ? number(p.q.q[i]) : json(nullptr));
    row.push_back(p.error.empty() ? number(p.certificate.residuals.max()) : json(nullptr));
    row.push_back(p.converged && p.error.empty());
    t.rows.push_back(std::move(row));
    if (!p.error.empty()) errors.push_back(fmt::format("r1_target {:.6g}: {}", p.r1_target, p.error));
    else if (!p.converged) errors.push_back(fmt::format("r1_target {:.6g}: solver did not converge", p.r1_target));
  }
  out.write(t);
  report_failures(errors);
  return errors.empty() ? kOk : kNotConverged;
}

int run_region_total(const std::string& channel_path, std::size_t points, const Output& out) {
  const auto channel = rbc::gaussian_channel_from_json(rbc::read_json_file(channel_path));
  if (!channel.has_total_power())
    throw rbc::ValidationError("channel has per-sub-channel caps; use 'region gaussian'");
  const auto region = rbc::gaussian::total_power_region(channel, points);
  Table t;
  t.header = {"r1_target", "r1", "r2"};
  for (std::size_t i = 0; i < channel.subchannels(); ++i) t.header.push_back(fmt::format("p_{}", i + 1));
  for (std::size_t i = 0; i < channel.subchannels(); ++i) t.header.push_back(fmt::format("q_{}", i + 1));
  t.header.insert(t.header.end(), {"max_kkt_residual", "converged"});
  std::vector<std::string> errors;
  for (const auto& p : region) {
    const bool ok = p.error.empty();
    std::vector<json> row{number(p.r1_target), number(p.rates.r1), number(p.rates.r2)};
    for (std::size_t i = 0; i < channel.subchannels(); ++i) row.push_back(ok ? number(p.allocation[i]) : json(nullptr));
    for (std::size_t i = 0; i < channel.subchannels(); ++i) row.push_back(ok ? number(p.q.q[i]) : json(nullptr));
    row.push_back(ok ? number(p.certificate.residuals.max()) : json(nullptr));
    row.push_back(p.converged && ok);
    t.rows.push_back(std::move(row));
    if (!ok) errors.push_back(fmt::format("r1_target {:.6g}: {}", p.r1_target, p.error));
    else if (!p.converged) errors.push_back(fmt::format("r1_target {:.6g}: solver did not converge", p.r1_target));
  }
  out.write(t);
  report_failures(errors);
  return errors.empty() ? kOk : kNotConverged;
}

int run_region_dmc(const std::string& channel_path, const rbc::dmc::BruteForceOptions& options, const Output& out) {
  const auto channel = rbc::dmc_from_json(rbc::read_json_file(channel_path));
  const auto f = rbc::dmc::dmc_region_bruteforce(channel, options);
  Table t;
  t.header = {"r1", "r2"};
  for (const auto& p : f.points) t.rows.push_back({number(p.r1), number(p.r2)});
  out.write(t);
  std::cerr << fmt::format("rbc: grid {} movement {:.3g} schemes {}\n", f.grid_steps, f.movement, f.schemes);
  if (!f.converged) {
    std::cerr << fmt::format("rbc: frontier did not settle within tolerance {:.3g}\n", options.tolerance);
    return kNotConverged;
  }
  return kOk;
}

struct FadingArgs {
  std::string powers = "2,10,100";
  std::size_t theta_points = 64;
  std::size_t samples = 1000000;
  std::uint64_t seed = 7;
  std::size_t chord_points = 2;
};

int run_fading_sweep(const FadingArgs& a, const Output& out) {
  const auto powers = parse_list(a.powers, "--P");
  if (a.theta_points < 2) throw rbc::ValidationError("--theta-points must be at least 2");
  const auto data = rbc::fading::fig2_sweep(powers, rbc::fading::quantile_thetas(a.theta_points), a.samples, a.seed);
  Table t;
  t.header = {"P", "theta", "r1", "r1_se", "r2", "r2_se"};
  bool warned = false;
  for (const auto& r : data.curves) {
    t.rows.push_back({number(r.power), number(r.theta), number(r.rates.rates.r1), number(r.rates.se.r1),
                      number(r.rates.rates.r2), number(r.rates.se.r2)});
    warned = warned || r.rates.power_warning;
  }
  out.write(t);
  if (warned) std::cerr << "rbc: average power exceeds the budget by more than 3 standard errors\n";
  return kOk;
}

int run_fading_baseline(const FadingArgs& a, const Output& out) {
  const auto powers = parse_list(a.powers, "--P");
  const auto data = rbc::fading::fig2_sweep(powers, {0.0}, a.samples, a.seed, a.chord_points);
  Table t;
  t.header = {"P", "lambda", "r1", "r2"};
  for (const auto& c : data.chords)
    t.rows.push_back({number(c.power), number(c.lambda), number(c.rates.r1), number(c.rates.r2)});
  out.write(t);
  return kOk;
}

struct KktArgs {
  std::string channel;
  std::string q;
  std::string allocation;
  double r1 = std::numeric_limits<double>::quiet_NaN();
  double tolerance = 1e-6;
};

int run_kkt_check(const KktArgs& a, const Output& out) {
  const auto channel = rbc::gaussian_channel_from_json(rbc::read_json_file(a.channel));
  const rbc::PowerSplit split{parse_list(a.q, "--q")};
  std::vector<double> allocation;
  if (!a.allocation.empty()) allocation = parse_list(a.allocation, "--allocation");
  if (channel.has_total_power() && allocation.empty())
    throw rbc::ValidationError("a total-power channel needs --allocation");
  if (split.q.size() != channel.subchannels())
    throw rbc::ValidationError(fmt::format("--q has {} entries but the channel has {} sub-channels", split.q.size(),
                                           channel.subchannels()));
  const auto check = rbc::validate_power_split(channel, split, allocation);
  if (!check) throw rbc::ValidationError(check.message);
  const auto rates = rbc::gaussian::region_point(channel, split, allocation);
  const double r1 = std::isnan(a.r1) ? rates.r1 : a.r1;
  const auto cert = rbc::gaussian::recover_certificate(channel, split, r1, rates.r2, allocation);
  static const char* names[] = {"stationarity", "normalization", "slack_rate1", "slack_rate2",
                                "slack_lower", "slack_upper", "dual_rates", "dual_power"};
  json residuals = json::object();
  for (std::size_t c = 0; c < cert.residuals.condition.size(); ++c) residuals[names[c]] = cert.residuals.condition[c];
  const double worst = cert.residuals.max();
  const bool ok = worst <= a.tolerance;
  const json report{{"r1_target", r1},
                    {"r1", rates.r1},
                    {"r2", rates.r2},
                    {"alpha", cert.alpha},
                    {"beta", cert.beta},
                    {"m1", cert.m1},
                    {"m2", cert.m2},
                    {"residuals", residuals},
                    {"primal_residual", cert.residuals.primal},
                    {"max_residual", worst},
                    {"tolerance", a.tolerance},
                    {"satisfied", ok}};
  out.write(report.dump(2) + "\n");
  if (!ok) std::cerr << fmt::format("rbc: KKT residual {:.3g} exceeds {:.3g}\n", worst, a.tolerance);
  return ok ? kOk : kNotConverged;
}

struct SimArgs {
  std::string config;
  std::size_t trials = 100000;
  bool skip_leakage = false;
};

int run_simcode(const SimArgs& a, const Output& out) {
  namespace cs = rbc::codesim;
  const auto req = cs::code_request_from_json(rbc::read_json_file(a.config));
  const auto code = cs::build_code(req.channel, req.scheme, req.config);
  const auto& s = code.sizes();
  json report;
  report["config"] = {{"n", req.config.n},
                      {"r1", req.config.r1},
                      {"r2", req.config.r2},
                      {"epsilon", req.config.epsilon},
                      {"seed", req.config.seed},
                      {"binning", req.config.binning},
                      {"satellite_extra_bits", req.config.satellite_extra_bits},
                      {"shared_index", req.config.shared_index}};
  if (req.rate_fraction) report["config"]["rate_fraction"] = *req.rate_fraction;
  report["region_point"] = {{"r1", code.info().region.r1}, {"r2", code.info().region.r2}};
  report["sizes"] = {{"cloud_bits", s.cloud_bits},   {"satellite_bits", s.satellite_bits},
                     {"m1_bits", s.m1_bits},         {"m2_bits", s.m2_bits},
                     {"bin_bits", s.bin_bits},       {"digest", fmt::format("{:016x}", code.digest())}};
  const auto sim = cs::simulate(code, a.trials);
  report["errors"] = {{"trials", sim.trials}, {"group1", sim.group1_error}, {"group2", sim.group2_error}};
  if (!a.skip_leakage) {
    const auto leak = cs::exact_leakage(code);
    report["leakage"] = {{"m1_z", leak.m1_z}, {"m2_y", leak.m2_y}};
  }
  if (code.subchannels() >= 2) {
    const auto ind = cs::check_conditional_independence(code, req.independence_draws);
    report["independence"] = {{"draws", ind.draws},       {"p_values", ind.p_values},
                              {"min_p", ind.min_p},       {"adjusted_p", ind.adjusted_p},
                              {"rejected", ind.rejected}};
  }
  out.write(report.dump(2) + "\n");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rate regions, fading sweeps and toy codes for parallel broadcast channels with secrecy"};
  app.require_subcommand(1);
  Output out;
  std::function<int()> action;

  std::string channel_path;
  std::size_t points = 21;
  auto* region = app.add_subcommand("region", "Capacity region boundaries");
  region->require_subcommand(1);
  auto* gauss = region->add_subcommand("gaussian", "Gaussian region under per-sub-channel caps");
  gauss->add_option("--channel", channel_path, "Gaussian channel JSON")->required();
  gauss->add_option("--points", points, "Number of R1 targets")->check(CLI::Range(2, 100000));
  out.add_to(gauss);
  gauss->callback([&] { action = [&] { return run_region_gaussian(channel_path, points, out); }; });

  auto* total = region->add_subcommand("total-power", "Gaussian region under a total power budget");
  total->add_option("--channel", channel_path, "Gaussian channel JSON")->required();
  total->add_option("--points", points, "Number of R1 targets")->check(CLI::Range(2, 100000));
  out.add_to(total);
  total->callback([&] { action = [&] { return run_region_total(channel_path, points, out); }; });

  rbc::dmc::BruteForceOptions bf;
  auto* dmc = region->add_subcommand("dmc", "Brute-force region of a degraded DMC");
  dmc->add_option("--channel", channel_path, "DMC JSON")->required();
  dmc->add_option("--grid", bf.grid_steps, "Initial lattice steps")->check(CLI::Range(1, 1024));
  dmc->add_option("--max-grid", bf.max_grid_steps, "Largest lattice steps")->check(CLI::Range(1, 4096));
  dmc->add_option("--tolerance", bf.tolerance, "Frontier movement tolerance in nats");
  dmc->add_option("--budget", bf.scheme_budget, "Largest number of schemes per level");
  out.add_to(dmc);
  dmc->callback([&] { action = [&] { return run_region_dmc(channel_path, bf, out); }; });

  FadingArgs fa;
  auto* fading = app.add_subcommand("fading", "Rayleigh fading threshold-policy rates");
  fading->require_subcommand(1);
  auto* sweep = fading->add_subcommand("sweep", "Threshold curves for several budgets");
  auto* base = fading->add_subcommand("baseline", "Time-sharing chords between the corners");
  for (auto* sub : {sweep, base}) {
    sub->add_option("--P", fa.powers, "Comma-separated power budgets");
    sub->add_option("--samples", fa.samples, "Monte Carlo samples")->check(CLI::Range(std::size_t{64}, std::size_t{1} << 34));
    sub->add_option("--seed", fa.seed, "Random seed");
    out.add_to(sub);
  }
  sweep->add_option("--theta-points", fa.theta_points, "Thresholds per curve")->check(CLI::Range(2, 100000));
  base->add_option("--points", fa.chord_points, "Points per chord")->check(CLI::Range(2, 100000));
  sweep->callback([&] { action = [&] { return run_fading_sweep(fa, out); }; });
  base->callback([&] { action = [&] { return run_fading_baseline(fa, out); }; });

  KktArgs ka;
  auto* kkt = app.add_subcommand("kkt", "Optimality certificates");
  kkt->require_subcommand(1);
  auto* check = kkt->add_subcommand("check", "Recover multipliers at a power split and report residuals");
  check->add_option("--channel", ka.channel, "Gaussian channel JSON")->required();
  check->add_option("--q", ka.q, "Comma-separated cloud powers Q_i")->required();
  check->add_option("--allocation", ka.allocation, "Comma-separated P_i in total-power mode");
  check->add_option("--r1", ka.r1, "R1 target (default: R1 at q)");
  check->add_option("--tol", ka.tolerance, "Largest accepted residual");
  out.add_to(check, false);
  check->callback([&] { action = [&] { return run_kkt_check(ka, out); }; });

  SimArgs sa;
  auto* sim = app.add_subcommand("simcode", "Simulate a toy superposition code");
  sim->add_option("--config", sa.config, "Code request JSON")->required();
  sim->add_option("--trials", sa.trials, "Decoding trials")->check(CLI::Range(std::size_t{1}, std::size_t{1} << 32));
  sim->add_flag("--skip-leakage", sa.skip_leakage, "Do not enumerate exact leakages");
  out.add_to(sim, false);
  sim->callback([&] { action = [&] { return run_simcode(sa, out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    return action();
  } catch (const CLI::ValidationError& e) {
    std::cerr << "rbc: " << e.what() << '\n';
    return kUsage;
  } catch (const rbc::ConfigError& e) {
    std::cerr << "rbc: config error: " << e.what() << '\n';
    return kConfig;
  } catch (const rbc::SizeGuardError& e) {
    std::cerr << "rbc: size guard: " << e.what() << '\n';
    return kValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "rbc: invalid input: " << e.what() << '\n';
    return kValidation;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "rbc: i/o error: " << e.what() << '\n';
    return kIo;
  }
}

// threshmix command-line workflow: simulate | fit | quantile | predict |
// summary | fetch. Every command exits nonzero with a one-line diagnostic on
// failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "threshmix/digest.hpp"
#include "threshmix/io.hpp"
#include "threshmix/model.hpp"
#include "threshmix/nwis.hpp"
#include "threshmix/simulate.hpp"
#include "threshmix/version.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

threshmix::SpliceSpec scenario_from_config(const json& j) {
  threshmix::SpliceSpec spec = threshmix::reference_scenario();
  if (j.contains("weights")) {
    spec.bulk.weights = j.at("weights").get<std::vector<double>>();
    const auto shapes = j.at("shapes").get<std::vector<double>>();
    const auto rates = j.at("rates").get<std::vector<double>>();
    if (shapes.size() != spec.bulk.weights.size() || rates.size() != shapes.size()) {
      throw std::runtime_error("scenario config: weights/shapes/rates length mismatch");
    }
    spec.bulk.components.clear();
    for (std::size_t c = 0; c < shapes.size(); ++c) {
      spec.bulk.components.push_back({shapes[c], rates[c]});
    }
  }
  if (j.contains("tail")) {
    spec.tail.u = j.at("tail").at("u").get<double>();
    spec.tail.sigma = j.at("tail").at("sigma").get<double>();
    spec.tail.xi = j.at("tail").at("xi").get<double>();
  }
  return spec;
}

void print_summary_row(std::ostream& os, const std::string& name,
                       const threshmix::SummaryStats& s) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%.6g,%.6g,%.6g,%.6g,%.6g", name.c_str(), s.mean, s.sd,
                s.q2_5, s.q50, s.q97_5);
  os << buf << '\n';
}

int run(int argc, char** argv) {
  CLI::App app{"Bayesian extreme-value estimation with a Dirichlet-process-mixture bulk and a generalized Pareto tail"};
  app.set_version_flag("--version", std::string("threshmix ") + threshmix::kVersion);
  app.require_subcommand(1);

  // simulate ----------------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "Draw synthetic data from a spliced bulk/tail generator");
  int sim_n = 200;
  std::uint64_t sim_seed = 1;
  std::string sim_config, sim_out = "sim.csv";
  sim->add_option("--n", sim_n, "Number of draws");
  sim->add_option("--seed", sim_seed, "RNG seed");
  sim->add_option("--config", sim_config, "Scenario JSON (weights/shapes/rates/tail)");
  sim->add_option("--out", sim_out, "Output CSV path");

  // fit ---------------------------------------------------------------------
  auto* fit_cmd = app.add_subcommand("fit", "Run the MCMC sampler on a data file");
  std::string fit_data, fit_config, fit_out = "chain";
  std::optional<std::uint64_t> fit_seed;
  bool fit_full = false;
  fit_cmd->add_option("--data", fit_data, "Input CSV (single numeric column)")->required();
  fit_cmd->add_option("--config", fit_config, "Fit configuration JSON (or a manifest)");
  fit_cmd->add_option("--seed", fit_seed, "RNG seed (overrides config)");
  fit_cmd->add_option("--out", fit_out, "Output prefix for .csv/.clusters.jsonl/.manifest.json");
  fit_cmd->add_flag("--full", fit_full, "Store per-observation memberships in the snapshots");

  // quantile ----------------------------------------------------------------
  auto* quant = app.add_subcommand("quantile", "Posterior draws and summary of model quantiles");
  std::string q_chain, q_out, q_config;
  std::uint64_t q_seed = 0;
  std::vector<double> q_ps{0.95};
  quant->add_option("--chain", q_chain, "Chain prefix written by fit")->required();
  quant->add_option("--p", q_ps, "Probability levels (repeatable)");
  quant->add_option("--out", q_out, "Output prefix (default: chain prefix)");
  quant->add_option("--config", q_config, "Unused; accepted for interface uniformity");
  quant->add_option("--seed", q_seed, "Unused; accepted for interface uniformity");

  // predict -----------------------------------------------------------------
  auto* pred = app.add_subcommand("predict", "Posterior predictive density grid (x,mean,lo,hi)");
  std::string p_chain, p_out, p_config;
  std::uint64_t p_seed = 0;
  double p_xmin = 0.0, p_xmax = 0.0, p_level = 0.95;
  int p_points = 400;
  pred->add_option("--chain", p_chain, "Chain prefix written by fit")->required();
  pred->add_option("--xmin", p_xmin, "Grid start (default: posterior 0.1% quantile)");
  pred->add_option("--xmax", p_xmax, "Grid end (default: posterior 99.9% quantile)");
  pred->add_option("--points", p_points, "Grid size");
  pred->add_option("--level", p_level, "Credible band level");
  pred->add_option("--out", p_out, "Output CSV (default: <chain>.density.csv)");
  pred->add_option("--config", p_config, "Unused; accepted for interface uniformity");
  pred->add_option("--seed", p_seed, "Unused; accepted for interface uniformity");

  // summary -----------------------------------------------------------------
  auto* summ = app.add_subcommand("summary", "Per-parameter chain summary table");
  std::string s_chain, s_out, s_config;
  std::uint64_t s_seed = 0;
  summ->add_option("--chain", s_chain, "Chain prefix written by fit")->required();
  summ->add_option("--out", s_out, "Also write the table to this CSV");
  summ->add_option("--config", s_config, "Unused; accepted for interface uniformity");
  summ->add_option("--seed", s_seed, "Unused; accepted for interface uniformity");

  // fetch -------------------------------------------------------------------
  auto* fetch_cmd = app.add_subcommand("fetch", "Fetch instantaneous values from USGS NWIS");
  std::string f_site, f_start, f_end, f_param = "00060", f_out = "nwis.csv", f_offline, f_config;
  std::uint64_t f_seed = 0;
  fetch_cmd->add_option("--site", f_site, "USGS station id")->required();
  fetch_cmd->add_option("--start", f_start, "Start instant (ISO-8601)");
  fetch_cmd->add_option("--end", f_end, "End instant (ISO-8601)");
  fetch_cmd->add_option("--param", f_param, "Parameter code (00060 = discharge, ft3/s)");
  fetch_cmd->add_option("--out", f_out, "Output CSV path");
  fetch_cmd->add_option("--offline", f_offline, "Parse a cached response file instead of hitting the network");
  fetch_cmd->add_option("--config", f_config, "Unused; accepted for interface uniformity");
  fetch_cmd->add_option("--seed", f_seed, "Unused; accepted for interface uniformity");

  CLI11_PARSE(app, argc, argv);

  if (*sim) {
    threshmix::SpliceSpec spec = threshmix::reference_scenario();
    if (!sim_config.empty()) {
      const json j = threshmix::read_json_file(sim_config);
      spec = scenario_from_config(j);
      if (j.contains("n")) sim_n = j.at("n").get<int>();
      if (j.contains("seed") && sim->count("--seed") == 0) {
        sim_seed = j.at("seed").get<std::uint64_t>();
      }
    }
    threshmix::Rng rng(sim_seed);
    const auto values = threshmix::sample_spliced(sim_n, spec, rng);
    threshmix::write_values_csv(sim_out, values);
    std::cout << "wrote " << values.size() << " draws to " << sim_out << '\n';
    return 0;
  }

  if (*fit_cmd) {
    threshmix::FitConfig config;
    if (!fit_config.empty()) {
      config = threshmix::parse_fit_config(threshmix::read_json_file(fit_config));
    }
    if (fit_seed) config.seed = *fit_seed;
    const threshmix::Dataset data = threshmix::read_csv(fit_data);
    const threshmix::Chain chain = threshmix::fit(data.values, config);

    threshmix::write_chain_csv(fit_out + ".csv", chain);
    threshmix::write_cluster_snapshots(fit_out + ".clusters.jsonl", chain, fit_full);
    threshmix::write_manifest(fit_out + ".manifest.json", chain);
    std::cout << "retained " << chain.samples.size() << " samples (acceptance xi "
              << chain.acceptance.xi << ", sigma " << chain.acceptance.sigma << ", u "
              << chain.acceptance.u << "); wrote " << fit_out << ".{csv,clusters.jsonl,manifest.json}\n";
    return 0;
  }

  if (*quant) {
    for (double p : q_ps) {
      if (!(p > 0.0) || !(p < 1.0)) {
        throw std::runtime_error("quantile: p must be in (0,1)");
      }
    }
    const threshmix::Chain chain = threshmix::read_chain(q_chain);
    const std::string prefix = q_out.empty() ? q_chain + ".quantile" : q_out;

    std::ofstream draws(prefix + ".draws.csv", std::ios::binary);
    if (!draws) throw std::runtime_error("cannot open " + prefix + ".draws.csv");
    draws << "iter,p,quantile\n";
    std::ofstream table(prefix + ".summary.csv", std::ios::binary);
    if (!table) throw std::runtime_error("cannot open " + prefix + ".summary.csv");
    table << "p,mean,sd,q2.5,q50,q97.5\n";
    std::cout << "p,mean,sd,q2.5,q50,q97.5\n";
    for (double p : q_ps) {
      const auto qs = threshmix::quantile_posterior(p, chain);
      for (std::size_t i = 0; i < qs.size(); ++i) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g", chain.sweep_index[i], p, qs[i]);
        draws << buf << '\n';
      }
      const auto stats = threshmix::summarize(qs);
      char name[32];
      std::snprintf(name, sizeof name, "%g", p);
      print_summary_row(table, name, stats);
      print_summary_row(std::cout, name, stats);
    }
    return 0;
  }

  if (*pred) {
    const threshmix::Chain chain = threshmix::read_chain(p_chain);
    if (p_points < 2) throw std::runtime_error("predict: need at least 2 grid points");
    double lo = p_xmin, hi = p_xmax;
    if (!(hi > 0.0)) {
      const auto q = threshmix::quantile_posterior(0.999, chain);
      hi = threshmix::summarize(q).mean;
    }
    if (!(lo > 0.0)) {
      const auto q = threshmix::quantile_posterior(0.001, chain);
      lo = std::max(1e-6 * hi, threshmix::summarize(q).mean * 0.5);
    }
    if (!(lo < hi)) throw std::runtime_error("predict: xmin must be below xmax");
    std::vector<double> grid(static_cast<std::size_t>(p_points));
    for (int g = 0; g < p_points; ++g) {
      grid[static_cast<std::size_t>(g)] = lo + (hi - lo) * g / (p_points - 1);
    }
    const auto band = threshmix::predictive_density_grid(chain, grid, p_level);
    const std::string out = p_out.empty() ? p_chain + ".density.csv" : p_out;
    std::ofstream os(out, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + out);
    os << threshmix::kDensityCsvHeader << '\n';
    for (std::size_t g = 0; g < band.x.size(); ++g) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g", band.x[g], band.mean[g],
                    band.lo[g], band.hi[g]);
      os << buf << '\n';
    }
    std::cout << "wrote " << band.x.size() << " grid rows to " << out << '\n';
    return 0;
  }

  if (*summ) {
    const threshmix::Chain chain = threshmix::read_chain(s_chain);
    std::ostringstream table;
    table << "parameter,mean,sd,q2.5,q50,q97.5\n";
    for (const char* name : {"u", "sigma", "xi", "n_star", "a_lambda", "a_gamma", "log_post"}) {
      print_summary_row(table, name, threshmix::chain_summary(chain, name));
    }
    std::cout << table.str();
    if (!s_out.empty()) {
      std::ofstream os(s_out, std::ios::binary);
      if (!os) throw std::runtime_error("cannot open " + s_out);
      os << table.str();
    }
    return 0;
  }

  if (*fetch_cmd) {
    threshmix::nwis::Query query{f_site, f_start, f_end, f_param};
    std::string raw;
    threshmix::Dataset data;
    if (!f_offline.empty()) {
      std::ifstream in(f_offline, std::ios::binary);
      if (!in) throw std::runtime_error("cannot open cached response: " + f_offline);
      std::ostringstream ss;
      ss << in.rdbuf();
      raw = ss.str();
      data = threshmix::nwis::parse_payload(raw);
    } else {
      auto result = threshmix::nwis::fetch(query);
      raw = std::move(result.raw);
      data = std::move(result.data);
    }

    // Cache the raw response: in THRESHMIX_CACHE_DIR if set, else beside the output.
    fs::path cache;
    if (const char* dir = std::getenv("THRESHMIX_CACHE_DIR"); dir != nullptr && *dir != '\0') {
      fs::create_directories(dir);
      cache = fs::path(dir) / (query.site + "_" + query.start + "_" + query.end + ".json");
    } else {
      cache = fs::path(f_out).string() + ".nwis.json";
    }
    {
      std::ofstream os(cache, std::ios::binary);
      if (!os) throw std::runtime_error("cannot open cache file: " + cache.string());
      os << raw;
    }

    threshmix::write_values_csv(f_out, data.values);
    std::cout << "fetched " << data.values.size() << " readings (" << data.source << ") to "
              << f_out << "; raw response cached at " << cache.string() << '\n';
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

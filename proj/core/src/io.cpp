#include "threshmix/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "threshmix/version.hpp"

namespace threshmix {

namespace {

using nlohmann::json;

std::string trim(std::string s) {
  const auto notspace = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
  s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
  return s;
}

bool parse_double(const std::string& token, double& out) {
  const char* begin = token.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  return end != begin && *end == '\0';
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);  // LF line endings everywhere
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path.string());
  }
  return out;
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

}  // namespace

Dataset read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open data file: " + path.string());
  }
  Dataset data;
  data.source = path.string();

  std::string line;
  int row = 0;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++row;
    line = trim(line);
    if (line.empty()) continue;
    double value = 0.0;
    if (!parse_double(line, value)) {
      if (first_content_line) {  // auto-detected header
        first_content_line = false;
        continue;
      }
      throw std::runtime_error(path.string() + ": row " + std::to_string(row) +
                               ": cannot parse '" + line + "' as a number");
    }
    first_content_line = false;
    if (!(value > 0.0)) {
      throw std::runtime_error(path.string() + ": row " + std::to_string(row) +
                               ": non-positive value " + line);
    }
    data.values.push_back(value);
  }
  if (data.values.empty()) {
    throw std::runtime_error(path.string() + ": no numeric values found");
  }
  return data;
}

void write_values_csv(const std::filesystem::path& path, std::span<const double> values,
                      const std::string& header) {
  auto out = open_out(path);
  out << header << '\n';
  for (double v : values) {
    out << format_double(v) << '\n';
  }
}

std::string chain_to_csv(const Chain& chain) {
  std::string csv(kChainCsvHeader);
  csv.push_back('\n');
  for (std::size_t i = 0; i < chain.samples.size(); ++i) {
    const PosteriorSample& s = chain.samples[i];
    csv += std::to_string(chain.sweep_index[i]);
    csv.push_back(',');
    csv += format_double(s.tail.u);
    csv.push_back(',');
    csv += format_double(s.tail.sigma);
    csv.push_back(',');
    csv += format_double(s.tail.xi);
    csv.push_back(',');
    csv += std::to_string(s.clusters.n_star());
    csv.push_back(',');
    csv += format_double(s.base.a_lambda);
    csv.push_back(',');
    csv += format_double(s.base.a_gamma);
    csv.push_back(',');
    csv += format_double(s.log_post);
    csv.push_back('\n');
  }
  return csv;
}

void write_chain_csv(const std::filesystem::path& path, const Chain& chain) {
  auto out = open_out(path);
  out << chain_to_csv(chain);
}

void write_cluster_snapshots(const std::filesystem::path& path, const Chain& chain, bool full) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < chain.samples.size(); ++i) {
    const PosteriorSample& s = chain.samples[i];
    json rec;
    rec["iter"] = chain.sweep_index[i];
    rec["alpha"] = s.base.alpha;
    json clusters = json::array();
    for (std::size_t j = 0; j < s.clusters.uniques.size(); ++j) {
      clusters.push_back({s.clusters.uniques[j].shape, s.clusters.uniques[j].rate,
                          s.clusters.counts[j]});
    }
    rec["clusters"] = std::move(clusters);
    if (full) {
      rec["memberships"] = s.clusters.memberships;
    }
    out << rec.dump() << '\n';
  }
}

Chain read_chain(const std::filesystem::path& prefix) {
  const std::filesystem::path csv_path = prefix.string() + ".csv";
  const std::filesystem::path clusters_path = prefix.string() + ".clusters.jsonl";

  std::ifstream csv(csv_path, std::ios::binary);
  if (!csv) {
    throw std::runtime_error("cannot open chain file: " + csv_path.string());
  }
  std::string line;
  if (!std::getline(csv, line) || trim(line) != kChainCsvHeader) {
    throw std::runtime_error(csv_path.string() + ": bad or missing chain header");
  }

  Chain chain;
  int row = 1;
  while (std::getline(csv, line)) {
    ++row;
    line = trim(line);
    if (line.empty()) continue;
    const auto fields = split_csv_row(line);
    if (fields.size() != 8) {
      throw std::runtime_error(csv_path.string() + ": row " + std::to_string(row) +
                               ": expected 8 columns");
    }
    double cols[8];
    for (std::size_t c = 0; c < 8; ++c) {
      if (!parse_double(fields[c], cols[c])) {
        throw std::runtime_error(csv_path.string() + ": row " + std::to_string(row) +
                                 ": cannot parse column " + std::to_string(c + 1));
      }
    }
    PosteriorSample s;
    s.tail = {cols[1], cols[2], cols[3]};
    s.base.a_lambda = cols[5];
    s.base.a_gamma = cols[6];
    s.log_post = cols[7];
    chain.sweep_index.push_back(static_cast<int>(cols[0]));
    chain.samples.push_back(std::move(s));
  }

  std::ifstream jl(clusters_path, std::ios::binary);
  if (!jl) {
    throw std::runtime_error("cannot open cluster snapshots: " + clusters_path.string());
  }
  std::size_t idx = 0;
  while (std::getline(jl, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (idx >= chain.samples.size()) {
      throw std::runtime_error(clusters_path.string() + ": more snapshots than chain rows");
    }
    const json rec = json::parse(line);
    PosteriorSample& s = chain.samples[idx];
    s.base.alpha = rec.at("alpha").get<double>();
    for (const json& c : rec.at("clusters")) {
      s.clusters.uniques.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
      s.clusters.counts.push_back(c.at(2).get<int>());
    }
    if (rec.contains("memberships")) {
      s.clusters.memberships = rec["memberships"].get<std::vector<int>>();
    }
    ++idx;
  }
  if (idx != chain.samples.size()) {
    throw std::runtime_error(clusters_path.string() + ": fewer snapshots than chain rows");
  }
  return chain;
}

nlohmann::json fit_config_to_json(const FitConfig& config) {
  json j;
  j["iterations"] = config.iterations;
  j["burn_in"] = config.burn_in;
  j["thin"] = config.thin;
  j["seed"] = config.seed;
  j["alpha"] = config.base.alpha;
  j["a_lambda"] = config.base.a_lambda;
  j["a_gamma"] = config.base.a_gamma;
  j["b_lambda"] = config.base.b_lambda;
  j["c_lambda"] = config.base.c_lambda;
  j["b_gamma"] = config.base.b_gamma;
  j["c_gamma"] = config.base.c_gamma;
  if (config.tail_priors) {
    j["u_prior_mean"] = config.tail_priors->m_u;
    j["u_prior_variance"] = config.tail_priors->var_u;
    if (std::isfinite(config.tail_priors->floor)) {
      j["u_prior_floor"] = config.tail_priors->floor;
    }
  }
  j["u_floor_quantile"] = config.u_floor_quantile;
  if (config.proposal.v_xi) j["v_xi"] = *config.proposal.v_xi;
  if (config.proposal.v_sigma) j["v_sigma"] = *config.proposal.v_sigma;
  if (config.proposal.v_u) j["v_u"] = *config.proposal.v_u;
  switch (config.proposal.adapt) {
    case ProposalConfig::Adapt::kAuto: j["adapt"] = "auto"; break;
    case ProposalConfig::Adapt::kAlways: j["adapt"] = "always"; break;
    case ProposalConfig::Adapt::kNever: j["adapt"] = "never"; break;
  }
  return j;
}

FitConfig parse_fit_config(const nlohmann::json& input) {
  // Accept either the bare config object or a manifest wrapping it.
  const json& j = input.contains("config") ? input.at("config") : input;

  FitConfig config;
  config.iterations = j.value("iterations", config.iterations);
  config.burn_in = j.value("burn_in", config.burn_in);
  config.thin = j.value("thin", config.thin);
  config.seed = j.value("seed", config.seed);
  config.base.alpha = j.value("alpha", config.base.alpha);
  config.base.a_lambda = j.value("a_lambda", config.base.a_lambda);
  config.base.a_gamma = j.value("a_gamma", config.base.a_gamma);
  config.base.b_lambda = j.value("b_lambda", config.base.b_lambda);
  config.base.c_lambda = j.value("c_lambda", config.base.c_lambda);
  config.base.b_gamma = j.value("b_gamma", config.base.b_gamma);
  config.base.c_gamma = j.value("c_gamma", config.base.c_gamma);
  if (j.contains("u_prior_mean") != j.contains("u_prior_variance")) {
    throw std::runtime_error("config: u_prior_mean and u_prior_variance must be set together");
  }
  if (j.contains("u_prior_mean")) {
    config.tail_priors = TailPriors{j.at("u_prior_mean").get<double>(),
                                    j.at("u_prior_variance").get<double>()};
    if (j.contains("u_prior_floor")) {
      config.tail_priors->floor = j.at("u_prior_floor").get<double>();
    }
  }
  config.u_floor_quantile = j.value("u_floor_quantile", config.u_floor_quantile);
  if (j.contains("v_xi")) config.proposal.v_xi = j.at("v_xi").get<double>();
  if (j.contains("v_sigma")) config.proposal.v_sigma = j.at("v_sigma").get<double>();
  if (j.contains("v_u")) config.proposal.v_u = j.at("v_u").get<double>();
  const std::string adapt = j.value("adapt", "auto");
  if (adapt == "auto") {
    config.proposal.adapt = ProposalConfig::Adapt::kAuto;
  } else if (adapt == "always") {
    config.proposal.adapt = ProposalConfig::Adapt::kAlways;
  } else if (adapt == "never") {
    config.proposal.adapt = ProposalConfig::Adapt::kNever;
  } else {
    throw std::runtime_error("config: adapt must be auto, always or never");
  }
  return config;
}

nlohmann::json make_manifest(const Chain& chain) {
  json j;
  j["version"] = kVersion;
  j["seed"] = chain.config.seed;
  j["data_sha256"] = chain.data_digest;
  j["config"] = fit_config_to_json(chain.config);
  j["acceptance_rates"] = {{"xi", chain.acceptance.xi},
                           {"sigma", chain.acceptance.sigma},
                           {"u", chain.acceptance.u},
                           {"shape_step", chain.acceptance.shape_step}};
  j["wall_ms"] = chain.wall_ms;
  j["priors"] = {{"m_u", chain.priors.m_u},
                 {"var_u", chain.priors.var_u},
                 {"floor", chain.priors.floor}};
  j["tuning"] = {{"v_xi", chain.tuning.v_xi},
                 {"v_sigma", chain.tuning.v_sigma},
                 {"v_u", chain.tuning.v_u}};
  j["retained"] = chain.samples.size();
  return j;
}

void write_manifest(const std::filesystem::path& path, const Chain& chain) {
  auto out = open_out(path);
  out << make_manifest(chain).dump(2) << '\n';
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open JSON file: " + path.string());
  }
  return json::parse(in);
}

}  // namespace threshmix

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "threshmix/model.hpp"

namespace threshmix {

inline constexpr const char* kChainCsvHeader = "iter,u,sigma,xi,n_star,a_lambda,a_gamma,log_post";
inline constexpr const char* kDensityCsvHeader = "x,mean,lo,hi";

/// A loaded series of positive observations.
struct Dataset {
  std::vector<double> values;
  std::string source;
  std::vector<std::string> timestamps;  // optional, parallel to values when present
};

/// Single numeric column, UTF-8, LF or CRLF, optional auto-detected header.
/// Non-positive or unparseable entries are rejected with the offending row
/// number.
Dataset read_csv(const std::filesystem::path& path);

void write_values_csv(const std::filesystem::path& path, std::span<const double> values,
                      const std::string& header = "value");

/// Chain CSV with the fixed header above, one row per retained sample,
/// %.17g precision (lossless round-trip).
std::string chain_to_csv(const Chain& chain);
void write_chain_csv(const std::filesystem::path& path, const Chain& chain);

/// Cluster snapshots as JSON lines: {"iter", "alpha", "clusters": [[shape,
/// rate, count], ...]} plus "memberships" when full is set.
void write_cluster_snapshots(const std::filesystem::path& path, const Chain& chain, bool full);

/// Reassemble a chain from `<prefix>.csv` + `<prefix>.clusters.jsonl`.
/// Memberships are restored only if the snapshots were written with full.
Chain read_chain(const std::filesystem::path& prefix);

nlohmann::json fit_config_to_json(const FitConfig& config);
FitConfig parse_fit_config(const nlohmann::json& j);

/// Run manifest: config echo, seed, data checksum, acceptance rates,
/// wall-clock and version. Re-feeding the embedded config with the same data
/// reproduces the chain bit for bit.
nlohmann::json make_manifest(const Chain& chain);
void write_manifest(const std::filesystem::path& path, const Chain& chain);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace threshmix

#pragma once

#include <string>

#include "threshmix/io.hpp"

namespace threshmix::nwis {

/// Query against the USGS NWIS instantaneous-values service.
/// parameter 00060 is discharge in cubic feet per second.
struct Query {
  std::string site;
  std::string start;  // ISO-8601, e.g. 2012-12-02T00:00-0400
  std::string end;
  std::string parameter = "00060";
};

/// Parse the WaterML-JSON payload of the instantaneous-values service into a
/// Dataset. Entries equal to the series' declared noDataValue are skipped;
/// any other non-positive reading is an error, as are empty series.
Dataset parse_payload(const std::string& payload);

std::string request_path(const Query& query);

struct FetchResult {
  Dataset data;
  std::string raw;  // response body, cached beside the output by the CLI
};

/// HTTPS GET against waterservices.usgs.gov. Network errors and non-200
/// statuses are thrown verbatim.
FetchResult fetch(const Query& query);

}  // namespace threshmix::nwis

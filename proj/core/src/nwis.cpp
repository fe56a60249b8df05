#include "threshmix/nwis.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace threshmix::nwis {

using nlohmann::json;

Dataset parse_payload(const std::string& payload) {
  json doc;
  try {
    doc = json::parse(payload);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("NWIS payload: invalid JSON: ") + e.what());
  }

  const json* series = nullptr;
  try {
    const json& ts = doc.at("value").at("timeSeries");
    if (ts.empty()) {
      throw std::runtime_error("NWIS payload: empty time series");
    }
    series = &ts.at(0);
  } catch (const json::exception&) {
    throw std::runtime_error("NWIS payload: missing value.timeSeries");
  }

  double no_data = -999999.0;
  if (series->contains("variable") && (*series)["variable"].contains("noDataValue")) {
    no_data = (*series)["variable"]["noDataValue"].get<double>();
  }

  Dataset data;
  data.source = "nwis";
  if (series->contains("sourceInfo") && (*series)["sourceInfo"].contains("siteName")) {
    data.source = (*series)["sourceInfo"]["siteName"].get<std::string>();
  }

  try {
    const json& points = series->at("values").at(0).at("value");
    for (const json& p : points) {
      const double v = std::stod(p.at("value").get<std::string>());
      if (v == no_data) continue;
      if (!(v > 0.0)) {
        throw std::runtime_error("NWIS payload: non-positive reading " + std::to_string(v));
      }
      data.values.push_back(v);
      data.timestamps.push_back(p.value("dateTime", ""));
    }
  } catch (const json::exception&) {
    throw std::runtime_error("NWIS payload: missing values[0].value array");
  }

  if (data.values.empty()) {
    throw std::runtime_error("NWIS payload: series contains no usable readings");
  }
  return data;
}

std::string request_path(const Query& query) {
  return "/nwis/iv/?format=json&sites=" + query.site + "&startDT=" + query.start +
         "&endDT=" + query.end + "&parameterCd=" + query.parameter + "&siteStatus=all";
}

FetchResult fetch(const Query& query) {
  if (query.site.empty()) {
    throw std::runtime_error("fetch: station id is required");
  }
  httplib::SSLClient client("waterservices.usgs.gov");
  client.set_connection_timeout(30);
  client.set_read_timeout(60);
  const auto res = client.Get(request_path(query));
  if (!res) {
    throw std::runtime_error("fetch: network failure: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw std::runtime_error("fetch: HTTP " + std::to_string(res->status) + ": " + res->body);
  }
  FetchResult result;
  result.raw = res->body;
  result.data = parse_payload(result.raw);
  return result;
}

}  // namespace threshmix::nwis

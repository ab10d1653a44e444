#pragma once

// Report serialization: JSON, CSV and a plain text summary.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>

#include "json.hpp"
#include "limodel/verify.hpp"

namespace limodel {

enum class Format { json, csv, text };

inline Format parse_format(const std::string& s) {
  if (s == "json") return Format::json;
  if (s == "csv") return Format::csv;
  if (s == "text") return Format::text;
  throw Error(ErrorKind::config_validation, "unknown format '" + s + "'");
}

namespace detail {

inline Json normalize(const Json& j) {
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    const double r = std::strtod(buf, nullptr);
    return r == 0.0 ? 0.0 : r;
  }
  if (j.is_object()) {
    Json out = Json::object();
    for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = normalize(it.value());
    return out;
  }
  if (j.is_array()) {
    Json out = Json::array();
    for (const auto& v : j) out.push_back(normalize(v));
    return out;
  }
  return j;
}

inline std::string num(const Json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_boolean()) return j.get<bool>() ? "true" : "false";
  if (j.is_null()) return "";
  return j.dump();
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline Json summary_counts(const Report& rep) {
  Json counts = {{"pass", 0}, {"fail", 0}, {"inconclusive", 0}, {"skipped", 0}, {"not_applicable", 0}};
  for (const auto& c : rep.checks) counts[to_string(c.status)] = counts[to_string(c.status)].get<int>() + 1;
  counts["exit_code"] = rep.exit_code();
  return counts;
}

inline Json to_json(const Report& rep) {
  Json checks = Json::array();
  for (const auto& c : rep.checks)
    checks.push_back({{"name", c.name},
                      {"status", to_string(c.status)},
                      {"message", c.message},
                      {"metrics", c.metrics},
                      {"witness", c.witness}});
  Json out = {{"name", rep.name},
              {"command", rep.command},
              {"system", rep.system},
              {"provenance", rep.provenance},
              {"checks", checks},
              {"notes", rep.notes},
              {"summary", summary_counts(rep)}};
  if (!rep.radii.is_null()) out["radii"] = rep.radii;
  if (!rep.coefficients.is_null()) out["coefficients"] = rep.coefficients;
  if (!rep.blocks.is_null()) out["blocks"] = rep.blocks;
  return detail::normalize(out);
}

/// CSV tables, separated by a blank line: checks, then radii, coefficients
/// and blocks when present.
inline std::string to_csv(const Report& rep) {
  const Json j = to_json(rep);
  std::ostringstream out;
  out << "check,status,message\n";
  for (const auto& c : j["checks"])
    out << c["name"].get<std::string>() << ',' << c["status"].get<std::string>() << ','
        << detail::csv_field(c["message"].get<std::string>()) << '\n';
  if (j.contains("radii")) {
    out << "\nn,neg_norm,pos_norm,neg_root,pos_root\n";
    for (const auto& r : j["radii"]["table"])
      out << detail::num(r["n"]) << ',' << detail::num(r["neg_norm"]) << ',' << detail::num(r["pos_norm"]) << ','
          << detail::num(r["neg_root"]) << ',' << detail::num(r["pos_root"]) << '\n';
  }
  if (j.contains("coefficients")) {
    out << "\nbasis_point,index,component,re,im,exact\n";
    for (const auto& r : j["coefficients"])
      out << detail::csv_field(r["point"].get<std::string>()) << ',' << detail::num(r["index"]) << ','
          << detail::num(r["component"]) << ',' << detail::num(r["value"][0]) << ',' << detail::num(r["value"][1]) << ','
          << detail::num(r["exact"]) << '\n';
  }
  if (j.contains("blocks")) {
    out << "\nfamily,i,j,a,b,re,im\n";
    for (const auto& r : j["blocks"])
      out << r["family"].get<std::string>() << ',' << detail::num(r["i"]) << ',' << detail::num(r["j"]) << ','
          << detail::num(r["a"]) << ',' << detail::num(r["b"]) << ',' << detail::num(r["value"][0]) << ','
          << detail::num(r["value"][1]) << '\n';
  }
  return out.str();
}

inline std::string to_text(const Report& rep) {
  const Json j = to_json(rep);
  std::ostringstream out;
  out << rep.name << " (" << rep.command << ")\n";
  out << "  family " << detail::num(j["system"]["family"]) << ", " << detail::num(j["system"]["points"]) << " points\n";
  for (const auto& c : j["checks"]) {
    std::string status = c["status"].get<std::string>();
    status.resize(15, ' ');
    out << "  " << status << c["name"].get<std::string>();
    if (!c["message"].get<std::string>().empty()) out << "  " << c["message"].get<std::string>();
    out << '\n';
  }
  if (j.contains("radii"))
    out << "  r_minus " << detail::num(j["radii"]["r_minus"]) << ", r_plus " << detail::num(j["radii"]["r_plus"]) << '\n';
  for (const auto& n : j["notes"]) out << "  note: " << n.get<std::string>() << '\n';
  const Json& s = j["summary"];
  out << "  " << s["pass"] << " pass, " << s["fail"] << " fail, " << s["inconclusive"] << " inconclusive, "
      << s["not_applicable"] << " n/a, " << s["skipped"] << " skipped\n";
  return out.str();
}

inline std::string render(const Report& rep, Format f) {
  switch (f) {
    case Format::json: return to_json(rep).dump(2) + "\n";
    case Format::csv: return to_csv(rep);
    case Format::text: return to_text(rep);
  }
  return {};
}

/// Report for a configuration that could not be loaded.
inline std::string render_error(const Error& err, Format f) {
  const Json j = {{"error", {{"kind", to_string(err.kind())}, {"message", err.what()}}}, {"version", kVersion}};
  switch (f) {
    case Format::json: return j.dump(2) + "\n";
    case Format::csv: return std::string("error,message\n") + to_string(err.kind()) + "," + detail::csv_field(err.what()) + "\n";
    case Format::text: return std::string("error (") + to_string(err.kind()) + "): " + err.what() + "\n";
  }
  return {};
}

}  // namespace limodel

#pragma once

#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include <conjlab/dynsys.hpp>
#include <conjlab/entropy.hpp>
#include <conjlab/errors.hpp>
#include <conjlab/grid.hpp>
#include <conjlab/numeric.hpp>
#include <conjlab/series.hpp>

namespace conjlab {

using json = nlohmann::json;

// Deterministic report serialization: object keys in sorted order (the
// default json object already sorts), reals at 17 significant digits so the
// text round-trips bit-exactly, nonfinite reals as quoted "+inf"/"-inf".
inline void dump_json_17(const json& j, std::string& out) {
  switch (j.type()) {
    case json::value_t::object: {
      out += '{';
      bool first = true;
      for (const auto& [key, val] : j.items()) {
        if (!first) out += ',';
        first = false;
        out += json(key).dump();
        out += ':';
        dump_json_17(val, out);
      }
      out += '}';
      break;
    }
    case json::value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i > 0) out += ',';
        dump_json_17(j[i], out);
      }
      out += ']';
      break;
    }
    case json::value_t::number_float: {
      double v = j.get<double>();
      if (!is_finite(v)) {
        out += json(format_real(v)).dump();
      } else {
        out += format_real(v);
      }
      break;
    }
    default:
      out += j.dump();
      break;
  }
}

inline std::string dump_json_17(const json& j) {
  std::string out;
  dump_json_17(j, out);
  out += '\n';
  return out;
}

// --- gridded functions ---------------------------------------------------

inline json grid_header_json(const GriddedFunction& f) {
  json axes = json::array();
  for (const GridAxis& ax : f.axes())
    axes.push_back({{"lo", ax.lo}, {"hi", ax.hi}, {"count", ax.count}});
  return json{{"axes", axes}};
}

// One row per node, coordinates then value, +inf spelled literally.
inline std::string grid_to_csv(const GriddedFunction& f) {
  std::string out;
  for (std::size_t k = 0; k < f.dim(); ++k) out += "x" + std::to_string(k) + ",";
  out += "value\n";
  std::vector<double> point(f.dim());
  for (std::size_t flat = 0; flat < f.size(); ++flat) {
    f.node_coords(flat, point);
    for (double x : point) {
      out += format_real(x);
      out += ',';
    }
    out += format_real(f.value(flat));
    out += '\n';
  }
  return out;
}

inline GridAxis axis_from_json(const json& j) {
  if (!j.is_object() || !j.contains("lo") || !j.contains("hi") || !j.contains("count"))
    throw ConfigInvalid("axis needs keys lo, hi, count");
  if (!j["lo"].is_number() || !j["hi"].is_number() || !j["count"].is_number_integer())
    throw ConfigInvalid("axis keys lo/hi must be numbers and count an integer");
  return GridAxis{j["lo"].get<double>(), j["hi"].get<double>(), j["count"].get<std::size_t>()};
}

inline GriddedFunction grid_from_csv(const json& header, const std::string& csv) {
  if (!header.is_object() || !header.contains("axes") || !header["axes"].is_array())
    throw ConfigInvalid("grid header needs an axes array");
  std::vector<GridAxis> axes;
  for (const json& ja : header["axes"]) axes.push_back(axis_from_json(ja));

  std::vector<double> values;
  std::istringstream in(csv);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;  // header row
      continue;
    }
    std::size_t comma = line.rfind(',');
    std::string tail = comma == std::string::npos ? line : line.substr(comma + 1);
    values.push_back(parse_real(tail));
  }
  return GriddedFunction(std::move(axes), std::move(values));
}

inline std::string trace_to_csv(const PartialSumTrace& trace) {
  std::string out = "n,value\n";
  for (const auto& cp : trace.checkpoints)
    out += std::to_string(cp.n) + "," + format_real(cp.value) + "\n";
  return out;
}

inline json trace_to_json(const PartialSumTrace& trace) {
  json arr = json::array();
  for (const auto& cp : trace.checkpoints) arr.push_back({{"n", cp.n}, {"value", cp.value}});
  return json{{"checkpoints", arr}};
}

// --- dynamical systems ---------------------------------------------------

inline FiniteDynSystem system_from_json(const json& j) {
  if (!j.is_object()) throw ConfigInvalid("system must be an object");
  if (!j.contains("states") || !j["states"].is_number_integer() || j["states"].get<long long>() <= 0)
    throw ConfigInvalid("\"states\" must be a positive integer");
  std::size_t m = j["states"].get<std::size_t>();
  if (!j.contains("map") || !j["map"].is_array())
    throw ConfigInvalid("\"map\" must be an array of state indices");
  const json& jm = j["map"];
  if (jm.size() != m)
    throw ConfigInvalid("\"map\" has " + std::to_string(jm.size()) + " entries for " +
                        std::to_string(m) + " states");
  std::vector<std::size_t> alpha(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!jm[i].is_number_integer() || jm[i].get<long long>() < 0 ||
        jm[i].get<std::size_t>() >= m)
      throw ConfigInvalid("\"map\" entry at index " + std::to_string(i) +
                          " must be an integer in [0, " + std::to_string(m) + ")");
    alpha[i] = jm[i].get<std::size_t>();
  }
  double p = 1.0;
  if (j.contains("p")) {
    if (!j["p"].is_number() || !(j["p"].get<double>() >= 1.0))
      throw ConfigInvalid("\"p\" must be a real >= 1");
    p = j["p"].get<double>();
  }
  return FiniteDynSystem(m, std::move(alpha), p);
}

inline std::vector<double> real_vector_from_json(const json& j, const std::string& key) {
  if (!j.is_array() || j.empty())
    throw ConfigInvalid("\"" + key + "\" must be a nonempty array of reals");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number())
      throw ConfigInvalid("\"" + key + "\" entry at index " + std::to_string(i) +
                          " must be a number");
    out.push_back(j[i].get<double>());
  }
  return out;
}

inline WeightFunction phi_from_json(const json& j) {
  if (j.is_object() && j.contains("phi")) return WeightFunction(real_vector_from_json(j["phi"], "phi"));
  return WeightFunction(real_vector_from_json(j, "phi"));
}

// "zeros" with an order key, or an explicit coefficient array.
inline CoefficientSeq coefficients_from_json(const json& params, const std::string& key,
                                             const std::string& order_key) {
  if (!params.contains(key)) throw ConfigInvalid("missing key \"" + key + "\"");
  const json& jc = params[key];
  if (jc.is_string()) {
    if (jc.get<std::string>() != "zeros")
      throw ConfigInvalid("\"" + key + "\" string form must be \"zeros\"");
    if (!params.contains(order_key) || !params[order_key].is_number_integer() ||
        params[order_key].get<long long>() < 0)
      throw ConfigInvalid("\"" + order_key + "\" must be a nonnegative integer with zeros coefficients");
    return CoefficientSeq::zeros(params[order_key].get<std::size_t>());
  }
  return CoefficientSeq(real_vector_from_json(jc, key));
}

}  // namespace conjlab

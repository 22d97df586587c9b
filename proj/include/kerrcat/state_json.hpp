#pragma once

// JSON form of a coherent superposition:
//   {"components": [{"coeff_re", "coeff_im", "amp_re", "amp_im"}, ...],
//    "normalized": bool,
//    "measurement": {"quadrature": "X", "value": x}}   (conditioned states only)
// Doubles are written with round-trip precision.

#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "kerrcat/coherent.hpp"

namespace kerrcat {

struct StateDocument {
  CoherentSuperposition state;
  std::optional<double> measured_x;
};

inline nlohmann::ordered_json to_json(const CoherentSuperposition& psi, std::optional<double> measured_x = {}) {
  nlohmann::ordered_json comps = nlohmann::ordered_json::array();
  for (const auto& c : psi.components()) {
    nlohmann::ordered_json j;
    j["coeff_re"] = c.coeff.real();
    j["coeff_im"] = c.coeff.imag();
    j["amp_re"] = c.amp.real();
    j["amp_im"] = c.amp.imag();
    comps.push_back(std::move(j));
  }
  nlohmann::ordered_json doc;
  doc["components"] = std::move(comps);
  doc["normalized"] = psi.is_normalized();
  if (measured_x) {
    nlohmann::ordered_json m;
    m["quadrature"] = "X";
    m["value"] = *measured_x;
    doc["measurement"] = std::move(m);
  }
  return doc;
}

/// Throws std::invalid_argument on schema violations.
inline StateDocument state_from_json(const nlohmann::json& doc) {
  try {
    if (!doc.is_object() || !doc.contains("components")) throw std::invalid_argument("missing \"components\"");
    const auto& comps = doc.at("components");
    if (!comps.is_array() || comps.empty()) throw std::invalid_argument("\"components\" must be a nonempty array");
    std::vector<CoherentComponent> out;
    out.reserve(comps.size());
    for (const auto& c : comps) {
      out.push_back({Complex{c.at("coeff_re").get<double>(), c.at("coeff_im").get<double>()},
                     Complex{c.at("amp_re").get<double>(), c.at("amp_im").get<double>()}});
    }
    const bool normalized = doc.value("normalized", false);
    StateDocument d{CoherentSuperposition(std::move(out), normalized), std::nullopt};
    if (doc.contains("measurement")) {
      const auto& m = doc.at("measurement");
      if (m.at("quadrature").get<std::string>() != "X") throw std::invalid_argument("only X measurements are supported");
      d.measured_x = m.at("value").get<double>();
    }
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("state JSON: ") + e.what());
  }
}

inline std::string dump_state(const CoherentSuperposition& psi, std::optional<double> measured_x = {}) {
  return to_json(psi, measured_x).dump(2) + "\n";
}

}  // namespace kerrcat

#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gwwalk/error.hpp"
#include "gwwalk/mark_law.hpp"

namespace gwwalk {

/// Parses a law description. Accepted forms:
///   {"atoms": [{"p": 0.5, "marks": [0.1, 2.0]}, ...], "calibrate": false}
///   {"family": "two_point", "p": 0.05}
///   {"family": "constant_bias", "lambda": 2.0, "offspring": 2}
/// "calibrate" may be true (rescale positive marks), "positive_marks" or
/// "negative_marks".
inline MarkLaw law_from_json(const nlohmann::json& j) {
  try {
    if (j.contains("family")) {
      const std::string fam = j.at("family").get<std::string>();
      if (fam == "two_point") return two_point_law(j.at("p").get<double>());
      if (fam == "constant_bias")
        return constant_bias_law(j.at("lambda").get<double>(), j.value("offspring", std::size_t{2}));
      throw Error(ErrorCode::InvalidArgument, "unknown law family '" + fam + "'");
    }
    std::vector<Atom> atoms;
    for (const auto& a : j.at("atoms")) {
      Atom atom;
      atom.prob = a.at("p").get<double>();
      atom.marks = a.at("marks").get<std::vector<double>>();
      atoms.push_back(std::move(atom));
    }
    if (j.contains("calibrate")) {
      const auto& c = j.at("calibrate");
      if (c.is_boolean()) {
        if (c.get<bool>()) return calibrate(atoms, CalibrationTarget::PositiveMarks);
      } else {
        const std::string s = c.get<std::string>();
        if (s == "positive_marks") return calibrate(atoms, CalibrationTarget::PositiveMarks);
        if (s == "negative_marks") return calibrate(atoms, CalibrationTarget::NegativeMarks);
        throw Error(ErrorCode::InvalidArgument, "unknown calibrate value '" + s + "'");
      }
    }
    return make_mark_law(std::move(atoms));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed law JSON: ") + e.what());
  }
}

inline nlohmann::json law_to_json(const MarkLaw& law) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const auto& a : law.atoms()) atoms.push_back({{"p", a.prob}, {"marks", a.marks}});
  return {{"atoms", atoms}, {"calibrate", false}};
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, path + ": " + e.what());
  }
}

inline MarkLaw load_law(const std::string& path) { return law_from_json(read_json_file(path)); }

}  // namespace gwwalk

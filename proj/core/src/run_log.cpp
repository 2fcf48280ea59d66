// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#include "prosfda/run_log.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "kv_text.hpp"
#include "prosfda/error.hpp"

namespace prosfda {

using nlohmann::json;

void save_run_log(const std::string& path, const RunLog& log) {
  json steps = json::array();
  for (const StepRecord& r : log.steps) {
    steps.push_back({{"step", r.step},
                     {"l_ce", r.l_ce},
                     {"l_pce", r.l_pce},
                     {"frac_agree", r.frac_agree},
                     {"frac_teacher", r.frac_teacher},
                     {"frac_proto", r.frac_proto},
                     {"frac_tie", r.frac_tie},
                     {"mean_weight", r.mean_weight}});
  }
  const json doc = {{"format", "prosfda-runlog"}, {"version", 1}, {"steps", steps}};
  std::ofstream os(path);
  if (!os) throw DataError("cannot open '" + path + "' for writing");
  os << doc.dump(1) << '\n';
}

RunLog load_run_log(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open run log '" + path + "'");
  RunLog log;
  try {
    const json doc = json::parse(is);
    if (doc.at("format") != "prosfda-runlog" || doc.at("version") != 1) {
      throw DataError("run log '" + path + "': unsupported format");
    }
    for (const json& s : doc.at("steps")) {
      StepRecord r;
      r.step = s.at("step").get<std::uint64_t>();
      r.l_ce = s.at("l_ce").get<double>();
      r.l_pce = s.at("l_pce").get<double>();
      r.frac_agree = s.at("frac_agree").get<double>();
      r.frac_teacher = s.at("frac_teacher").get<double>();
      r.frac_proto = s.at("frac_proto").get<double>();
      r.frac_tie = s.at("frac_tie").get<double>();
      r.mean_weight = s.at("mean_weight").get<double>();
      if (!log.steps.empty() && r.step <= log.steps.back().step) {
        throw DataError("run log '" + path + "': step indices not increasing");
      }
      log.steps.push_back(r);
    }
  } catch (const json::exception& e) {
    throw DataError("run log '" + path + "': " + e.what());
  }
  return log;
}

std::string run_log_csv(const RunLog& log) {
  std::ostringstream os;
  os << "step,l_ce,l_pce,frac_agree,frac_teacher,frac_proto,frac_tie,mean_weight\n";
  for (const StepRecord& r : log.steps) {
    os << r.step << ',' << kv::format(r.l_ce) << ',' << kv::format(r.l_pce) << ','
       << kv::format(r.frac_agree) << ',' << kv::format(r.frac_teacher) << ','
       << kv::format(r.frac_proto) << ',' << kv::format(r.frac_tie) << ','
       << kv::format(r.mean_weight) << '\n';
  }
  return os.str();
}

}  // namespace prosfda

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ials/core/error.hpp"

namespace ials::rl {

struct CurvePoint {
  double wall_clock_s = 0.0;
  long env_steps = 0;
  double mean_return = 0.0;
  double std_error = 0.0;
};

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// Evaluation returns over training. Wall-clock values already include the
/// influence-predictor preparation time in `aip_offset_s` for IALS runs.
struct LearningCurve {
  std::string sim_kind;
  std::string env_id;
  std::uint64_t seed = 0;
  std::string config_hash;
  double aip_offset_s = 0.0;
  std::vector<CurvePoint> points;

  const CurvePoint& final_point() const {
    if (points.empty()) throw StateError("learning curve is empty");
    return points.back();
  }

  void write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "wall_clock_s,env_steps,mean_return,stderr\n";
    for (const auto& p : points) {
      out << format_number(p.wall_clock_s) << "," << p.env_steps << "," << format_number(p.mean_return) << ","
          << format_number(p.std_error) << "\n";
    }
    if (!out) throw IoError("write failed for " + path);
  }

  static LearningCurve read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    LearningCurve c;
    std::string line;
    long lineno = 0;
    if (!std::getline(in, line) || line != "wall_clock_s,env_steps,mean_return,stderr") {
      throw IoError(path + ":1: unexpected curve header");
    }
    ++lineno;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      CurvePoint p;
      char tail = 0;
      if (std::sscanf(line.c_str(), "%lf,%ld,%lf,%lf%c", &p.wall_clock_s, &p.env_steps, &p.mean_return, &p.std_error,
                      &tail) != 4) {
        throw IoError(path + ":" + std::to_string(lineno) + ": malformed curve row");
      }
      c.points.push_back(p);
    }
    return c;
  }

  nlohmann::json metadata() const {
    return {{"sim_kind", sim_kind},
            {"env_id", env_id},
            {"seed", seed},
            {"config_hash", config_hash},
            {"aip_offset_s", aip_offset_s},
            {"points", points.size()}};
  }
};

struct AggregatePoint {
  double wall_clock_s = 0.0;  // mean across seeds
  long env_steps = 0;
  double mean_return = 0.0;   // mean across seeds
  double std_error = 0.0;
  double std_across_seeds = 0.0;
};

/// Seed aggregate at the step counts every curve shares. With one curve the
/// first four columns reproduce it; otherwise `std_error` is the standard
/// error of the across-seed mean.
struct AggregateCurve {
  int seeds = 0;
  std::vector<AggregatePoint> points;

  static AggregateCurve of(const std::vector<LearningCurve>& curves) {
    AggregateCurve a;
    a.seeds = static_cast<int>(curves.size());
    if (curves.empty()) return a;
    std::map<long, std::vector<const CurvePoint*>> by_step;
    for (const auto& c : curves) {
      std::map<long, const CurvePoint*> last;
      for (const auto& p : c.points) last[p.env_steps] = &p;
      for (const auto& [s, p] : last) by_step[s].push_back(p);
    }
    const double n = static_cast<double>(curves.size());
    for (const auto& [s, ps] : by_step) {
      if (ps.size() != curves.size()) continue;
      AggregatePoint q;
      q.env_steps = s;
      for (const auto* p : ps) {
        q.wall_clock_s += p->wall_clock_s / n;
        q.mean_return += p->mean_return / n;
      }
      if (ps.size() == 1) {
        q.std_error = ps[0]->std_error;
      } else {
        double ss = 0.0;
        for (const auto* p : ps) ss += (p->mean_return - q.mean_return) * (p->mean_return - q.mean_return);
        q.std_across_seeds = std::sqrt(ss / (n - 1.0));
        q.std_error = q.std_across_seeds / std::sqrt(n);
      }
      a.points.push_back(q);
    }
    return a;
  }

  void write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "wall_clock_s,env_steps,mean_return,stderr,mean_across_seeds,std_across_seeds\n";
    for (const auto& p : points) {
      out << format_number(p.wall_clock_s) << "," << p.env_steps << "," << format_number(p.mean_return) << ","
          << format_number(p.std_error) << "," << format_number(p.mean_return) << ","
          << format_number(p.std_across_seeds) << "\n";
    }
    if (!out) throw IoError("write failed for " + path);
  }
};

}  // namespace ials::rl

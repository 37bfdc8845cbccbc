#pragma once

#include <string>
#include <utility>

#include "json.hpp"
#include "skeld/rate.hpp"
#include "skeld/spde.hpp"

namespace skeld {

// All text output is deterministic: '.' decimal point, LF line endings, a
// header row per CSV, and shortest round-trip number formatting.
std::string format_number(double v);

void write_snapshot(const std::string& path, const Field& f, double t);
std::pair<Field, double> read_snapshot(const std::string& path);

void write_diagnostics(const std::string& path, const Trajectory& traj);

void write_spectral_control(const std::string& path, const ControlField& g);
ControlField read_spectral_control(const std::string& path, const Grid& grid);

void write_path_stats(const std::string& path, const SpdePath& p);

void write_ensemble(const std::string& path, const EventTable& table);
nlohmann::ordered_json ldp_summary_json(const EventTable& table);

nlohmann::ordered_json rate_evaluation_json(const RateEvaluation& ev);

void write_gamma(const std::string& path,
                 const std::vector<GammaRow>& rows);

void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

}  // namespace skeld

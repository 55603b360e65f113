#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "induct/dynamics.hpp"
#include "induct/trainer.hpp"

namespace induct {

// All numeric CSV/JSON output is printed with %.17g so re-runs are
// byte-identical.
std::string format_real(Real x);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<Real>& values);
  void row_mixed(const std::vector<std::string>& values);
  ~CsvWriter();

 private:
  struct Impl;
  Impl* impl_;
};

// Manifest written next to every command's outputs: config + code version +
// seed, deterministic content.
void write_manifest(const std::filesystem::path& dir, const std::string& command,
                    const std::string& config_json, std::uint64_t seed);

void write_trajectory_csv(const std::filesystem::path& path, const GFTrajectory& traj);
void write_train_csv(const std::filesystem::path& path, const TrainResult& result, Real lr,
                     const std::string& source);
void write_phase_report_json(const std::filesystem::path& path, const PhaseReport& report);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

inline constexpr const char* kCodeVersion = "induct 0.1.0";

}  // namespace induct

#include "induct/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace induct {

std::string format_real(Real x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

struct CsvWriter::Impl {
  std::ofstream out;
  std::size_t n_cols;
};

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : impl_(new Impl) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  impl_->out.open(path);
  if (!impl_->out) throw std::runtime_error("cannot open " + path.string());
  impl_->n_cols = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) impl_->out << (i ? "," : "") << header[i];
  impl_->out << "\n";
}

void CsvWriter::row(const std::vector<Real>& values) {
  if (values.size() != impl_->n_cols) throw std::invalid_argument("csv row width mismatch");
  for (std::size_t i = 0; i < values.size(); ++i)
    impl_->out << (i ? "," : "") << format_real(values[i]);
  impl_->out << "\n";
}

void CsvWriter::row_mixed(const std::vector<std::string>& values) {
  if (values.size() != impl_->n_cols) throw std::invalid_argument("csv row width mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) impl_->out << (i ? "," : "") << values[i];
  impl_->out << "\n";
}

CsvWriter::~CsvWriter() { delete impl_; }

void write_manifest(const std::filesystem::path& dir, const std::string& command,
                    const std::string& config_json, std::uint64_t seed) {
  nlohmann::json j;
  j["command"] = command;
  j["config"] = nlohmann::json::parse(config_json);
  j["code_version"] = kCodeVersion;
  j["seed"] = seed;
  write_text_file(dir / "manifest.json", j.dump(2) + "\n");
}

void write_trajectory_csv(const std::filesystem::path& path, const GFTrajectory& traj) {
  CsvWriter csv(path, {"t", "w_V1", "w_V2", "p", "w_KQ", "L_G4", "L_IH2", "L_total"});
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const GFState& s = traj.states[i];
    csv.row({traj.t[i], s.w_v1, s.w_v2, s.p, s.w_kq, traj.loss_g4[i], traj.loss_ih2[i], traj.loss_total(i)});
  }
}

void write_train_csv(const std::filesystem::path& path, const TrainResult& result, Real lr,
                     const std::string& source) {
  CsvWriter csv(path, {"t", "w_V1", "w_V2", "p", "w_KQ", "L_G4", "L_IH2", "L_total", "source"});
  for (const TrainRecord& r : result.records) {
    std::vector<std::string> row;
    for (Real v : {static_cast<Real>(r.step), r.model.w_v1, r.model.w_v2, r.model.p,
                   r.model.w_q * r.model.w_k, r.batch_loss_g4, r.batch_loss_ih2,
                   r.batch_loss_g4 + r.batch_loss_ih2})
      row.push_back(format_real(v));
    row.push_back(source);
    csv.row_mixed(row);
  }
  (void)lr;
}

void write_phase_report_json(const std::filesystem::path& path, const PhaseReport& rep) {
  nlohmann::json j;
  const auto put = [&](const char* key, const std::optional<Real>& v) {
    if (v)
      j[key] = *v;
    else
      j[key] = nullptr;
  };
  put("T_I", rep.t_i);
  put("T_o", rep.t_o);
  put("T_II", rep.t_ii);
  put("T_III", rep.t_iii);
  j["growth_rate"] = rep.growth_rate;
  j["lih2_at_ti_over_init"] = rep.lih2_at_ti_over_init;
  j["lih2_to_over_init"] = rep.lih2_to_over_init;
  j["thresholds"] = {{"low", rep.thresholds.low},
                     {"high", rep.thresholds.high},
                     {"settle_tol", rep.thresholds.settle_tol}};
  write_text_file(path, j.dump(2) + "\n");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << text;
}

}  // namespace induct

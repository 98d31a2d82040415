#pragma once

#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gyroqfi/dynamics.hpp"

namespace gyro::io {

/// Comma-separated writer with full double precision. Numbers are written
/// with 17 significant digits so reruns compare byte for byte.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  CsvWriter& operator<<(double v);
  CsvWriter& operator<<(int v);
  CsvWriter& operator<<(const std::string& v);
  CsvWriter& operator<<(const char* v) { return *this << std::string(v); }
  void end_row();

 private:
  void separator();

  std::string path_;
  std::ofstream out_;
  std::size_t columns_ = 0;
  std::size_t filled_ = 0;
};

/// Trajectory columns: t; re/im of alpha_ccw, alpha_cw, beta; re/im of the 21
/// moments in moment::Index order; re/im of the 3 amplitude sensitivities
/// and the 21 moment sensitivities, prefixed with d_.
std::vector<std::string> trajectory_header();

void write_trajectory_csv(const std::string& path, std::span<const AugmentedState> samples);

/// gnuplot-compatible two-column file with a commented header line.
void write_plot_data(const std::string& path, const std::string& x_label,
                     const std::string& y_label, std::span<const double> x,
                     std::span<const double> y);

/// `git rev-parse HEAD` of the source tree, or "unknown".
std::string git_revision();

void write_json(const std::string& path, const nlohmann::json& j);

/// Creates the directory (and parents); ConfigError naming the path if that
/// fails or the directory is not writable.
void ensure_directory(const std::string& path);

}  // namespace gyro::io

#include "gyroqfi/io.hpp"

#include <array>
#include <cstdio>
#include <filesystem>
#include <iomanip>

#include "gyroqfi/errors.hpp"

#ifndef GYRO_SOURCE_DIR
#define GYRO_SOURCE_DIR "."
#endif

namespace gyro::io {

namespace {

const char* const kMomentNames[kNumMoments] = {
    "n_a1",   "n_a2",    "n_b",    "a1d_a1d", "a1_a1",  "a2d_a2d", "a2_a2",
    "bd_bd",  "b_b",     "a1d_a2", "a2d_a1",  "a1d_a2d", "a1_a2",  "a1d_b",
    "a1_bd",  "a1d_bd",  "a1_b",   "a2d_b",   "a2_bd",  "a2d_bd", "a2_b"};

std::ofstream open(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << std::setprecision(17);
  return out;
}

void push_complex(std::vector<std::string>& h, const std::string& name) {
  h.push_back("re_" + name);
  h.push_back("im_" + name);
}

}  // namespace

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : path_(path), out_(open(path)), columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

void CsvWriter::separator() {
  if (filled_ >= columns_) throw std::logic_error("CSV row longer than the header of " + path_);
  if (filled_++) out_ << ',';
}

CsvWriter& CsvWriter::operator<<(double v) {
  separator();
  out_ << v;
  return *this;
}

CsvWriter& CsvWriter::operator<<(int v) {
  separator();
  out_ << v;
  return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& v) {
  separator();
  out_ << v;
  return *this;
}

void CsvWriter::end_row() {
  if (filled_ != columns_) throw std::logic_error("CSV row shorter than the header of " + path_);
  out_ << '\n';
  filled_ = 0;
  if (!out_) throw ConfigError("write failed for '" + path_ + "'");
}

std::vector<std::string> trajectory_header() {
  std::vector<std::string> h{"t"};
  for (const char* prefix : {"", "d_"}) {
    for (const char* a : {"alpha_ccw", "alpha_cw", "beta"}) push_complex(h, std::string(prefix) + a);
    for (const char* m : kMomentNames) push_complex(h, std::string(prefix) + m);
  }
  return h;
}

void write_trajectory_csv(const std::string& path, std::span<const AugmentedState> samples) {
  CsvWriter w(path, trajectory_header());
  const auto put = [&](cd z) { w << z.real() << z.imag(); };
  for (const auto& s : samples) {
    w << s.t;
    for (const auto* amps : {&s.amps, &s.d_amps}) {
      put(amps->alpha_ccw);
      put(amps->alpha_cw);
      put(amps->beta);
      const MomentVector& m = amps == &s.amps ? s.x : s.dx;
      for (int i = 0; i < kNumMoments; ++i) put(m[i]);
    }
    w.end_row();
  }
}

void write_plot_data(const std::string& path, const std::string& x_label,
                     const std::string& y_label, std::span<const double> x,
                     std::span<const double> y) {
  if (x.size() != y.size()) throw std::logic_error("plot data columns differ in length");
  auto out = open(path);
  out << "# " << x_label << ' ' << y_label << '\n';
  for (std::size_t i = 0; i < x.size(); ++i) out << x[i] << ' ' << y[i] << '\n';
}

std::string git_revision() {
  const std::string cmd = std::string("git -C \"") + GYRO_SOURCE_DIR + "\" rev-parse HEAD 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return "unknown";
  std::array<char, 128> buf{};
  std::string rev;
  while (fgets(buf.data(), buf.size(), pipe)) rev += buf.data();
  pclose(pipe);
  while (!rev.empty() && (rev.back() == '\n' || rev.back() == '\r')) rev.pop_back();
  return rev.empty() ? "unknown" : rev;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  auto out = open(path);
  out << j.dump(2) << '\n';
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec || !std::filesystem::is_directory(path))
    throw ConfigError("output directory '" + path + "' cannot be created");
  const auto probe = std::filesystem::path(path) / ".gyroqfi_write_probe";
  {
    std::ofstream f(probe);
    if (!f) throw ConfigError("output directory '" + path + "' is not writable");
  }
  std::filesystem::remove(probe, ec);
}

}  // namespace gyro::io

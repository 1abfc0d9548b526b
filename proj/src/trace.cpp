#include "cinempc/trace.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cinempc {

namespace {

constexpr const char* kBaseColumns[] = {
    "time",        "sequence",    "px",          "py",           "pz",          "vx",          "vy",
    "vz",          "r00",         "r01",         "r02",          "r10",         "r11",         "r12",
    "r20",         "r21",         "r22",         "focal_length", "focus_distance", "aperture", "dof_near",
    "dof_far",     "desired_near", "desired_far", "j_dof",       "j_im",        "j_p",         "j_total",
    "penalty",     "behind_camera", "ax",        "ay",           "az",          "wx",          "wy",
    "wz",          "v_focal",     "v_focus",     "v_aperture",   "iterations",  "converged",   "clamp_flags",
};
constexpr std::size_t kBaseCount = std::size(kBaseColumns);
constexpr const char* kTargetSuffixes[] = {"_x", "_y", "_z", "_mx", "_my", "_mz"};

std::string header_line() { return "# cinempc trace v" + std::to_string(kTraceVersion); }

void put(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

void put(std::string& out, long long v) { out += std::to_string(v); }

void put(std::string& out, const std::optional<double>& v) {
  if (v) put(out, *v);
}

void row(std::string& out, const TraceRecord& r) {
  bool first = true;
  auto cell = [&](const auto& v) {
    if (!first) out += ',';
    first = false;
    put(out, v);
  };
  cell(r.time);
  cell(static_cast<long long>(r.sequence));
  for (int i = 0; i < 3; ++i) cell(r.drone.position[i]);
  for (int i = 0; i < 3; ++i) cell(r.drone.velocity[i]);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) cell(r.drone.rotation(i, j));
  cell(r.intrinsics.focal_length);
  cell(r.intrinsics.focus_distance);
  cell(r.intrinsics.aperture);
  cell(r.dof.near);
  cell(r.dof.far);
  cell(r.desired_near);
  cell(r.desired_far);
  cell(r.cost.j_dof);
  cell(r.cost.j_im);
  cell(r.cost.j_p);
  cell(r.cost.total);
  cell(r.penalty);
  cell(static_cast<long long>(r.cost.behind_camera));
  for (int i = 0; i < 3; ++i) cell(r.drone_input.acceleration[i]);
  for (int i = 0; i < 3; ++i) cell(r.drone_input.gimbal_rate[i]);
  cell(r.camera_input.focal_rate);
  cell(r.camera_input.focus_rate);
  cell(r.camera_input.aperture_rate);
  cell(static_cast<long long>(r.iterations));
  cell(static_cast<long long>(r.converged ? 1 : 0));
  cell(static_cast<long long>(r.clamp_flags));
  for (const auto& t : r.targets) {
    for (int i = 0; i < 3; ++i) cell(t.true_position[i]);
    for (int i = 0; i < 3; ++i) cell(t.measured_position[i]);
  }
  out += '\n';
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

class RowReader {
 public:
  RowReader(const std::vector<std::string>& cells, int line) : cells_(cells), line_(line) {}

  double real() {
    const std::string& s = next();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0') fail("malformed number '" + s + "'");
    return v;
  }

  std::optional<double> optional_real() {
    if (cells_[pos_].empty()) {
      ++pos_;
      return std::nullopt;
    }
    return real();
  }

  long long integer() {
    const std::string& s = next();
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || *end != '\0') fail("malformed integer '" + s + "'");
    return v;
  }

 private:
  const std::string& next() { return cells_[pos_++]; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw std::runtime_error("trace line " + std::to_string(line_) + ", column " + std::to_string(pos_) + ": " + msg);
  }

  const std::vector<std::string>& cells_;
  int line_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::string> trace_columns(const std::vector<std::string>& target_ids) {
  std::vector<std::string> cols(std::begin(kBaseColumns), std::end(kBaseColumns));
  for (const auto& id : target_ids) {
    for (const char* s : kTargetSuffixes) cols.push_back(id + s);
  }
  return cols;
}

std::string format_trace(const Trace& trace) {
  std::string out = header_line() + "\n";
  const auto cols = trace_columns(trace.target_ids);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out += ',';
    out += cols[i];
  }
  out += '\n';
  for (const auto& r : trace.records) {
    if (r.targets.size() != trace.target_ids.size()) {
      throw std::invalid_argument("trace record has " + std::to_string(r.targets.size()) + " targets, expected " +
                                  std::to_string(trace.target_ids.size()));
    }
    row(out, r);
  }
  return out;
}

void write_trace(const Trace& trace, const std::filesystem::path& path) {
  const std::string text = format_trace(trace);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

Trace parse_trace(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != header_line()) {
    throw std::runtime_error("trace line 1: expected '" + header_line() + "'");
  }
  if (!std::getline(in, line)) throw std::runtime_error("trace line 2: missing column header");
  const auto names = split(line);
  if (names.size() < kBaseCount || (names.size() - kBaseCount) % std::size(kTargetSuffixes) != 0) {
    throw std::runtime_error("trace line 2: unexpected column count " + std::to_string(names.size()));
  }
  Trace trace;
  for (std::size_t i = kBaseCount; i < names.size(); i += std::size(kTargetSuffixes)) {
    const std::string& first = names[i];
    trace.target_ids.push_back(first.substr(0, first.size() - 2));
  }
  if (names != trace_columns(trace.target_ids)) throw std::runtime_error("trace line 2: unexpected column names");

  int lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != names.size()) {
      throw std::runtime_error("trace line " + std::to_string(lineno) + ": expected " + std::to_string(names.size()) +
                               " columns, found " + std::to_string(cells.size()));
    }
    RowReader rd(cells, lineno);
    TraceRecord r;
    r.time = rd.real();
    r.sequence = static_cast<int>(rd.integer());
    for (int i = 0; i < 3; ++i) r.drone.position[i] = rd.real();
    for (int i = 0; i < 3; ++i) r.drone.velocity[i] = rd.real();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.drone.rotation(i, j) = rd.real();
    r.intrinsics.focal_length = rd.real();
    r.intrinsics.focus_distance = rd.real();
    r.intrinsics.aperture = rd.real();
    r.dof.near = rd.real();
    r.dof.far = rd.real();
    r.desired_near = rd.optional_real();
    r.desired_far = rd.optional_real();
    r.cost.j_dof = rd.real();
    r.cost.j_im = rd.real();
    r.cost.j_p = rd.real();
    r.cost.total = rd.real();
    r.penalty = rd.real();
    r.cost.behind_camera = static_cast<int>(rd.integer());
    for (int i = 0; i < 3; ++i) r.drone_input.acceleration[i] = rd.real();
    for (int i = 0; i < 3; ++i) r.drone_input.gimbal_rate[i] = rd.real();
    r.camera_input.focal_rate = rd.real();
    r.camera_input.focus_rate = rd.real();
    r.camera_input.aperture_rate = rd.real();
    r.iterations = static_cast<int>(rd.integer());
    r.converged = rd.integer() != 0;
    r.clamp_flags = static_cast<std::uint32_t>(rd.integer());
    r.targets.resize(trace.target_ids.size());
    for (auto& t : r.targets) {
      for (int i = 0; i < 3; ++i) t.true_position[i] = rd.real();
      for (int i = 0; i < 3; ++i) t.measured_position[i] = rd.real();
    }
    trace.records.push_back(std::move(r));
  }
  return trace;
}

Trace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_trace(ss.str());
}

}  // namespace cinempc

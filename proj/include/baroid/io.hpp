#pragma once

#include "baroid/datagen.hpp"
#include "baroid/types.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace baroid {

static_assert(std::endian::native == std::endian::little,
              "container payloads are little-endian doubles");

/// Self-describing container: a text header of `key = value` lines
/// terminated by a blank line, followed by a contiguous little-endian
/// binary section of 64-bit floats whose layout the header determines.
class Container {
 public:
  void set(const std::string& key, const std::string& value) { header_[key] = value; }

  void set_scalar(const std::string& key, Scalar v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    header_[key] = buf;
  }

  void set_int(const std::string& key, std::int64_t v) { header_[key] = std::to_string(v); }

  void set_uint(const std::string& key, std::uint64_t v) { header_[key] = std::to_string(v); }

  bool has(const std::string& key) const { return header_.count(key) != 0; }

  const std::string& get(const std::string& key) const {
    auto it = header_.find(key);
    if (it == header_.end()) throw FormatError("missing header key '" + key + "'");
    return it->second;
  }

  Scalar get_scalar(const std::string& key) const {
    const std::string& s = get(key);
    char* end = nullptr;
    const Scalar v = std::strtod(s.c_str(), &end);
    if (end == s.c_str()) throw FormatError("header key '" + key + "' is not a number: " + s);
    return v;
  }

  std::int64_t get_int(const std::string& key) const {
    return static_cast<std::int64_t>(std::strtoll(get(key).c_str(), nullptr, 10));
  }

  std::uint64_t get_uint(const std::string& key) const {
    return static_cast<std::uint64_t>(std::strtoull(get(key).c_str(), nullptr, 10));
  }

  const std::map<std::string, std::string>& entries() const { return header_; }

  std::vector<Scalar>& payload() { return payload_; }
  const std::vector<Scalar>& payload() const { return payload_; }

  void append(const Vec& v) { payload_.insert(payload_.end(), v.data(), v.data() + v.size()); }

  // row-major append so the header's (rows, cols) describe the layout
  void append_row_major(const Mat& m) {
    for (Index r = 0; r < m.rows(); ++r) {
      for (Index c = 0; c < m.cols(); ++c) payload_.push_back(m(r, c));
    }
  }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (const auto& [key, value] : header_) out << key << " = " << value << '\n';
    out << '\n';
    out.write(reinterpret_cast<const char*>(payload_.data()),
              static_cast<std::streamsize>(payload_.size() * sizeof(Scalar)));
    if (!out) throw IoError("failed writing " + path);
  }

  static Container read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path + " for reading");

    Container c;
    std::string line;
    int line_no = 0;
    bool terminated = false;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) {
        terminated = true;
        break;
      }
      const auto eq = line.find(" = ");
      if (eq == std::string::npos) {
        throw FormatError(path + ":" + std::to_string(line_no) +
                          ": expected 'key = value', got '" + line + "'");
      }
      c.header_[line.substr(0, eq)] = line.substr(eq + 3);
    }
    if (!terminated) {
      throw FormatError(path + ": header not terminated by a blank line (line " +
                        std::to_string(line_no) + ")");
    }

    const std::streamoff data_start = in.tellg();
    in.seekg(0, std::ios::end);
    const std::streamoff data_bytes = in.tellg() - data_start;
    if (data_bytes % static_cast<std::streamoff>(sizeof(Scalar)) != 0) {
      throw FormatError(path + ": binary section of " + std::to_string(data_bytes) +
                        " bytes at offset " + std::to_string(data_start) +
                        " is not a whole number of doubles");
    }
    in.seekg(data_start);
    c.payload_.resize(static_cast<std::size_t>(data_bytes) / sizeof(Scalar));
    in.read(reinterpret_cast<char*>(c.payload_.data()), data_bytes);
    if (!in) throw IoError("failed reading payload of " + path);
    return c;
  }

  /// Checks the payload holds exactly `expected` doubles.
  void expect_payload(std::size_t expected, const std::string& path) const {
    if (payload_.size() != expected) {
      throw FormatError(path + ": payload holds " + std::to_string(payload_.size()) +
                        " doubles, header implies " + std::to_string(expected));
    }
  }

 private:
  std::map<std::string, std::string> header_;
  std::vector<Scalar> payload_;
};

/// FNV-1a 64-bit digest of a file's bytes, reported as fixed-width hex.
inline std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for digest");
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 14];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
    if (got < static_cast<std::streamsize>(sizeof(buf))) break;
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return out;
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
  Container c;
  c.set("kind", "dataset");
  c.set_int("version", 1);
  c.set_int("n_samples", ds.size());
  c.set_int("n_steps", ds.n_steps());
  c.set_scalar("dt", ds.schedule.dt);
  c.set_uint("seed", ds.seed);
  c.set_int("rejections", ds.rejections);
  c.set_scalar("piston_rate", ds.schedule.piston_rate);
  c.set_scalar("sample_height", ds.schedule.sample_height);
  c.set_scalar("loading_fraction", ds.schedule.loading_fraction);
  c.set_int("substeps", ds.schedule.substeps);
  c.set_scalar("isotropic_stress", ds.init.isotropic_stress);
  c.set_scalar("void_ratio", ds.init.void_ratio);
  for (int i = 0; i < 7; ++i) {
    char lo[32], hi[32];
    std::snprintf(lo, sizeof(lo), "%.17g", ds.bounds.lower[i]);
    std::snprintf(hi, sizeof(hi), "%.17g", ds.bounds.upper[i]);
    c.set(std::string("bounds_") + kParamNames[i], std::string(lo) + " " + hi);
  }

  c.payload().reserve(static_cast<std::size_t>(ds.size() * (7 + ds.n_steps())));
  for (const auto& s : ds.samples) {
    c.append(s.params.vector());
    c.append(s.series.values);
  }
  c.write(path);
}

inline Dataset load_dataset(const std::string& path) {
  const Container c = Container::read(path);
  if (c.get("kind") != "dataset") {
    throw FormatError(path + ": kind is '" + c.get("kind") + "', expected 'dataset'");
  }

  Dataset ds;
  const Index n = c.get_int("n_samples");
  const Index d = c.get_int("n_steps");
  if (n < 1 || d < 2) throw FormatError(path + ": invalid n_samples/n_steps");
  ds.schedule.dt = c.get_scalar("dt");
  ds.schedule.n_steps = d;
  ds.schedule.piston_rate = c.get_scalar("piston_rate");
  ds.schedule.sample_height = c.get_scalar("sample_height");
  ds.schedule.loading_fraction = c.get_scalar("loading_fraction");
  ds.schedule.substeps = c.get_int("substeps");
  ds.init.isotropic_stress = c.get_scalar("isotropic_stress");
  ds.init.void_ratio = c.get_scalar("void_ratio");
  ds.seed = c.get_uint("seed");
  ds.rejections = c.get_int("rejections");
  for (int i = 0; i < 7; ++i) {
    std::istringstream bounds_in(c.get(std::string("bounds_") + kParamNames[i]));
    if (!(bounds_in >> ds.bounds.lower[i] >> ds.bounds.upper[i])) {
      throw FormatError(path + ": malformed bounds_" + kParamNames[i]);
    }
  }

  const std::size_t stride = static_cast<std::size_t>(7 + d);
  c.expect_payload(static_cast<std::size_t>(n) * stride, path);

  ds.samples.resize(static_cast<std::size_t>(n));
  const std::vector<Scalar>& data = c.payload();
  for (Index i = 0; i < n; ++i) {
    const Scalar* rec = data.data() + static_cast<std::size_t>(i) * stride;
    Vec7 pv;
    for (int j = 0; j < 7; ++j) pv[j] = rec[j];
    Sample& s = ds.samples[static_cast<std::size_t>(i)];
    s.params = MaterialParams::from_vector(pv);
    s.series.values = Eigen::Map<const Vec>(rec + 7, d);
    s.series.dt = ds.schedule.dt;
    s.series.params = s.params;
  }
  return ds;
}

/// Plain-CSV export for interoperability: one row per sample, seven
/// parameter columns then the stress values.
inline void export_dataset_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "# c1,c2,c3,c4,c5,c6,ec0";
  for (Index k = 0; k < ds.n_steps(); ++k) out << ",neg_sigma1_" << k;
  out << '\n';
  char buf[32];
  for (const auto& s : ds.samples) {
    const Vec7 p = s.params.vector();
    for (int j = 0; j < 7; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", p[j]);
      out << (j ? "," : "") << buf;
    }
    for (Index k = 0; k < s.series.values.size(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", s.series.values[k]);
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace baroid

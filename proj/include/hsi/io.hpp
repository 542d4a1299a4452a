#pragma once

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hsi/metrics.hpp"
#include "hsi/multiclass.hpp"
#include "hsi/split.hpp"
#include "hsi/types.hpp"

namespace hsi::io {

namespace fs = std::filesystem;

/// Little-endian encoder.
class ByteWriter {
 public:
  void magic(std::string_view m) { buf_.append(m); }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v), 4); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  const std::string& bytes() const { return buf_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::string buf_;
};

/// Little-endian decoder; every read is bounds-checked.
class ByteReader {
 public:
  ByteReader(std::string data, std::string name) : data_(std::move(data)), name_(std::move(name)) {}

  void expect_magic(std::string_view m) {
    need(m.size());
    if (std::string_view(data_).substr(pos_, m.size()) != m) {
      throw DataError(name_ + ": bad magic, expected " + std::string(m));
    }
    pos_ += m.size();
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  float f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(get(4))); }
  double f64() { return std::bit_cast<double>(get(8)); }

  std::size_t remaining() const { return data_.size() - pos_; }
  void expect_end() const {
    if (pos_ != data_.size()) {
      throw DataError(name_ + ": " + std::to_string(data_.size() - pos_) + " trailing bytes");
    }
  }
  /// Fails early when the header promises more data than the file holds.
  void need(std::size_t n) const {
    if (n > data_.size() - pos_) throw DataError(name_ + ": file is truncated");
  }

 private:
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::string data_;
  std::string name_;
  std::size_t pos_ = 0;
};

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Writes to a sibling temporary file and renames it over `path`.
inline void write_file_atomic(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw DataError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

inline std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xFFFFFFFFu) throw DataError(std::string(what) + " does not fit in 32 bits");
  return static_cast<std::uint32_t>(v);
}

inline std::uint16_t checked_u16(std::size_t v, const char* what) {
  if (v > 0xFFFFu) throw DataError(std::string(what) + " does not fit in 16 bits");
  return static_cast<std::uint16_t>(v);
}

// ---------------------------------------------------------------- cube (HSC1)

inline std::string encode_cube(const HyperCube& cube) {
  validate_cube(cube);
  ByteWriter w;
  w.magic("HSC1");
  w.u32(checked_u32(cube.height, "height"));
  w.u32(checked_u32(cube.width, "width"));
  w.u32(checked_u32(cube.bands, "bands"));
  w.u8(cube.normalized ? 1 : 0);
  for (double v : cube.data) w.f32(static_cast<float>(v));
  return w.bytes();
}

inline HyperCube decode_cube(std::string bytes, const std::string& name = "cube") {
  ByteReader r(std::move(bytes), name);
  r.expect_magic("HSC1");
  HyperCube cube;
  cube.height = r.u32();
  cube.width = r.u32();
  cube.bands = r.u32();
  const std::uint8_t flag = r.u8();
  if (flag > 1) throw DataError(name + ": normalized flag must be 0 or 1");
  cube.normalized = flag == 1;
  const std::size_t n = cube.height * cube.width * cube.bands;
  r.need(n * 4);
  cube.data.resize(n);
  for (auto& v : cube.data) v = r.f32();
  r.expect_end();
  validate_cube(cube);
  return cube;
}

inline void write_cube(const fs::path& p, const HyperCube& c) { write_file_atomic(p, encode_cube(c)); }
inline HyperCube read_cube(const fs::path& p) { return decode_cube(read_file(p), p.string()); }

// -------------------------------------------------------------- labels (HSL1)

inline std::string encode_labels(const LabelMap& labels) {
  validate_labels(labels);
  ByteWriter w;
  w.magic("HSL1");
  w.u32(checked_u32(labels.height, "height"));
  w.u32(checked_u32(labels.width, "width"));
  w.u16(checked_u16(labels.num_classes, "num_classes"));
  for (auto v : labels.labels) w.u16(v);
  return w.bytes();
}

inline LabelMap decode_labels(std::string bytes, const std::string& name = "labels") {
  ByteReader r(std::move(bytes), name);
  r.expect_magic("HSL1");
  LabelMap m;
  m.height = r.u32();
  m.width = r.u32();
  m.num_classes = r.u16();
  r.need(m.height * m.width * 2);
  m.labels.resize(m.height * m.width);
  for (auto& v : m.labels) v = r.u16();
  r.expect_end();
  validate_labels(m);
  return m;
}

inline void write_labels(const fs::path& p, const LabelMap& m) { write_file_atomic(p, encode_labels(m)); }
inline LabelMap read_labels(const fs::path& p) { return decode_labels(read_file(p), p.string()); }

// --------------------------------------------------------------- split (HSS1)

/// Only training pixels are stored; testing pixels are every other labeled
/// pixel of the companion label map.
inline std::string encode_split(const SplitSpec& split) {
  ByteWriter w;
  w.magic("HSS1");
  w.u64(split.seed);
  w.u32(checked_u32(split.training.size(), "training count"));
  for (const auto& p : split.training) {
    w.u32(p.row);
    w.u32(p.col);
  }
  return w.bytes();
}

inline SplitSpec decode_split(std::string bytes, const LabelMap& labels,
                              const std::string& name = "split") {
  ByteReader r(std::move(bytes), name);
  r.expect_magic("HSS1");
  const std::uint64_t seed = r.u64();
  const std::uint32_t n = r.u32();
  r.need(static_cast<std::size_t>(n) * 8);
  std::vector<std::uint32_t> pixels(n);
  for (auto& px : pixels) {
    const std::uint32_t row = r.u32();
    const std::uint32_t col = r.u32();
    if (row >= labels.height || col >= labels.width) throw DataError(name + ": pixel outside the label map");
    px = static_cast<std::uint32_t>(row * labels.width + col);
  }
  r.expect_end();
  // Preserve the stored order of the training list.
  SplitSpec split = split_from_training(labels, pixels, seed);
  std::vector<LabeledPixel> ordered;
  ordered.reserve(n);
  for (auto px : pixels) {
    ordered.push_back({static_cast<std::uint32_t>(px / labels.width),
                       static_cast<std::uint32_t>(px % labels.width),
                       static_cast<std::uint32_t>(*labels.class_of(px))});
  }
  split.training = std::move(ordered);
  return split;
}

inline void write_split(const fs::path& p, const SplitSpec& s) { write_file_atomic(p, encode_split(s)); }
inline SplitSpec read_split(const fs::path& p, const LabelMap& labels) {
  return decode_split(read_file(p), labels, p.string());
}

// --------------------------------------------------------- probability (HSP1)

inline std::string encode_probabilities(const ProbabilityTensor& t) {
  ByteWriter w;
  w.magic("HSP1");
  w.u32(checked_u32(t.height, "height"));
  w.u32(checked_u32(t.width, "width"));
  w.u16(checked_u16(t.num_classes, "num_classes"));
  for (double v : t.values) w.f32(static_cast<float>(v));
  return w.bytes();
}

inline ProbabilityTensor decode_probabilities(std::string bytes, const std::string& name = "probabilities") {
  ByteReader r(std::move(bytes), name);
  r.expect_magic("HSP1");
  const std::size_t h = r.u32();
  const std::size_t w = r.u32();
  const std::size_t c = r.u16();
  r.need(h * w * c * 4);
  ProbabilityTensor t(h, w, c);
  for (auto& v : t.values) {
    v = r.f32();
    if (!std::isfinite(v)) throw DataError(name + ": non-finite probability");
  }
  r.expect_end();
  return t;
}

inline void write_probabilities(const fs::path& p, const ProbabilityTensor& t) {
  write_file_atomic(p, encode_probabilities(t));
}
inline ProbabilityTensor read_probabilities(const fs::path& p) {
  return decode_probabilities(read_file(p), p.string());
}

/// Rounds every entry to single precision, the precision of HSP1 files.
inline ProbabilityTensor quantize_f32(ProbabilityTensor t) {
  for (auto& v : t.values) v = static_cast<double>(static_cast<float>(v));
  return t;
}

// --------------------------------------------------------------- model (HSM1)

inline std::string encode_model(const MulticlassModel& model) {
  ByteWriter w;
  w.magic("HSM1");
  w.u16(checked_u16(model.num_classes, "num_classes"));
  w.u8(static_cast<std::uint8_t>(model.kernel.kind));
  w.f64(model.kernel.sigma);
  for (const auto& bm : model.pairwise) {
    w.u32(checked_u32(bm.size(), "support vector count"));
    w.f64(bm.bias);
    w.f64(bm.sigmoid.slope);
    w.f64(bm.sigmoid.offset);
    w.f64(bm.nu);
    for (std::size_t s = 0; s < bm.size(); ++s) {
      w.u32(bm.sv_pixel[s]);
      w.f64(bm.alpha_y[s]);
      for (std::size_t b = 0; b < bm.support_vectors.dim; ++b) {
        w.f32(static_cast<float>(bm.support_vectors.row(s)[b]));
      }
    }
  }
  return w.bytes();
}

/// The format does not record the band count; it comes from the cube the
/// model is used with.
inline MulticlassModel decode_model(std::string bytes, std::size_t bands,
                                    const std::string& name = "model") {
  ByteReader r(std::move(bytes), name);
  r.expect_magic("HSM1");
  MulticlassModel model;
  model.num_classes = r.u16();
  if (model.num_classes < 2) throw DataError(name + ": a model needs at least two classes");
  const std::uint8_t kind = r.u8();
  if (kind != static_cast<std::uint8_t>(KernelKind::Rbf)) throw DataError(name + ": unknown kernel kind");
  model.kernel.kind = KernelKind::Rbf;
  model.kernel.sigma = r.f64();
  validate_kernel(model.kernel);
  model.pairwise.resize(model.num_classes * (model.num_classes - 1) / 2);
  for (auto& bm : model.pairwise) {
    const std::uint32_t n_sv = r.u32();
    bm.kernel = model.kernel;
    bm.bias = r.f64();
    bm.sigmoid.slope = r.f64();
    bm.sigmoid.offset = r.f64();
    bm.nu = r.f64();
    bm.sigmoid_fallback = bm.sigmoid.slope == -1.0 && bm.sigmoid.offset == 0.0;
    r.need(static_cast<std::size_t>(n_sv) * (12 + 4 * bands));
    bm.support_vectors = SpectraMatrix{n_sv, bands, std::vector<double>(n_sv * bands)};
    bm.sv_pixel.resize(n_sv);
    bm.alpha_y.resize(n_sv);
    for (std::size_t s = 0; s < n_sv; ++s) {
      bm.sv_pixel[s] = r.u32();
      bm.alpha_y[s] = r.f64();
      for (std::size_t b = 0; b < bands; ++b) bm.support_vectors.data[s * bands + b] = r.f32();
    }
  }
  r.expect_end();
  return model;
}

inline void write_model(const fs::path& p, const MulticlassModel& m) { write_file_atomic(p, encode_model(m)); }
inline MulticlassModel read_model(const fs::path& p, std::size_t bands) {
  return decode_model(read_file(p), bands, p.string());
}

// ------------------------------------------------------------------- heatmaps

/// Binary PGM (P5) with maxval = number of runs.
inline std::string encode_heatmap_pgm(const Heatmap& h) {
  const std::size_t maxval = std::max<std::size_t>(1, h.runs);
  if (maxval > 65535) throw DataError("too many runs for a PGM heatmap");
  std::string out = "P5\n" + std::to_string(h.width) + " " + std::to_string(h.height) + "\n" +
                    std::to_string(maxval) + "\n";
  for (auto v : h.counts) {
    if (maxval < 256) {
      out.push_back(static_cast<char>(v));
    } else {
      out.push_back(static_cast<char>((v >> 8) & 0xFF));
      out.push_back(static_cast<char>(v & 0xFF));
    }
  }
  return out;
}

inline std::string encode_heatmap_csv(const Heatmap& h) {
  std::string out = "row,col,misclassified,tested\n";
  for (std::size_t r = 0; r < h.height; ++r) {
    for (std::size_t c = 0; c < h.width; ++c) {
      const std::size_t px = r * h.width + c;
      out += std::to_string(r) + "," + std::to_string(c) + "," + std::to_string(h.counts[px]) + "," +
             std::to_string(static_cast<int>(h.tested[px])) + "\n";
    }
  }
  return out;
}

// ---------------------------------------------------------------- count lists

/// Per-class training counts: one entry per line, either "count" (classes in
/// order) or "class,count" with a 1-based class. Blank lines and lines
/// starting with '#' are skipped, as is a non-numeric header line.
inline std::vector<std::size_t> parse_class_counts(const std::string& text, std::size_t num_classes) {
  std::vector<std::size_t> counts(num_classes, 0);
  std::vector<std::uint8_t> given(num_classes, 0);
  std::istringstream in(text);
  std::string line;
  std::size_t next = 0;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const bool header = first && !line.empty() && !std::isdigit(static_cast<unsigned char>(line[0])) &&
                        line[0] != '#';
    first = false;
    if (line.empty() || line[0] == '#' || header) continue;
    std::size_t cls, count;
    try {
      const auto comma = line.find(',');
      if (comma == std::string::npos) {
        cls = next++;
        count = std::stoul(line);
      } else {
        const unsigned long c1 = std::stoul(line.substr(0, comma));
        if (c1 == 0) throw DataError("class numbers in count files are 1-based");
        cls = c1 - 1;
        count = std::stoul(line.substr(comma + 1));
      }
    } catch (const std::logic_error&) {
      throw DataError("cannot parse count line '" + line + "'");
    }
    if (cls >= num_classes) throw DataError("count given for unknown class " + std::to_string(cls + 1));
    if (given[cls]) throw DataError("class " + std::to_string(cls + 1) + " given twice");
    given[cls] = 1;
    counts[cls] = count;
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (!given[c]) throw DataError("no count given for class " + std::to_string(c + 1));
  }
  return counts;
}

}  // namespace hsi::io

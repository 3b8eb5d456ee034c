#include "anc/paths.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "anc/errors.hpp"

namespace anc::paths {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

AcousticPath parse_text_ir(const std::string& content, const std::string& name,
                           double sample_rate) {
  AcousticPath out;
  out.sample_rate = sample_rate;
  out.label = name;
  std::istringstream in(content);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end == t.c_str() || *end != '\0')
      throw parse_error(name + ": line " + std::to_string(lineno) +
                        " is not a coefficient: '" + t + "'");
    if (!std::isfinite(v))
      throw nonfinite_error(name + ": non-finite coefficient at line " +
                            std::to_string(lineno));
    out.ir.c.push_back(v);
  }
  if (out.ir.c.empty()) throw parse_error(name + ": no coefficients found");
  return out;
}

AcousticPath parse_wav_ir(const std::vector<unsigned char>& bytes,
                          const std::string& name) {
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw parse_error(name + ": not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t data_off = 0, data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t len = read_u32le(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + len > bytes.size())
      throw parse_error(name + ": truncated WAVE chunk");
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (len < 16) throw parse_error(name + ": fmt chunk too short");
      format = read_u16le(bytes.data() + body);
      channels = read_u16le(bytes.data() + body + 2);
      rate = read_u32le(bytes.data() + body + 4);
      bits = read_u16le(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_off = body;
      data_len = len;
    }
    pos = body + len + (len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data_off == 0) throw parse_error(name + ": missing fmt/data chunk");
  if (format != 3 || bits != 32)
    throw parse_error(name + ": expected 32-bit float PCM (format tag 3)");
  if (channels != 1) throw parse_error(name + ": expected a single channel");
  if (data_len % 4 != 0 || data_len == 0)
    throw parse_error(name + ": bad data chunk size");

  AcousticPath out;
  out.sample_rate = static_cast<double>(rate);
  out.label = name;
  const std::size_t n = data_len / 4;
  out.ir.c.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    float f;
    std::memcpy(&f, bytes.data() + data_off + 4 * i, 4);
    if (!std::isfinite(f))
      throw nonfinite_error(name + ": non-finite sample at index " + std::to_string(i));
    out.ir.c[i] = static_cast<double>(f);
  }
  return out;
}

}  // namespace

AcousticPath load_ir(const std::filesystem::path& file, double text_sample_rate) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw io_error("cannot open IR file: " + file.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), "RIFF", 4) == 0)
    return parse_wav_ir(bytes, file.string());
  return parse_text_ir(std::string(bytes.begin(), bytes.end()), file.string(),
                       text_sample_rate);
}

void save_ir(const AcousticPath& p, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw io_error("cannot write IR file: " + file.string());
  char buf[64];
  for (double v : p.ir.c) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", v);
    out << buf;
  }
  if (!out) throw io_error("write failed: " + file.string());
}

void save_ir_wav(const AcousticPath& p, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw io_error("cannot write IR file: " + file.string());
  const std::uint32_t n = static_cast<std::uint32_t>(p.ir.size());
  const std::uint32_t data_len = n * 4;
  const std::uint32_t rate = static_cast<std::uint32_t>(p.sample_rate);
  const std::uint32_t byte_rate = rate * 4;

  auto put_u32 = [&](std::uint32_t v) {
    char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
                 static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
    out.write(b, 4);
  };
  auto put_u16 = [&](std::uint16_t v) {
    char b[2] = {static_cast<char>(v), static_cast<char>(v >> 8)};
    out.write(b, 2);
  };

  out.write("RIFF", 4);
  put_u32(36 + data_len);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(16);
  put_u16(3);  // IEEE float
  put_u16(1);  // mono
  put_u32(rate);
  put_u32(byte_rate);
  put_u16(4);   // block align
  put_u16(32);  // bits
  out.write("data", 4);
  put_u32(data_len);
  for (double v : p.ir.c) {
    const float f = static_cast<float>(v);
    char b[4];
    std::memcpy(b, &f, 4);
    out.write(b, 4);
  }
  if (!out) throw io_error("write failed: " + file.string());
}

AcousticPath synth_path(std::uint64_t seed, std::size_t taps, double decay,
                        std::size_t delay) {
  if (taps < 1) throw contract_error("synth_path: taps must be >= 1");
  if (!(decay > 0.0 && decay < 1.0))
    throw contract_error("synth_path: decay must be in (0,1)");
  if (delay >= taps) throw contract_error("synth_path: delay must be < taps");

  AcousticPath out;
  out.ir.c.resize(taps, 0.0);
  dsp::NoiseGen gen(seed);
  double scale = 1.0;
  for (std::size_t k = delay; k < taps; ++k) {
    out.ir.c[k] = gen.next() * scale;
    scale *= decay;
  }
  const double norm = out.ir.norm2();
  if (norm > 0.0)
    for (double& v : out.ir.c) v /= norm;
  char label[96];
  std::snprintf(label, sizeof(label), "synth/seed=%llu/taps=%zu/decay=%g/delay=%zu",
                static_cast<unsigned long long>(seed), taps, decay, delay);
  out.label = label;
  return out;
}

AcousticPath delta_path(std::size_t taps, std::size_t delay) {
  if (taps < 1 || delay >= taps) throw contract_error("delta_path: need delay < taps");
  AcousticPath out;
  out.ir.c.resize(taps, 0.0);
  out.ir.c[delay] = 1.0;
  out.label = "delta/taps=" + std::to_string(taps) + "/delay=" + std::to_string(delay);
  return out;
}

AcousticPath blend_paths(const AcousticPath& a, const AcousticPath& b, double t,
                         std::string label) {
  if (!(t >= 0.0 && t <= 1.0)) throw contract_error("blend_paths: t must be in [0,1]");
  if (a.sample_rate != b.sample_rate)
    throw contract_error("blend_paths: sample rates differ");
  AcousticPath out;
  out.sample_rate = a.sample_rate;
  out.ir.c.resize(std::max(a.ir.size(), b.ir.size()), 0.0);
  for (std::size_t k = 0; k < a.ir.size(); ++k) out.ir.c[k] += (1.0 - t) * a.ir[k];
  for (std::size_t k = 0; k < b.ir.size(); ++k) out.ir.c[k] += t * b.ir[k];
  const double norm = out.ir.norm2();
  if (norm == 0.0) throw contract_error("blend_paths: blend is identically zero");
  for (double& v : out.ir.c) v /= norm;
  out.label = label.empty()
                  ? "blend(" + a.label + "," + b.label + ",t=" + std::to_string(t) + ")"
                  : std::move(label);
  return out;
}

dsp::FirFilter fit_taps(const dsp::FirFilter& ir, std::size_t len, const char* what) {
  if (ir.size() > len)
    throw contract_error(std::string(what) + ": impulse response has " +
                         std::to_string(ir.size()) + " taps, limit is " +
                         std::to_string(len) + " (raise the filter length)");
  dsp::FirFilter out(len);
  std::copy(ir.c.begin(), ir.c.end(), out.c.begin());
  return out;
}

FrequencyGrid log_grid(double f_min, double f_max, std::size_t points) {
  if (!(f_min > 0.0 && f_min < f_max))
    throw contract_error("log_grid: need 0 < f_min < f_max");
  if (points < 2) throw contract_error("log_grid: need at least 2 points");
  FrequencyGrid g;
  g.freqs.resize(points);
  const double ratio = std::pow(f_max / f_min, 1.0 / static_cast<double>(points - 1));
  double f = f_min;
  for (std::size_t m = 0; m < points; ++m) {
    g.freqs[m] = f;
    f *= ratio;
  }
  g.freqs.back() = f_max;
  return g;
}

std::vector<double> magnitude_db(const AcousticPath& p, const FrequencyGrid& grid) {
  if (p.ir.c.empty()) throw contract_error("magnitude_db: empty impulse response");
  for (double f : grid.freqs)
    if (!(f > 0.0 && f < p.sample_rate / 2.0))
      throw contract_error("magnitude_db: grid frequency outside (0, sample_rate/2)");

  std::vector<double> out(grid.size());
  for (std::size_t m = 0; m < grid.size(); ++m) {
    const double w = 2.0 * std::numbers::pi * grid.freqs[m] / p.sample_rate;
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t k = 0; k < p.ir.size(); ++k)
      acc += p.ir[k] * std::polar(1.0, -w * static_cast<double>(k));
    const double mag = std::abs(acc);
    out[m] = (mag <= 0.0) ? kMagnitudeFloorDb
                          : std::max(20.0 * std::log10(mag), kMagnitudeFloorDb);
  }
  return out;
}

double lsd(const AcousticPath& a, const AcousticPath& b, const FrequencyGrid& grid) {
  if (a.sample_rate != b.sample_rate)
    throw contract_error("lsd: paths must share a sample rate");
  const std::vector<double> la = magnitude_db(a, grid);
  const std::vector<double> lb = magnitude_db(b, grid);
  double acc = 0.0;
  for (std::size_t m = 0; m < la.size(); ++m) {
    const double d = la[m] - lb[m];
    acc += d * d;
  }
  return std::sqrt(acc) / std::sqrt(static_cast<double>(grid.size()));
}

double dispersion(std::span<const AcousticPath> group, const FrequencyGrid& grid) {
  if (group.size() < 2) throw contract_error("dispersion: need at least 2 paths");
  double acc = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < group.size(); ++i)
    for (std::size_t j = i + 1; j < group.size(); ++j) {
      acc += lsd(group[i], group[j], grid);
      ++pairs;
    }
  return acc / static_cast<double>(pairs);
}

}  // namespace anc::paths

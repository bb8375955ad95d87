#include "haegan/weights_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <span>
#include <sstream>

#include "haegan/error.hpp"

namespace haegan::io {
namespace {

constexpr const char* kMagic = "haegan-weights";

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void put_f64(std::ostream& os, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  os.write(bytes, 8);
}

double get_f64(std::istream& is) {
  unsigned char bytes[8];
  if (!is.read(reinterpret_cast<char*>(bytes), 8)) throw io_error("weights: truncated value buffer");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

std::string next_line(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw io_error("weights: truncated header");
  return line;
}

bool on_manifold(std::span<const double> row, double k) {
  double ip = -row[0] * row[0];
  for (std::size_t i = 1; i < row.size(); ++i) ip += row[i] * row[i];
  return row[0] > 0.0 && std::abs(ip - 1.0 / k) <= 1e-8 * std::max(1.0, row[0] * row[0]);
}

}  // namespace

void write_weights(std::ostream& os, const nn::ParamList& params) {
  os << kMagic << ' ' << kWeightsFormatVersion << '\n' << "params " << params.size() << '\n';
  for (const auto& p : params) {
    if (p.name.empty() || p.name.find_first_of(" \t\n") != std::string::npos)
      throw invalid_argument("weights: parameter names must be non-empty without whitespace");
    os << p.name << ' ' << p.tensor.rows() << ' ' << p.tensor.cols() << ' ' << (p.manifold ? 1 : 0) << ' '
       << format_double(p.k.value()) << '\n';
  }
  os << "end\n";
  for (const auto& p : params)
    for (double v : p.tensor.values()) put_f64(os, v);
}

void read_weights(std::istream& is, const nn::ParamList& params) {
  {
    std::istringstream head(next_line(is));
    std::string magic;
    int version = 0;
    if (!(head >> magic >> version) || magic != kMagic) throw io_error("weights: not a weights file");
    if (version != kWeightsFormatVersion) throw io_error("weights: unsupported format version " + std::to_string(version));
  }
  {
    std::istringstream head(next_line(is));
    std::string tag;
    std::size_t count = 0;
    if (!(head >> tag >> count) || tag != "params") throw io_error("weights: malformed parameter count");
    if (count != params.size())
      throw io_error("weights: file has " + std::to_string(count) + " parameters, model has " +
                     std::to_string(params.size()));
  }
  for (const auto& p : params) {
    std::istringstream line(next_line(is));
    std::string name;
    std::size_t rows = 0, cols = 0;
    int manifold = 0;
    double k = 0.0;
    if (!(line >> name >> rows >> cols >> manifold >> k)) throw io_error("weights: malformed manifest line");
    if (name != p.name) throw io_error("weights: expected parameter " + p.name + ", found " + name);
    if (rows != p.tensor.rows() || cols != p.tensor.cols())
      throw io_error("weights: shape mismatch for " + name);
    if ((manifold != 0) != p.manifold || k != p.k.value())
      throw io_error("weights: manifold or curvature mismatch for " + name);
  }
  if (next_line(is) != "end") throw io_error("weights: missing end of manifest");

  std::vector<std::vector<double>> staged;
  staged.reserve(params.size());
  for (const auto& p : params) {
    std::vector<double> vals(p.tensor.size());
    for (auto& v : vals) {
      v = get_f64(is);
      if (!std::isfinite(v)) throw io_error("weights: non-finite value in " + p.name);
    }
    if (p.manifold) {
      const std::size_t c = p.tensor.cols();
      for (std::size_t r = 0; r < p.tensor.rows(); ++r)
        if (!on_manifold(std::span<const double>(vals).subspan(r * c, c), p.k.value()))
          throw io_error("weights: row " + std::to_string(r) + " of " + p.name + " is off the manifold");
    }
    staged.push_back(std::move(vals));
  }
  if (is.peek() != std::char_traits<char>::eof()) throw io_error("weights: trailing bytes");
  for (std::size_t i = 0; i < params.size(); ++i) {
    ad::Tensor t = params[i].tensor;
    auto dst = t.mutable_values();
    std::copy(staged[i].begin(), staged[i].end(), dst.begin());
  }
}

void save_weights(const std::string& path, const nn::ParamList& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("cannot write " + path);
  write_weights(os, params);
  if (!os) throw io_error("failed writing " + path);
}

void load_weights(const std::string& path, const nn::ParamList& params) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("cannot read " + path);
  read_weights(is, params);
}

}  // namespace haegan::io

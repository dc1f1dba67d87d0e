#include "daml/nn/checkpoint.hpp"

#include <array>
#include <cstdint>
#include <fstream>

#include "daml/error.hpp"

namespace daml::nn {
namespace {

constexpr std::array<char, 8> kMagic{'D', 'A', 'M', 'L', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) raise(ErrorKind::IoError, "truncated " + path.string());
  return value;
}

void put_matrix(std::ofstream& out, const Matrix& m) {
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}

void get_matrix(std::ifstream& in, Matrix& m, const std::filesystem::path& path) {
  if (!in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double))))
    raise(ErrorKind::IoError, "truncated " + path.string());
}

}  // namespace

void write_param_blob(const ParamRefs& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::IoError, "cannot write " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put(out, kVersion);
  put(out, static_cast<std::uint32_t>(params.size()));
  for (const Param* p : params) {
    put(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    put(out, static_cast<std::uint64_t>(p->value.rows()));
    put(out, static_cast<std::uint64_t>(p->value.cols()));
    put_matrix(out, p->value);
    put_matrix(out, p->momentum);
  }
  if (!out) raise(ErrorKind::IoError, "failed writing " + path.string());
}

void read_param_blob(const ParamRefs& params, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::IoError, "cannot read " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) raise(ErrorKind::IoError, "bad magic in " + path.string());
  if (get<std::uint32_t>(in, path) != kVersion) raise(ErrorKind::IoError, "unsupported version in " + path.string());
  if (get<std::uint32_t>(in, path) != params.size()) raise(ErrorKind::IoError, "parameter count mismatch in " + path.string());

  for (Param* p : params) {
    std::string name(get<std::uint32_t>(in, path), '\0');
    if (!in.read(name.data(), static_cast<std::streamsize>(name.size()))) raise(ErrorKind::IoError, "truncated " + path.string());
    if (name != p->name) raise(ErrorKind::IoError, "expected parameter " + p->name + ", found " + name);
    const auto rows = static_cast<Eigen::Index>(get<std::uint64_t>(in, path));
    const auto cols = static_cast<Eigen::Index>(get<std::uint64_t>(in, path));
    if (rows != p->value.rows() || cols != p->value.cols())
      raise(ErrorKind::IoError, "shape mismatch for parameter " + name);
    get_matrix(in, p->value, path);
    get_matrix(in, p->momentum, path);
    p->zero_grad();
  }
}

}  // namespace daml::nn

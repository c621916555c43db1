#include "spm/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace spm {

namespace {

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
}

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  }
  void magic(const char* m) { out_.write(m, 4); }
  void u32(std::uint32_t v) {
    v = to_little(v);
    out_.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void f64(double v) {
    std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(v));
    out_.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  void close() {
    out_.close();
    if (!out_) throw IoError("write failed for " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open " + path.string());
    in_.seekg(0, std::ios::end);
    remaining_ = static_cast<std::uint64_t>(in_.tellg());
    in_.seekg(0, std::ios::beg);
  }
  void expect_magic(const char* m) {
    char buf[4];
    need(4);
    in_.read(buf, 4);
    if (std::memcmp(buf, m, 4) != 0) throw IoError(path_.string() + ": bad magic, expected " + m);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    in_.read(reinterpret_cast<char*>(&v), sizeof v);
    return to_little(v);
  }
  double f64() {
    std::uint64_t bits;
    in_.read(reinterpret_cast<char*>(&bits), sizeof bits);
    return std::bit_cast<double>(to_little(bits));
  }
  Vector f64s(std::uint64_t count) {
    if (count > remaining_ / 8) throw IoError(path_.string() + ": payload shorter than header claims");
    remaining_ -= count * 8;
    Vector v(static_cast<Eigen::Index>(count));
    for (std::uint64_t i = 0; i < count; ++i) v(static_cast<Eigen::Index>(i)) = f64();
    if (!in_) throw IoError(path_.string() + ": read failed");
    return v;
  }
  void expect_end() {
    if (remaining_ != 0) throw IoError(path_.string() + ": trailing bytes after payload");
  }

 private:
  void need(std::uint64_t bytes) {
    if (remaining_ < bytes) throw IoError(path_.string() + ": truncated header");
    remaining_ -= bytes;
  }

  std::filesystem::path path_;
  std::ifstream in_;
  std::uint64_t remaining_ = 0;
};

std::uint64_t checked_pow(std::uint32_t base, std::uint32_t exp, const std::filesystem::path& path) {
  std::uint64_t r = 1;
  for (std::uint32_t i = 0; i < exp; ++i) {
    if (base != 0 && r > (std::uint64_t{1} << 40) / base) throw IoError(path.string() + ": sizes too large");
    r *= base;
  }
  return r;
}

void write_column_major(Writer& w, const Matrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) w.f64(m(i, j));
}

}  // namespace

void write_tensor(const std::filesystem::path& path, const SymTensor& t) {
  Writer w(path);
  w.magic("SPT1");
  w.u32(static_cast<std::uint32_t>(t.order()));
  w.u32(static_cast<std::uint32_t>(t.dim()));
  for (Eigen::Index i = 0; i < t.data().size(); ++i) w.f64(t.data()(i));
  w.close();
}

SymTensor read_tensor(const std::filesystem::path& path) {
  Reader r(path);
  r.expect_magic("SPT1");
  const std::uint32_t m = r.u32();
  const std::uint32_t d = r.u32();
  if (m < 1 || m > 8 || d < 1) throw IoError(path.string() + ": unsupported order or dimension");
  Vector data = r.f64s(checked_pow(d, m, path));
  r.expect_end();
  try {
    return SymTensor(static_cast<int>(d), static_cast<int>(m), std::move(data));
  } catch (const std::invalid_argument& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_ensemble(const std::filesystem::path& path, const ComponentEnsemble& e) {
  Writer w(path);
  w.magic("SPE1");
  w.u32(static_cast<std::uint32_t>(e.dim()));
  w.u32(static_cast<std::uint32_t>(e.order));
  w.u32(static_cast<std::uint32_t>(e.rank()));
  for (Eigen::Index i = 0; i < e.weights.size(); ++i) w.f64(e.weights(i));
  write_column_major(w, e.components);
  w.close();
}

ComponentEnsemble read_ensemble(const std::filesystem::path& path) {
  Reader r(path);
  r.expect_magic("SPE1");
  const std::uint32_t d = r.u32();
  const std::uint32_t m = r.u32();
  const std::uint32_t k = r.u32();
  if (d < 1 || m < 1 || k < 1) throw IoError(path.string() + ": empty ensemble header");
  Vector w = r.f64s(k);
  Vector a = r.f64s(std::uint64_t{d} * k);
  r.expect_end();
  try {
    return ComponentEnsemble(static_cast<int>(m), std::move(w),
                             Eigen::Map<const Matrix>(a.data(), d, k));
  } catch (const std::invalid_argument& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_subspace(const std::filesystem::path& path, const TensorSubspace& s) {
  Writer w(path);
  w.magic("SPS1");
  w.u32(static_cast<std::uint32_t>(s.dim()));
  w.u32(static_cast<std::uint32_t>(s.half_order()));
  w.u32(static_cast<std::uint32_t>(s.rank()));
  // Subspaces built without an SVD store NaN singular values.
  for (int i = 0; i < s.rank(); ++i)
    w.f64(s.has_singular_values() ? s.singular_values()(i) : std::nan(""));
  write_column_major(w, s.basis());
  w.close();
}

TensorSubspace read_subspace(const std::filesystem::path& path) {
  Reader r(path);
  r.expect_magic("SPS1");
  const std::uint32_t d = r.u32();
  const std::uint32_t n = r.u32();
  const std::uint32_t k = r.u32();
  if (d < 1 || n < 1) throw IoError(path.string() + ": bad subspace header");
  const std::uint64_t rows = checked_pow(d, n, path);
  Vector sv = r.f64s(k);
  Vector u = r.f64s(rows * k);
  r.expect_end();
  if (k > 0 && std::isnan(sv(0))) sv.resize(0);
  try {
    return TensorSubspace(static_cast<int>(d), static_cast<int>(n),
                          Eigen::Map<const Matrix>(u.data(), static_cast<Eigen::Index>(rows), k), sv);
  } catch (const std::invalid_argument& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

void write_decomposition_csv(const std::filesystem::path& path, const DecompositionResult& r) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "k,lambda_hat,objective,restarts";
  for (int i = 0; i < r.dim; ++i) out << ",a_hat_" << i;
  out << '\n';
  for (int k = 0; k < r.rank(); ++k) {
    const RecoveredComponent& c = r.components[k];
    out << (k + 1) << ',' << format_double(c.weight) << ',' << format_double(c.objective) << ','
        << c.restarts;
    for (int i = 0; i < r.dim; ++i) out << ',' << format_double(c.direction(i));
    out << '\n';
  }
  out.close();
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<Vector> read_points(const std::filesystem::path& path, int dim) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<Vector> points;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    for (char& c : line)
      if (c == ',') c = ' ';
    std::istringstream fields(line);
    std::vector<double> values;
    double v;
    while (fields >> v) values.push_back(v);
    if (!fields.eof()) throw IoError(fmt::format("{}:{}: not a number", path.string(), lineno));
    if (values.empty()) continue;
    if (static_cast<int>(values.size()) != dim)
      throw IoError(fmt::format("{}:{}: expected {} coordinates, got {}", path.string(), lineno, dim,
                                values.size()));
    points.emplace_back(Eigen::Map<const Vector>(values.data(), dim));
  }
  return points;
}

}  // namespace spm

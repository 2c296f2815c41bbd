#include "mcse/tensor_io.hpp"

#include <istream>
#include <ostream>

#include "mcse/common.hpp"

namespace mcse {

void write_u32(std::ostream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ostream& os, uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void write_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
  write_u32(os, static_cast<uint32_t>(m.rows()));
  write_u32(os, static_cast<uint32_t>(m.cols()));
  os.write(reinterpret_cast<const char*>(m.data()),
           static_cast<std::streamsize>(sizeof(double) * m.size()));
}

uint32_t read_u32(std::istream& is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw DataError("truncated binary stream");
  return v;
}

uint64_t read_u64(std::istream& is) {
  uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw DataError("truncated binary stream");
  return v;
}

std::string read_string(std::istream& is) {
  const uint32_t n = read_u32(is);
  if (n > (1u << 20)) throw DataError("implausible string length in binary stream");
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw DataError("truncated binary stream");
  return s;
}

Eigen::MatrixXd read_matrix(std::istream& is) {
  const uint32_t rows = read_u32(is);
  const uint32_t cols = read_u32(is);
  if (static_cast<uint64_t>(rows) * cols > (1ull << 28))
    throw DataError("implausible tensor size in binary stream");
  Eigen::MatrixXd m(rows, cols);
  is.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!is) throw DataError("truncated binary stream");
  return m;
}

}  // namespace mcse

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>

namespace mcse {

// Little-endian binary primitives shared by the checkpoint container.
void write_u32(std::ostream& os, uint32_t v);
void write_u64(std::ostream& os, uint64_t v);
void write_string(std::ostream& os, const std::string& s);
void write_matrix(std::ostream& os, const Eigen::MatrixXd& m);

uint32_t read_u32(std::istream& is);
uint64_t read_u64(std::istream& is);
std::string read_string(std::istream& is);
Eigen::MatrixXd read_matrix(std::istream& is);

}  // namespace mcse

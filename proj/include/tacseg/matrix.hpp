#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace tacseg {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;

enum class DType : std::uint8_t { F32 = 1, F64 = 2 };

// TSM1 matrix container: "TSM1", u32 rows, u32 cols, u8 dtype, row-major
// little-endian payload.
void write_matrix(std::ostream& os, const Mat& m, DType dtype);
Mat read_matrix(std::istream& is);

// Picks F32 when every value survives a float round trip, F64 otherwise,
// so save/load is always bit-exact.
DType narrowest_exact_dtype(const Mat& m);

void save_matrix(const std::filesystem::path& path, const Mat& m);
void save_matrix(const std::filesystem::path& path, const Mat& m, DType dtype);
Mat load_matrix(const std::filesystem::path& path);

Mat column_matrix(const std::vector<double>& values);
std::vector<double> column_values(const Mat& m);

}  // namespace tacseg

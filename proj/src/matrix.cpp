#include "tacseg/matrix.hpp"

#include "tacseg/errors.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

namespace tacseg {
namespace {

static_assert(std::endian::native == std::endian::little, "TSM1 I/O assumes a little-endian host");

constexpr std::array<char, 4> kMagic{'T', 'S', 'M', '1'};

template <class T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) fail(ErrorCode::FormatError, "truncated matrix header");
    return v;
}

}  // namespace

void write_matrix(std::ostream& os, const Mat& m, DType dtype) {
    if (m.rows() > std::numeric_limits<std::uint32_t>::max() || m.cols() > std::numeric_limits<std::uint32_t>::max())
        fail(ErrorCode::FormatError, "matrix too large for TSM1");
    os.write(kMagic.data(), kMagic.size());
    put(os, static_cast<std::uint32_t>(m.rows()));
    put(os, static_cast<std::uint32_t>(m.cols()));
    put(os, static_cast<std::uint8_t>(dtype));
    if (dtype == DType::F64) {
        os.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    } else {
        std::vector<float> buf(static_cast<std::size_t>(m.size()));
        for (Eigen::Index i = 0; i < m.size(); ++i) buf[static_cast<std::size_t>(i)] = static_cast<float>(m.data()[i]);
        os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    if (!os) fail(ErrorCode::IoError, "failed writing matrix payload");
}

Mat read_matrix(std::istream& is) {
    std::array<char, 4> magic{};
    is.read(magic.data(), magic.size());
    if (!is || magic != kMagic) fail(ErrorCode::FormatError, "bad TSM1 magic");
    const auto rows = get<std::uint32_t>(is);
    const auto cols = get<std::uint32_t>(is);
    const auto dtype = get<std::uint8_t>(is);
    Mat m(rows, cols);
    if (dtype == static_cast<std::uint8_t>(DType::F64)) {
        is.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    } else if (dtype == static_cast<std::uint8_t>(DType::F32)) {
        std::vector<float> buf(static_cast<std::size_t>(m.size()));
        is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = buf[static_cast<std::size_t>(i)];
    } else {
        fail(ErrorCode::FormatError, "unknown TSM1 dtype " + std::to_string(dtype));
    }
    if (!is) fail(ErrorCode::FormatError, "truncated TSM1 payload");
    return m;
}

DType narrowest_exact_dtype(const Mat& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        const double v = m.data()[i];
        const double back = static_cast<double>(static_cast<float>(v));
        // memcmp keeps -0.0 and NaN payloads honest
        if (std::memcmp(&v, &back, sizeof(double)) != 0) return DType::F64;
    }
    return DType::F32;
}

void save_matrix(const std::filesystem::path& path, const Mat& m) { save_matrix(path, m, narrowest_exact_dtype(m)); }

void save_matrix(const std::filesystem::path& path, const Mat& m, DType dtype) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    write_matrix(os, m, dtype);
}

Mat load_matrix(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorCode::MissingFile, path.string());
    return read_matrix(is);
}

Mat column_matrix(const std::vector<double>& values) {
    Mat m(static_cast<Eigen::Index>(values.size()), 1);
    for (std::size_t i = 0; i < values.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = values[i];
    return m;
}

std::vector<double> column_values(const Mat& m) {
    if (m.cols() != 1) fail(ErrorCode::FormatError, "expected a single-column matrix");
    return {m.data(), m.data() + m.rows()};
}

}  // namespace tacseg

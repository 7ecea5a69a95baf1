#pragma once

#include "wpf/panel.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace wpf::test {

inline constexpr std::int64_t kEpoch2012 = 1325376000;  // 2012-01-01 00:00 UTC

inline data::TurbinePanel panel_from(const Eigen::MatrixXd& speed, const Eigen::MatrixXd& power,
                                     std::int64_t start = kEpoch2012) {
    std::vector<std::string> labels;
    for (Eigen::Index i = 0; i < speed.cols(); ++i) labels.push_back("T" + std::to_string(i + 1));
    return data::TurbinePanel::from_matrices(speed, power, labels, start);
}

inline Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = z(rng);
    return m;
}

// Scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("wpf_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace wpf::test

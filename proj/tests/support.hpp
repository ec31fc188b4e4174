#pragma once

#include <gtest/gtest.h>

#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "colorspace/colorspace.hpp"
#include "oracles.hpp"

namespace testing_support {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        std::string name = "colorspace_" + tag;
        if (info) name += std::string("_") + info->test_suite_name() + "_" + info->name();
        path_ = fs::temp_directory_path() / name;
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& s) const { return path_ / s; }

private:
    fs::path path_;
};

using oracle::numeric_gradient;
using oracle::random_image;
using oracle::random_tensor;
using oracle::relative_error;

}  // namespace testing_support

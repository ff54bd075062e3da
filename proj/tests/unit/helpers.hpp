#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "bhtwa/model.hpp"

namespace testutil {

inline bhtwa::PhaseState random_state(std::size_t L, std::uint64_t seed, double scale = 0.5) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, scale);
    bhtwa::PhaseState s(L);
    for (double& x : s.flat()) x = g(rng);
    return s;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() / ("bhtwa_" + tag + "_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

}  // namespace testutil

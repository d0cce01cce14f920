#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

namespace testutil {

namespace fs = std::filesystem;

// Scratch directory wiped on scope exit.
struct TempDir {
    fs::path path;

    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() /
               ("wslln_test_" + std::to_string(uint64_t(rd()) << 32 | rd()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

inline std::string slurp(const fs::path& p) {
    std::string out;
    FILE* f = std::fopen(p.string().c_str(), "rb");
    if (!f) return out;
    char buf[4096];
    size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) out.append(buf, n);
    std::fclose(f);
    return out;
}

}  // namespace testutil

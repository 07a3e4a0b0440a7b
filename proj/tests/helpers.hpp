#pragma once

#include "vexel/common.hpp"

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

namespace testutil {

inline std::string fixture_dir() {
    if (const char* env = std::getenv("VEXEL_FIXTURES")) return env;
    return "tests/fixtures";
}

inline std::string fixture_path(const std::string& rel) {
    return (std::filesystem::path(fixture_dir()) / rel).string();
}

inline std::string load_fixture(const std::string& rel) {
    return vexel::read_file(fixture_path(rel));
}

inline std::vector<std::string> corpus_files() {
    std::vector<std::string> files;
    for (const auto& e : std::filesystem::directory_iterator(fixture_path("corpus"))) {
        if (e.path().extension() == ".svg") files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
    return files;
}

inline std::string temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "vexel_tests";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

} // namespace testutil

#pragma once

#include <atomic>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace testutil {

// Scratch directory removed on scope exit.
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("cehis_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path);
    }

    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }

    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) {
        out += l;
        out += '\n';
    }
    return out;
}

// Minimal corpus directory: three split files plus dense id maps.
inline void write_corpus(const std::filesystem::path& dir, const std::vector<std::string>& train,
                         const std::vector<std::string>& valid, const std::vector<std::string>& test,
                         int n_entities, int n_relations) {
    std::filesystem::create_directories(dir);
    write_file(dir / "train.txt", join_lines(train));
    write_file(dir / "valid.txt", join_lines(valid));
    write_file(dir / "test.txt", join_lines(test));
    std::string emap, rmap;
    for (int i = 0; i < n_entities; ++i) emap += "e" + std::to_string(i) + "\t" + std::to_string(i) + "\n";
    for (int i = 0; i < n_relations; ++i) rmap += "rel" + std::to_string(i) + "\t" + std::to_string(i) + "\n";
    write_file(dir / "entity2id.txt", emap);
    write_file(dir / "relation2id.txt", rmap);
}

} // namespace testutil

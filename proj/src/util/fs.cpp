#include "mobench/util/fs.hpp"

#include <fstream>
#include <sstream>

#include "mobench/util/error.hpp"

namespace mobench::fs {

std::string read_file(const stdfs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open file: " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const stdfs::path& path, std::string_view data) {
    if (path.has_parent_path()) {
        stdfs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write file: " + path.string());
    }
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) {
        throw Error("short write: " + path.string());
    }
}

void write_file_atomic(const stdfs::path& path, std::string_view data) {
    stdfs::path tmp = path;
    tmp += ".tmp";
    write_file(tmp, data);
    stdfs::rename(tmp, path);
}

}  // namespace mobench::fs

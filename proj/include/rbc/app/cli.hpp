#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

namespace rbc::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 2;  // solver or verdict failure
inline constexpr int kExitConfig = 3;   // invalid configuration

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

std::string sha256_file(const std::filesystem::path& path);

/// A fresh directory <root>/<command>_<utc time>[_<tag>] plus the manifest
/// written into it on finish(). Never reuses an existing directory.
class RunDirectory {
public:
    RunDirectory(const std::filesystem::path& root, const std::string& command, const std::string& tag = "");

    [[nodiscard]] const std::filesystem::path& path() const { return dir_; }

    /// Writes name inside the run directory and records it for the manifest.
    void write(const std::string& name, const std::function<void(std::ostream&)>& body);
    /// Records a file already written inside the run directory.
    void add(const std::string& name);

    /// manifest.json: config, resolved constants, file hashes, timings, version.
    void finish(const nlohmann::json& config, const nlohmann::json& resolved, int exit_code);

private:
    std::filesystem::path dir_;
    std::string command_;
    std::vector<std::string> files_;
    double started_ = 0.0;
};

/// Entry point of the rbc tool; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace rbc::app

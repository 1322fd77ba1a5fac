#pragma once

#include "rbc/spectral/field.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

namespace rbc::spectral {

/// A field plus the run parameters stored alongside it. Layout in docs/snapshot_format.md.
struct Snapshot {
    SpectralField field;
    double R = 0.0;
    double Pr = 0.0;
    double time = 0.0;
    std::map<std::string, std::string> extra;
};

inline constexpr int kSnapshotVersion = 1;

void write_snapshot(std::ostream& os, const Snapshot& s);
void write_snapshot(const std::filesystem::path& path, const Snapshot& s);
Snapshot read_snapshot(std::istream& is);
Snapshot read_snapshot(const std::filesystem::path& path);

}  // namespace rbc::spectral

#pragma once

#include <filesystem>

#include "nstp/mesh/fields.hpp"

namespace nstp {

/// Binary face-field snapshot (layout in docs/formats.md):
///
///   char[8]  magic "NSTPFLD1"
///   then two records, u first, each
///     int32   n
///     int32   component (0 = u, 1 = v)
///     float64 time
///     float64 values[...]   row-major, j outer, i inner
///
/// All numbers little-endian. u records hold (n+1)*n values, v records n*(n+1).
void write_snapshot(const std::filesystem::path& path, const FaceField& field, double time);

struct Snapshot {
    FaceField field;
    double time;
};

/// Reads a snapshot written by write_snapshot. The grid is rebuilt from the
/// header; throws std::runtime_error on malformed input.
Snapshot read_snapshot(const std::filesystem::path& path);

}  // namespace nstp

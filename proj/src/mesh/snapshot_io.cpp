#include "nstp/mesh/snapshot_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace nstp {

static_assert(std::endian::native == std::endian::little,
              "snapshot I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'N', 'S', 'T', 'P', 'F', 'L', 'D', '1'};

template <typename T>
void put(std::ofstream& os, T value) {
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::ifstream& is) {
    T value{};
    is.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!is) throw std::runtime_error("snapshot: truncated file");
    return value;
}

}  // namespace

void write_snapshot(const std::filesystem::path& path, const FaceField& field, double time) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("snapshot: cannot open " + path.string());
    os.write(kMagic, sizeof(kMagic));
    const auto n = static_cast<std::int32_t>(field.n());
    put(os, n);
    put<std::int32_t>(os, 0);
    put(os, time);
    os.write(reinterpret_cast<const char*>(field.u_data().data()),
             static_cast<std::streamsize>(field.u_data().size() * sizeof(double)));
    put(os, n);
    put<std::int32_t>(os, 1);
    put(os, time);
    os.write(reinterpret_cast<const char*>(field.v_data().data()),
             static_cast<std::streamsize>(field.v_data().size() * sizeof(double)));
    if (!os) throw std::runtime_error("snapshot: write failed for " + path.string());
}

Snapshot read_snapshot(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("snapshot: cannot open " + path.string());
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("snapshot: bad magic in " + path.string());

    const auto n = get<std::int32_t>(is);
    if (get<std::int32_t>(is) != 0) throw std::runtime_error("snapshot: expected u record first");
    const double time = get<double>(is);
    FaceField field{Grid(n)};
    is.read(reinterpret_cast<char*>(field.u_data().data()),
            static_cast<std::streamsize>(field.u_data().size() * sizeof(double)));
    if (get<std::int32_t>(is) != n) throw std::runtime_error("snapshot: inconsistent n");
    if (get<std::int32_t>(is) != 1) throw std::runtime_error("snapshot: expected v record");
    if (get<double>(is) != time) throw std::runtime_error("snapshot: inconsistent time");
    is.read(reinterpret_cast<char*>(field.v_data().data()),
            static_cast<std::streamsize>(field.v_data().size() * sizeof(double)));
    if (!is) throw std::runtime_error("snapshot: truncated file");
    return {std::move(field), time};
}

}  // namespace nstp

#include "physgrid/grid_io.hpp"

#include <cstring>

#include "physgrid/binary_io.hpp"
#include "physgrid/errors.hpp"

namespace physgrid {

namespace {
constexpr char kMagic[4] = {'P', 'G', 'W', 'F'};
}

std::vector<std::uint8_t> encode_grid(const GridField& field) {
    field.validate();
    bin::Writer w;
    w.bytes(kMagic, sizeof(kMagic));
    w.put<std::uint16_t>(kGridFormatVersion);
    for (std::size_t d : {field.nt(), field.ny(), field.nx(), field.nvars()}) {
        if (d > 0xffffffffu) throw DataError("pgwf: dimension does not fit in u32");
        w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
    }
    const GridAxes& a = field.axes();
    for (double v : {a.x0, a.dx, a.y0, a.dy, a.t0, a.dt}) w.put<double>(v);
    for (const auto& n : field.names()) w.str(n);
    w.str(a.space_units);
    w.str(a.time_units);
    for (double v : field.data()) w.put<double>(v);
    return w.take();
}

GridField decode_grid(const std::vector<std::uint8_t>& bytes) {
    bin::Reader r(bytes, "pgwf");
    if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        if (bytes.size() < sizeof(kMagic)) r.need(sizeof(kMagic));
        throw BadMagicError("pgwf: bad magic, not a PGWF grid file");
    }
    char magic[4];
    r.bytes(magic, sizeof(magic));
    const auto version = r.get<std::uint16_t>();
    if (version != kGridFormatVersion) {
        throw BadVersionError("pgwf: unsupported format version " + std::to_string(version));
    }
    const std::size_t nt = r.get<std::uint32_t>(), ny = r.get<std::uint32_t>(), nx = r.get<std::uint32_t>(),
                      h = r.get<std::uint32_t>();
    GridAxes a;
    a.x0 = r.get<double>();
    a.dx = r.get<double>();
    a.y0 = r.get<double>();
    a.dy = r.get<double>();
    a.t0 = r.get<double>();
    a.dt = r.get<double>();
    std::vector<std::string> names;
    for (std::size_t i = 0; i < h; ++i) names.push_back(r.str());
    a.space_units = r.str();
    a.time_units = r.str();
    const std::size_t count = nt * ny * nx * h;
    if (count > r.remaining() / sizeof(double) + 1) r.need(count * sizeof(double));
    std::vector<double> data(count);
    for (double& v : data) v = r.get<double>();
    if (r.remaining() != 0) {
        throw DataError("pgwf: " + std::to_string(r.remaining()) + " unexpected trailing bytes");
    }
    return GridField(nt, ny, nx, std::move(names), std::move(a), std::move(data));
}

void save_grid(const GridField& field, const std::filesystem::path& path) {
    bin::write_file(path, encode_grid(field));
}

GridField load_grid(const std::filesystem::path& path) { return decode_grid(bin::read_file(path)); }

}  // namespace physgrid

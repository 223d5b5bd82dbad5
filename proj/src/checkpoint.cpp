#include "physgrid/checkpoint.hpp"

#include <cstring>

#include "physgrid/binary_io.hpp"
#include "physgrid/errors.hpp"

namespace physgrid {

namespace {
constexpr char kMagic[5] = {'P', 'G', 'N', 'E', 'T'};
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
    if (c.widths.size() < 2) throw UsageError("pgnet: need at least two layer widths");
    if (Mlp::param_count(c.widths) != c.params.size()) throw ShapeError("pgnet: parameter count does not match widths");
    bin::Writer w;
    w.bytes(kMagic, sizeof(kMagic));
    w.put<std::uint16_t>(kNetFormatVersion);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(c.role));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(c.widths.size() - 1));
    for (std::size_t v : c.widths) w.put<std::uint32_t>(static_cast<std::uint32_t>(v));
    for (const Affine& a : c.normalization.axes) {
        w.put<double>(a.offset);
        w.put<double>(a.scale);
    }
    w.put<std::uint32_t>(static_cast<std::uint32_t>(c.normalization.outputs.size()));
    for (const Affine& a : c.normalization.outputs) {
        w.put<double>(a.offset);
        w.put<double>(a.scale);
    }
    w.put<std::uint32_t>(static_cast<std::uint32_t>(c.names.size()));
    for (const auto& n : c.names) w.str(n);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(c.aux.size()));
    for (double v : c.aux) w.put<double>(v);
    w.put<std::uint64_t>(c.params.size());
    for (double v : c.params) w.put<double>(v);
    return w.take();
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
    bin::Reader r(bytes, "pgnet");
    if (bytes.size() < sizeof(kMagic)) r.need(sizeof(kMagic));
    if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw BadMagicError("pgnet: bad magic, not a PGNET checkpoint");
    }
    char magic[5];
    r.bytes(magic, sizeof(magic));
    const auto version = r.get<std::uint16_t>();
    if (version != kNetFormatVersion) {
        throw BadVersionError("pgnet: unsupported format version " + std::to_string(version));
    }
    Checkpoint c;
    const auto role = r.get<std::uint8_t>();
    if (role > static_cast<std::uint8_t>(NetRole::Forecast)) throw DataError("pgnet: unknown role byte");
    c.role = static_cast<NetRole>(role);
    const std::size_t layers = r.get<std::uint32_t>();
    if (layers == 0 || layers > 1024) throw DataError("pgnet: implausible layer count");
    for (std::size_t i = 0; i <= layers; ++i) c.widths.push_back(r.get<std::uint32_t>());
    for (Affine& a : c.normalization.axes) {
        a.offset = r.get<double>();
        a.scale = r.get<double>();
    }
    const std::size_t outputs = r.get<std::uint32_t>();
    r.need(outputs * 2 * sizeof(double));
    c.normalization.outputs.resize(outputs);
    for (Affine& a : c.normalization.outputs) {
        a.offset = r.get<double>();
        a.scale = r.get<double>();
    }
    const std::size_t names = r.get<std::uint32_t>();
    for (std::size_t i = 0; i < names; ++i) {
        c.names.push_back(r.str());
    }
    const std::size_t aux = r.get<std::uint32_t>();
    r.need(aux * sizeof(double));
    c.aux.resize(aux);
    for (double& v : c.aux) v = r.get<double>();
    const std::uint64_t count = r.get<std::uint64_t>();
    if (count != Mlp::param_count(c.widths)) throw DataError("pgnet: parameter count does not match widths");
    r.need(count * sizeof(double));
    c.params.resize(count);
    for (double& v : c.params) v = r.get<double>();
    if (r.remaining() != 0) throw DataError("pgnet: " + std::to_string(r.remaining()) + " unexpected trailing bytes");
    return c;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
    bin::write_file(path, encode_checkpoint(c));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(bin::read_file(path)); }

Checkpoint to_checkpoint(const FieldNet& net, std::vector<std::string> names, std::vector<double> aux) {
    Checkpoint c;
    c.role = net.role();
    c.widths = net.mlp().widths();
    c.normalization = net.normalization();
    c.names = std::move(names);
    c.aux = std::move(aux);
    c.params = net.mlp().params();
    return c;
}

FieldNet to_field_net(const Checkpoint& c) {
    if (c.widths.empty() || c.widths.front() != 3) throw DataError("pgnet: not a coordinate network (input width != 3)");
    return FieldNet(Mlp(c.widths, c.params), c.role, c.normalization);
}

}  // namespace physgrid

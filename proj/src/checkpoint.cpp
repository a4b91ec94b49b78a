#include "dugks/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "dugks/error.hpp"

namespace dugks {

namespace {

constexpr std::array<char, 8> kMagic{'D', 'U', 'G', 'K', 'S', 'C', 'K', 'P'};
constexpr std::size_t kHeaderSize = 8 + 4 + 4 + 4 * 8 + 8 + 8;

class ByteWriter {
public:
    void u8(std::uint8_t v) { bytes_.push_back(v); }
    void u32(std::uint32_t v) { little_endian(v, 4); }
    void u64(std::uint64_t v) { little_endian(v, 8); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
    const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }

private:
    void little_endian(std::uint64_t v, int width)
    {
        for (int i = 0; i < width; ++i) {
            bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }
    std::vector<std::uint8_t> bytes_;
};

class ByteReader {
public:
    ByteReader(const std::vector<std::uint8_t>& bytes, std::string path)
        : bytes_(bytes), path_(std::move(path))
    {
    }

    std::uint8_t u8() { return static_cast<std::uint8_t>(little_endian(1)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(little_endian(4)); }
    std::uint64_t u64() { return little_endian(8); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

private:
    std::uint64_t little_endian(int width)
    {
        if (remaining() < static_cast<std::size_t>(width)) {
            throw CheckpointError(CheckpointError::Kind::Truncated, "checkpoint truncated: " + path_);
        }
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) {
            v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        }
        pos_ += static_cast<std::size_t>(width);
        return v;
    }

    const std::vector<std::uint8_t>& bytes_;
    std::string path_;
    std::size_t pos_ = 0;
};

}  // namespace

void checkpoint_write(const DistributionField& field, const RelaxationModel& model,
                      const std::filesystem::path& path)
{
    const auto values = field.values();
    ByteWriter w;
    w.raw(kMagic.data(), kMagic.size());
    w.u8(kCheckpointVersion);
    w.u8(static_cast<std::uint8_t>(field.grid().dim()));
    w.u8(static_cast<std::uint8_t>(field.set().kind));
    w.u8(0);
    w.u32(static_cast<std::uint32_t>(field.grid().n()));
    w.f64(field.set().rt0);
    w.f64(model.epsilon());
    w.f64(model.tau());
    w.f64(field.time());
    w.u64(field.step_count());
    w.u64(values.size());
    for (double v : values) {
        w.f64(v);
    }

    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot open checkpoint for writing: " + tmp.string());
        }
        out.write(reinterpret_cast<const char*>(w.bytes().data()),
                  static_cast<std::streamsize>(w.bytes().size()));
        if (!out) {
            throw IoError("failed writing checkpoint: " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw IoError("cannot move checkpoint into place: " + path.string() + " (" + ec.message() + ")");
    }
}

Checkpoint checkpoint_read(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open checkpoint: " + path.string());
    }
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                          std::istreambuf_iterator<char>()};
    const std::string where = path.string();
    if (bytes.size() < kMagic.size() || std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
        throw CheckpointError(CheckpointError::Kind::BadMagic, "not a checkpoint file: " + where);
    }
    ByteReader r(bytes, where);
    for (std::size_t i = 0; i < kMagic.size(); ++i) {
        r.u8();
    }
    const std::uint8_t version = r.u8();
    if (version != kCheckpointVersion) {
        throw CheckpointError(CheckpointError::Kind::VersionMismatch,
                              "checkpoint version " + std::to_string(version) + " unsupported (expected " +
                                  std::to_string(kCheckpointVersion) + "): " + where);
    }
    if (bytes.size() < kHeaderSize) {
        throw CheckpointError(CheckpointError::Kind::Truncated, "checkpoint header truncated: " + where);
    }
    const int dim = r.u8();
    const auto kind = static_cast<VelocitySetKind>(r.u8());
    r.u8();
    const std::uint32_t n = r.u32();
    const double rt0 = r.f64();
    const double eps = r.f64();
    const double tau = r.f64();
    const double time = r.f64();
    const std::uint64_t steps = r.u64();
    const std::uint64_t count = r.u64();

    DiscreteVelocitySet set = [&] {
        try {
            return build_velocity_set(kind, rt0);
        } catch (const ConfigError& e) {
            throw CheckpointError(CheckpointError::Kind::ExtentMismatch,
                                  std::string("checkpoint velocity set invalid: ") + e.what());
        }
    }();
    if (set.dim != dim || n < 4 || n > (1u << 20)) {
        throw CheckpointError(CheckpointError::Kind::ExtentMismatch,
                              "checkpoint header extents inconsistent: " + where);
    }
    DistributionField field(UniformPeriodicGrid(dim, static_cast<int>(n)), std::move(set));
    const std::size_t expected = field.values().size();
    if (count != expected) {
        throw CheckpointError(CheckpointError::Kind::ExtentMismatch,
                              "checkpoint holds " + std::to_string(count) + " values but header extents need " +
                                  std::to_string(expected) + ": " + where);
    }
    if (r.remaining() < expected * 8) {
        throw CheckpointError(CheckpointError::Kind::Truncated, "checkpoint data truncated: " + where);
    }
    if (r.remaining() > expected * 8) {
        throw CheckpointError(CheckpointError::Kind::ExtentMismatch,
                              "checkpoint has trailing bytes: " + where);
    }
    auto values = field.values();
    for (std::size_t i = 0; i < expected; ++i) {
        values[i] = r.f64();
    }
    field.set_time(time);
    field.set_step_count(static_cast<std::size_t>(steps));
    return Checkpoint{std::move(field), RelaxationModel(eps, tau)};
}

}  // namespace dugks

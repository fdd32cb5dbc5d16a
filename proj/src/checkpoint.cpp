#include "rupnet/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

namespace rupnet {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

class Writer {
public:
    template <typename U>
    void put(U v) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
        bytes.insert(bytes.end(), p, p + sizeof(U));
    }
    void put_bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        bytes.insert(bytes.end(), p, p + n);
    }
    std::vector<std::uint8_t> bytes;
};

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& b) : bytes_(b) {}

    template <typename U>
    U get(const char* what) {
        U v;
        get_bytes(&v, sizeof(U), what);
        return v;
    }
    void get_bytes(void* dst, std::size_t n, const char* what) {
        if (bytes_.size() - pos_ < n) {
            throw CorruptCheckpoint(std::string("corrupt-checkpoint: truncated while reading ") + what, pos_);
        }
        std::memcpy(dst, bytes_.data() + pos_, n);
        pos_ += n;
    }
    std::size_t pos() const { return pos_; }
    bool at_end() const { return pos_ == bytes_.size(); }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Network<float>& net) {
    Writer w;
    w.put_bytes(kCheckpointMagic, 4);
    w.put<std::uint32_t>(kCheckpointVersion);
    const std::string json = net.config().to_json().dump();
    w.put<std::uint32_t>(static_cast<std::uint32_t>(json.size()));
    w.put_bytes(json.data(), json.size());
    const auto& entries = net.params().entries();
    w.put<std::uint32_t>(static_cast<std::uint32_t>(entries.size()));
    for (const auto& e : entries) {
        w.put<std::uint16_t>(static_cast<std::uint16_t>(e.name.size()));
        w.put_bytes(e.name.data(), e.name.size());
        w.put<std::uint8_t>(static_cast<std::uint8_t>(e.value.rank()));
        for (auto d : e.value.shape()) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
        w.put_bytes(e.value.data(), e.value.size() * sizeof(float));
    }
    return std::move(w.bytes);
}

Network<float> deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
    Reader r(bytes);
    char magic[4];
    r.get_bytes(magic, 4, "magic");
    if (std::memcmp(magic, kCheckpointMagic, 4) != 0) throw CorruptCheckpoint("corrupt-checkpoint: bad magic", 0);
    const auto version = r.get<std::uint32_t>("version");
    if (version != kCheckpointVersion) {
        throw CorruptCheckpoint("corrupt-checkpoint: unsupported version " + std::to_string(version), 4);
    }
    const auto json_len = r.get<std::uint32_t>("config length");
    const std::size_t json_at = r.pos();
    std::string json(json_len, '\0');
    r.get_bytes(json.data(), json_len, "config JSON");

    NetworkConfig config;
    try {
        config = NetworkConfig::from_json(nlohmann::json::parse(json));
        config.validate();
    } catch (const std::exception& e) {
        throw CorruptCheckpoint(std::string("corrupt-checkpoint: invalid config: ") + e.what(), json_at);
    }
    Network<float> net(config);
    auto& entries = net.params().entries();

    const std::size_t count_at = r.pos();
    const auto count = r.get<std::uint32_t>("tensor count");
    if (count != entries.size()) {
        throw CorruptCheckpoint("corrupt-checkpoint: expected " + std::to_string(entries.size()) + " tensors, found " +
                                    std::to_string(count),
                                count_at);
    }
    for (auto& e : entries) {
        const std::size_t entry_at = r.pos();
        const auto name_len = r.get<std::uint16_t>("name length");
        std::string name(name_len, '\0');
        r.get_bytes(name.data(), name_len, "name");
        if (name != e.name) {
            throw CorruptCheckpoint("corrupt-checkpoint: expected tensor '" + e.name + "', found '" + name + "'",
                                    entry_at);
        }
        const auto rank = r.get<std::uint8_t>("rank");
        Shape shape(rank);
        for (auto& d : shape) d = r.get<std::uint32_t>("dims");
        if (shape != e.value.shape()) {
            throw CorruptCheckpoint("corrupt-checkpoint: tensor '" + name + "' has shape " + shape_to_string(shape) +
                                        ", expected " + shape_to_string(e.value.shape()),
                                    entry_at);
        }
        r.get_bytes(e.value.data(), e.value.size() * sizeof(float), "tensor data");
    }
    if (!r.at_end()) throw CorruptCheckpoint("corrupt-checkpoint: trailing bytes", r.pos());
    return net;
}

void save_checkpoint(const Network<float>& net, const std::filesystem::path& path) {
    const auto bytes = serialize_checkpoint(net);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing checkpoint: " + path.string());
}

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

Network<float> load_checkpoint(const std::filesystem::path& path) { return deserialize_checkpoint(read_file(path)); }

std::string file_hash(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    const std::string_view view(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(view)));
    return buf;
}

}  // namespace rupnet

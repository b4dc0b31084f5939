#include "deskstage/autodiff/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace deskstage::autodiff {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'D', 'S', 'K', 'C', 'K', 'P', 'T', '\0'};

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
    U get() {
        U v;
        take(&v, sizeof(U));
        return v;
    }
    void take(void* out, std::size_t n) {
        if (n > bytes_.size() - pos_) throw AutodiffError("checkpoint truncated");
        std::memcpy(out, bytes_.data() + pos_, n);
        pos_ += n;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

const CheckpointEntry* Checkpoint::find(const std::string& name) const {
    for (const auto& e : entries) {
        if (e.name == name) return &e;
    }
    return nullptr;
}

template <typename T>
CheckpointEntry make_entry(std::string name, Shape shape, std::vector<T> data) {
    if (numel(shape) != data.size()) throw AutodiffError("checkpoint entry " + name + ": size mismatch");
    return {std::move(name), std::move(shape), std::move(data)};
}

template <typename T>
CheckpointEntry make_entry(std::string name, const Tensor<T>& tensor) {
    return make_entry<T>(std::move(name), tensor.shape(),
                         std::vector<T>(tensor.data().begin(), tensor.data().end()));
}

template <typename T>
std::vector<T> entry_values(const CheckpointEntry& entry) {
    const auto* values = std::get_if<std::vector<T>>(&entry.data);
    if (!values) throw AutodiffError("checkpoint entry " + entry.name + " has a different dtype");
    return *values;
}

template <typename T>
void load_entry(const CheckpointEntry& entry, Tensor<T>& tensor) {
    if (entry.shape != tensor.shape()) {
        throw AutodiffError("checkpoint entry " + entry.name + " has shape " + shape_string(entry.shape) +
                            ", expected " + shape_string(tensor.shape()));
    }
    const auto values = entry_values<T>(entry);
    std::copy(values.begin(), values.end(), tensor.mutable_data().begin());
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
    Writer w;
    w.put_bytes(kMagic, sizeof(kMagic));
    w.put<std::uint32_t>(kCheckpointVersion);
    w.put<std::uint64_t>(ckpt.manifest_json.size());
    w.put_bytes(ckpt.manifest_json.data(), ckpt.manifest_json.size());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.entries.size()));
    for (const auto& e : ckpt.entries) {
        w.put<std::uint32_t>(static_cast<std::uint32_t>(e.name.size()));
        w.put_bytes(e.name.data(), e.name.size());
        const bool is_f32 = std::holds_alternative<std::vector<float>>(e.data);
        w.put<std::uint8_t>(is_f32 ? 1 : 2);
        w.put<std::uint8_t>(static_cast<std::uint8_t>(e.shape.size()));
        for (int d : e.shape) w.put<std::int64_t>(d);
        std::visit(
            [&](const auto& values) {
                using V = typename std::decay_t<decltype(values)>::value_type;
                w.put<std::uint64_t>(values.size() * sizeof(V));
                w.put_bytes(values.data(), values.size() * sizeof(V));
            },
            e.data);
    }
    return std::move(w.bytes);
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
    Reader r(bytes);
    char magic[8];
    r.take(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw AutodiffError("not a checkpoint file");
    const auto version = r.get<std::uint32_t>();
    if (version != kCheckpointVersion) {
        throw AutodiffError("unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ckpt;
    const auto manifest_len = r.get<std::uint64_t>();
    if (manifest_len > bytes.size()) throw AutodiffError("checkpoint truncated");
    ckpt.manifest_json.resize(manifest_len);
    r.take(ckpt.manifest_json.data(), manifest_len);
    const auto count = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < count; ++i) {
        CheckpointEntry e;
        const auto name_len = r.get<std::uint32_t>();
        if (name_len > bytes.size()) throw AutodiffError("checkpoint truncated");
        e.name.resize(name_len);
        r.take(e.name.data(), name_len);
        const auto dtype = r.get<std::uint8_t>();
        const auto rank = r.get<std::uint8_t>();
        if (rank > 4) throw AutodiffError("checkpoint entry " + e.name + " has rank > 4");
        for (int d = 0; d < rank; ++d) {
            const auto dim = r.get<std::int64_t>();
            if (dim < 0 || dim > (std::int64_t{1} << 31)) throw AutodiffError("bad dimension in " + e.name);
            e.shape.push_back(static_cast<int>(dim));
        }
        const auto byte_len = r.get<std::uint64_t>();
        const std::size_t n = numel(e.shape);
        if (dtype == 1) {
            if (byte_len != n * sizeof(float)) throw AutodiffError("size mismatch in " + e.name);
            std::vector<float> values(n);
            r.take(values.data(), byte_len);
            e.data = std::move(values);
        } else if (dtype == 2) {
            if (byte_len != n * sizeof(double)) throw AutodiffError("size mismatch in " + e.name);
            std::vector<double> values(n);
            r.take(values.data(), byte_len);
            e.data = std::move(values);
        } else {
            throw AutodiffError("unknown dtype in " + e.name);
        }
        ckpt.entries.push_back(std::move(e));
    }
    if (!r.done()) throw AutodiffError("trailing bytes after checkpoint entries");
    return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    const auto bytes = serialize_checkpoint(ckpt);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw AutodiffError("cannot write checkpoint " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw AutodiffError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw AutodiffError("cannot open checkpoint " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes);
}

template CheckpointEntry make_entry<float>(std::string, Shape, std::vector<float>);
template CheckpointEntry make_entry<double>(std::string, Shape, std::vector<double>);
template CheckpointEntry make_entry<float>(std::string, const Tensor<float>&);
template CheckpointEntry make_entry<double>(std::string, const Tensor<double>&);
template void load_entry<float>(const CheckpointEntry&, Tensor<float>&);
template void load_entry<double>(const CheckpointEntry&, Tensor<double>&);
template std::vector<float> entry_values<float>(const CheckpointEntry&);
template std::vector<double> entry_values<double>(const CheckpointEntry&);

}  // namespace deskstage::autodiff

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "deskstage/autodiff/tensor.hpp"

namespace deskstage::autodiff {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointEntry {
    std::string name;
    Shape shape;
    std::variant<std::vector<float>, std::vector<double>> data;

    bool operator==(const CheckpointEntry&) const = default;
};

/// Named tensors plus a free-form JSON manifest.
struct Checkpoint {
    std::string manifest_json = "{}";
    std::vector<CheckpointEntry> entries;

    const CheckpointEntry* find(const std::string& name) const;
    bool operator==(const Checkpoint&) const = default;
};

template <typename T>
CheckpointEntry make_entry(std::string name, Shape shape, std::vector<T> data);

template <typename T>
CheckpointEntry make_entry(std::string name, const Tensor<T>& tensor);

/// Copies an entry's values into a tensor of the same shape and dtype.
template <typename T>
void load_entry(const CheckpointEntry& entry, Tensor<T>& tensor);

template <typename T>
std::vector<T> entry_values(const CheckpointEntry& entry);

/// Layout: magic "DSKCKPT\0", u32 version, u64 manifest length, manifest
/// bytes, u32 entry count, then per entry: u32 name length, name, u8 dtype
/// (1 = f32, 2 = f64), u8 rank, i64 dims, u64 byte length, raw data. All
/// integers and floats little-endian.
std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace deskstage::autodiff

#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dsgan/tensor.hpp"

namespace dsgan {

struct SgdConfig {
    double learning_rate = 1e-4;
};

enum class SgdDirection { descent, ascent };

// Named parameter tensors with matching gradient buffers. Insertion order
// is the iteration order, so two models built the same way update their
// parameters in the same sequence.
class ParamSet {
public:
    struct Entry {
        std::string name;
        Tensor value;
        Tensor grad;
    };

    Tensor& add(const std::string& name, Tensor value) {
        for (const auto& e : entries_)
            if (e.name == name)
                throw std::invalid_argument("duplicate parameter: " + name);
        Entry e;
        e.name = name;
        e.grad = Tensor(value.shape);
        e.value = std::move(value);
        entries_.push_back(std::move(e));
        return entries_.back().value;
    }

    Entry& entry(const std::string& name) {
        for (auto& e : entries_)
            if (e.name == name) return e;
        throw std::out_of_range("no parameter named " + name);
    }
    const Entry& entry(const std::string& name) const {
        return const_cast<ParamSet*>(this)->entry(name);
    }

    Tensor& value(const std::string& name) { return entry(name).value; }
    Tensor& grad(const std::string& name) { return entry(name).grad; }
    const Tensor& value(const std::string& name) const { return entry(name).value; }

    std::vector<Entry>& entries() { return entries_; }
    const std::vector<Entry>& entries() const { return entries_; }

    void zero_grads() {
        for (auto& e : entries_) e.grad.fill(0.0);
    }

private:
    std::vector<Entry> entries_;
};

// Values-only copy of a ParamSet, used for the per-epoch reload and for
// checkpoint files.
struct ParamSnapshot {
    std::vector<std::pair<std::string, Tensor>> entries;
};

inline ParamSnapshot snapshot(const ParamSet& params) {
    ParamSnapshot snap;
    snap.entries.reserve(params.entries().size());
    for (const auto& e : params.entries())
        snap.entries.emplace_back(e.name, e.value);
    return snap;
}

inline void restore(ParamSet& params, const ParamSnapshot& snap) {
    if (snap.entries.size() != params.entries().size())
        throw std::invalid_argument("restore: parameter count mismatch");
    for (const auto& [name, value] : snap.entries) {
        auto& e = params.entry(name);  // throws on missing name
        if (!e.value.same_shape(value))
            throw std::invalid_argument("restore: shape mismatch for " + name);
        e.value = value;
    }
}

// value <- value -/+ lr * grad, then grads are cleared.
inline void sgd_apply(ParamSet& params, const SgdConfig& cfg, SgdDirection dir) {
    const double step = (dir == SgdDirection::descent ? -cfg.learning_rate
                                                      : cfg.learning_rate);
    for (auto& e : params.entries()) {
        for (std::size_t i = 0; i < e.grad.data.size(); ++i) {
            double g = e.grad.data[i];
            if (!std::isfinite(g))
                throw std::runtime_error("non-finite gradient in parameter " + e.name);
            e.value.data[i] += step * g;
        }
        e.grad.fill(0.0);
    }
}

// ---------------------------------------------------------------------------
// Checkpoint file format: "DSGN" magic, u32 version, u32 entry count, then
// per entry: u32 name length + bytes, u64 rank, u64 dims, raw LE f64 data.
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}
inline void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}
inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}
inline std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}
inline void put_f64(std::ostream& os, double d) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(d));
    std::memcpy(&bits, &d, 8);
    put_u64(os, bits);
}
inline double get_f64(std::istream& is) {
    std::uint64_t bits = get_u64(is);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

}  // namespace detail

inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void save_checkpoint(const ParamSnapshot& snap, std::ostream& os) {
    os.write("DSGN", 4);
    detail::put_u32(os, kCheckpointVersion);
    detail::put_u32(os, static_cast<std::uint32_t>(snap.entries.size()));
    for (const auto& [name, t] : snap.entries) {
        detail::put_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        detail::put_u64(os, t.shape.size());
        for (std::size_t d : t.shape) detail::put_u64(os, d);
        for (double v : t.data) detail::put_f64(os, v);
    }
    if (!os) throw std::runtime_error("checkpoint write failed");
}

inline void save_checkpoint(const ParamSnapshot& snap, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open checkpoint for write: " + path);
    save_checkpoint(snap, os);
}

inline ParamSnapshot load_checkpoint(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::string(magic, 4) != "DSGN")
        throw std::runtime_error("checkpoint: bad magic");
    std::uint32_t version = detail::get_u32(is);
    if (version != kCheckpointVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    std::uint32_t count = detail::get_u32(is);
    ParamSnapshot snap;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint32_t name_len = detail::get_u32(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        std::uint64_t rank = detail::get_u64(is);
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = detail::get_u64(is);
        Tensor t(shape);
        for (auto& v : t.data) v = detail::get_f64(is);
        if (!is) throw std::runtime_error("checkpoint: truncated file");
        snap.entries.emplace_back(std::move(name), std::move(t));
    }
    return snap;
}

inline ParamSnapshot load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
    return load_checkpoint(is);
}

}  // namespace dsgan

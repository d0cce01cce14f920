#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>

#include "data.hpp"
#include "model.hpp"

namespace wslln {

// Checkpoint layout (all integers little-endian u32):
//   magic "WSCP" | version=1 | Dv | Dq | d | h | k | tensor count
//   per tensor: name length | name bytes | rows | cols | rows*cols f64 LE
// Tensors appear in ModelParams::tensors() order, so identical parameters
// always serialize to identical bytes.

namespace detail {

inline void put_f64(std::string& out, double v) {
    uint64_t u;
    std::memcpy(&u, &v, 8);
    for (int i = 0; i < 8; ++i) out.push_back(char(u >> (8 * i)));
}

inline double get_f64(const unsigned char* p) {
    uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= uint64_t(p[i]) << (8 * i);
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}

}  // namespace detail

inline void save_checkpoint(ModelParams& params, int k, const fs::path& path) {
    std::string bytes = "WSCP";
    detail::put_u32(bytes, 1);
    detail::put_u32(bytes, uint32_t(params.Dv));
    detail::put_u32(bytes, uint32_t(params.Dq));
    detail::put_u32(bytes, uint32_t(params.d));
    detail::put_u32(bytes, uint32_t(params.h));
    detail::put_u32(bytes, uint32_t(k));
    auto tensors = params.tensors();
    detail::put_u32(bytes, uint32_t(tensors.size()));
    for (auto& [name, m] : tensors) {
        detail::put_u32(bytes, uint32_t(name.size()));
        bytes += name;
        detail::put_u32(bytes, uint32_t(m->rows));
        detail::put_u32(bytes, uint32_t(m->cols));
        for (double v : m->a) detail::put_f64(bytes, v);
    }
    detail::write_file(path, bytes);
}

struct Checkpoint {
    ModelParams params;
    int k = 0;
};

inline Checkpoint load_checkpoint(const fs::path& path) {
    std::string bytes = detail::read_file(path);
    if (bytes.size() < 32 || bytes.compare(0, 4, "WSCP") != 0)
        throw std::runtime_error(path.string() + ": bad magic, not a checkpoint");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    size_t off = 4;
    auto u32 = [&]() {
        if (off + 4 > bytes.size()) throw std::runtime_error(path.string() + ": truncated");
        uint32_t v = detail::get_u32(p + off);
        off += 4;
        return v;
    };
    uint32_t version = u32();
    if (version != 1)
        throw std::runtime_error(path.string() + ": unsupported version " + std::to_string(version));
    uint32_t Dv = u32(), Dq = u32(), d = u32(), h = u32();
    Checkpoint ck;
    ck.k = int(u32());
    ck.params = init_params(0, Dv, Dq, d, h);  // shapes only; values overwritten below
    uint32_t count = u32();
    auto tensors = ck.params.tensors();
    if (count != tensors.size())
        throw std::runtime_error(path.string() + ": expected " + std::to_string(tensors.size()) +
                                 " tensors, found " + std::to_string(count));
    for (auto& [name, m] : tensors) {
        uint32_t len = u32();
        if (off + len > bytes.size()) throw std::runtime_error(path.string() + ": truncated");
        std::string got(bytes, off, len);
        off += len;
        if (got != name)
            throw std::runtime_error(path.string() + ": tensor order mismatch, expected " + name +
                                     ", found " + got);
        uint32_t rows = u32(), cols = u32();
        if (rows != m->rows || cols != m->cols)
            throw std::runtime_error(path.string() + ": tensor " + name + " has shape " +
                                     std::to_string(rows) + "x" + std::to_string(cols));
        if (off + 8 * size_t(rows) * cols > bytes.size())
            throw std::runtime_error(path.string() + ": truncated");
        for (size_t i = 0; i < m->size(); ++i) {
            m->a[i] = detail::get_f64(p + off);
            off += 8;
        }
    }
    return ck;
}

}  // namespace wslln

#pragma once

// VEMB v1: binary interchange format for sampled-frame embeddings.
//
//   "VEMB" | u32 version | u32 samples | u32 dim | f64 input_fps | f64 sample_fps |
//   u64 total_frames | samples x u64 sample index (1-based) | samples*dim x f32 row-major
//
// Everything is little-endian. The format carries no video id or frame geometry;
// readers take the id from the caller and leave width/height/channels at 1.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "errors.hpp"
#include "types.hpp"

namespace vsumm::vemb {

inline constexpr std::array<char, 4> kMagic{'V', 'E', 'M', 'B'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::size_t kHeaderBytes = 4 + 4 + 4 + 4 + 8 + 8 + 8;

namespace detail {

template <typename U>
void put_le(std::ostream& out, U value) {
    std::array<char, sizeof(U)> bytes{};
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
    out.write(bytes.data(), bytes.size());
}

template <typename U>
U get_le(std::istream& in, const char* what) {
    std::array<unsigned char, sizeof(U)> bytes{};
    in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
    if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
        throw IoError(std::string("VEMB truncated while reading ") + what);
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
    return value;
}

}  // namespace detail

/// Writes the canonical encoding. Returns the number of bytes written.
inline std::size_t write(const EmbeddingSet& set, std::ostream& out) {
    for (Index r = 0; r < set.embeddings.rows(); ++r)
        for (Index c = 0; c < set.embeddings.cols(); ++c) {
            const double v = set.embeddings(r, c);
            if (!std::isfinite(v) || std::abs(v) > std::numeric_limits<float>::max())
                throw ValidationError("VEMB write: non-finite entry at row " + std::to_string(r + 1) + ", column " +
                                      std::to_string(c + 1));
        }
    validate(set);
    if (set.samples() > std::numeric_limits<std::uint32_t>::max() ||
        set.dim() > std::numeric_limits<std::uint32_t>::max())
        throw ValidationError("VEMB write: matrix too large for a u32 header");

    out.write(kMagic.data(), kMagic.size());
    detail::put_le<std::uint32_t>(out, kVersion);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(set.samples()));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(set.dim()));
    detail::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(set.meta.input_fps));
    detail::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(set.sample_fps));
    detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(set.meta.total_frames));
    for (Index t : set.sample_indexes) detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(t));
    for (Index r = 0; r < set.embeddings.rows(); ++r)
        for (Index c = 0; c < set.embeddings.cols(); ++c)
            detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(set.embeddings(r, c))));
    if (!out) throw IoError("VEMB write: output stream failed");
    return kHeaderBytes + 8 * static_cast<std::size_t>(set.samples()) +
           4 * static_cast<std::size_t>(set.samples() * set.dim());
}

inline EmbeddingSet read(std::istream& in, const std::string& video_id = {}) {
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    if (in.gcount() != 4) throw IoError("VEMB truncated while reading magic");
    if (magic != kMagic) throw ValidationError("VEMB bad magic");
    const auto version = detail::get_le<std::uint32_t>(in, "version");
    if (version != kVersion) throw ValidationError("VEMB version mismatch: got " + std::to_string(version));
    const auto samples = detail::get_le<std::uint32_t>(in, "sample count");
    const auto dim = detail::get_le<std::uint32_t>(in, "dimension");
    EmbeddingSet set;
    set.meta.video_id = video_id;
    set.meta.input_fps = std::bit_cast<double>(detail::get_le<std::uint64_t>(in, "input fps"));
    set.sample_fps = std::bit_cast<double>(detail::get_le<std::uint64_t>(in, "sample fps"));
    const auto total = detail::get_le<std::uint64_t>(in, "total frames");
    if (total > static_cast<std::uint64_t>(std::numeric_limits<Index>::max()))
        throw ValidationError("VEMB total frame count out of range");
    set.meta.total_frames = static_cast<Index>(total);
    if (samples == 0) throw ValidationError("VEMB has no samples");
    if (dim == 0) throw ValidationError("VEMB has zero dimension");

    set.sample_indexes.resize(samples);
    for (std::uint32_t i = 0; i < samples; ++i) {
        const auto t = detail::get_le<std::uint64_t>(in, "sample indexes");
        if (t > total) throw ValidationError("VEMB sample index " + std::to_string(t) + " beyond total frames");
        set.sample_indexes[i] = static_cast<Index>(t);
        if (i > 0 && set.sample_indexes[i] <= set.sample_indexes[i - 1])
            throw ValidationError("VEMB sample indexes non-increasing at position " + std::to_string(i + 1));
    }
    set.embeddings.resize(samples, dim);
    for (std::uint32_t r = 0; r < samples; ++r)
        for (std::uint32_t c = 0; c < dim; ++c)
            set.embeddings(r, c) = std::bit_cast<float>(detail::get_le<std::uint32_t>(in, "embedding payload"));
    validate(set);
    return set;
}

inline std::size_t write_file(const EmbeddingSet& set, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    return write(set, out);
}

inline EmbeddingSet read_file(const std::string& path, const std::string& video_id = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return read(in, video_id);
}

}  // namespace vsumm::vemb

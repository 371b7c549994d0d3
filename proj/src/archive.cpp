#include "fpd/archive.hpp"

#include <cstring>
#include <fstream>

#include "fpd/error.hpp"
#include "fpd/fsutil.hpp"

namespace fpd {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
}

class Reader {
public:
    Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) raise(ErrorCategory::Io, "cannot open archive " + path.string());
    }

    bool at_end() {
        in_.peek();
        return in_.eof();
    }

    std::uint32_t u32() {
        unsigned char b[4];
        read(b, 4);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }

    std::uint64_t u64() {
        unsigned char b[8];
        read(b, 8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }

    float f32() {
        std::uint32_t bits = u32();
        float f;
        std::memcpy(&f, &bits, 4);
        return f;
    }

    std::string bytes(std::size_t n) {
        std::string s(n, '\0');
        read(s.data(), n);
        return s;
    }

private:
    void read(void* dst, std::size_t n) {
        in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n)
            raise(ErrorCategory::Parse, "truncated archive " + path_.string());
    }

    std::filesystem::path path_;
    std::ifstream in_;
};

}  // namespace

void write_archive(const std::filesystem::path& path, const std::vector<NamedTensor>& entries) {
    std::string buf;
    for (const auto& e : entries) {
        if (e.numel() != e.data.size())
            raise(ErrorCategory::Shape, "archive entry '" + e.name + "': dims do not match payload");
        put_u32(buf, static_cast<std::uint32_t>(e.name.size()));
        buf.append(e.name);
        put_u32(buf, static_cast<std::uint32_t>(e.dims.size()));
        for (auto d : e.dims) put_u64(buf, d);
        for (float f : e.data) put_f32(buf, f);
    }
    ensure_parent_dir(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorCategory::Io, "cannot write archive " + path.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) raise(ErrorCategory::Io, "short write on archive " + path.string());
}

std::vector<NamedTensor> read_archive(const std::filesystem::path& path) {
    Reader r(path);
    std::vector<NamedTensor> entries;
    while (!r.at_end()) {
        NamedTensor e;
        std::uint32_t name_len = r.u32();
        e.name = r.bytes(name_len);
        std::uint32_t rank = r.u32();
        e.dims.resize(rank);
        for (auto& d : e.dims) d = r.u64();
        std::size_t n = e.numel();
        e.data.resize(n);
        for (auto& f : e.data) f = r.f32();
        entries.push_back(std::move(e));
    }
    return entries;
}

}  // namespace fpd

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <type_traits>

#include "error.hpp"

namespace hopir::binary {

// Little-endian, length-prefixed primitives shared by the on-disk formats.

class Writer {
  public:
    void u32(std::uint32_t v) { put(v); }
    void u64(std::uint64_t v) { put(v); }
    void f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
    void str(std::string_view s)
    {
        u64(s.size());
        buf_.append(s);
    }
    void raw(std::string_view s) { buf_.append(s); }

    [[nodiscard]] const std::string& bytes() const noexcept { return buf_; }

  private:
    template <typename T>
    void put(T v)
    {
        static_assert(std::is_unsigned_v<T>);
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
        }
    }

    std::string buf_;
};

class Reader {
  public:
    explicit Reader(std::string_view data) : data_(data) {}

    std::uint32_t u32() { return get<std::uint32_t>(); }
    std::uint64_t u64() { return get<std::uint64_t>(); }
    double f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
    std::string str()
    {
        auto n = u64();
        need(n);
        std::string s(data_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    std::string raw(std::size_t n)
    {
        need(n);
        std::string s(data_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    [[nodiscard]] bool at_end() const noexcept { return pos_ == data_.size(); }

  private:
    void need(std::uint64_t n) const
    {
        if (n > data_.size() - pos_) {
            throw DataError("truncated binary file");
        }
    }

    template <typename T>
    T get()
    {
        need(sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            v |= static_cast<T>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        }
        pos_ += sizeof(T);
        return v;
    }

    std::string_view data_;
    std::size_t pos_ = 0;
};

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path);
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, std::string_view bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write " + path);
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace hopir::binary

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "elreg/affine.hpp"
#include "elreg/field.hpp"
#include "elreg/image.hpp"

namespace elreg {

namespace detail {

// Reads the next PGM header token, skipping whitespace and '#' comments.
inline std::string pnm_token(std::istream& in) {
    std::string tok;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    while (c != EOF && !std::isspace(c)) {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    }
    return tok;
}

inline int parse_pnm_int(std::istream& in, const char* what) {
    const std::string tok = pnm_token(in);
    try {
        size_t pos = 0;
        const int v = std::stoi(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        raise(ErrorKind::IoError, std::string("PGM header: bad ") + what);
    }
}

inline void write_u32_le(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline uint32_t read_u32_le(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

inline void write_f64_le(std::ostream& out, double v) {
    uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

inline double read_f64_le(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

} // namespace detail

/// Binary PGM (P5) reader; accepts 8-bit and 16-bit (big-endian) samples.
inline ImageGrid read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::IoError, "cannot open " + path);

    if (detail::pnm_token(in) != "P5")
        raise(ErrorKind::IoError, path + ": not a binary PGM (P5)");
    const int w = detail::parse_pnm_int(in, "width");
    const int h = detail::parse_pnm_int(in, "height");
    const int maxval = detail::parse_pnm_int(in, "maxval");
    if (w < 1 || h < 1 || maxval < 1 || maxval > 65535)
        raise(ErrorKind::IoError, path + ": bad PGM header");
    // single whitespace byte separates header from raster; pnm_token consumed it

    const size_t n = static_cast<size_t>(w) * h;
    std::vector<double> data(n);
    if (maxval < 256) {
        std::vector<unsigned char> buf(n);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
        if (!in) raise(ErrorKind::IoError, path + ": truncated raster");
        for (size_t i = 0; i < n; ++i) data[i] = buf[i];
    } else {
        std::vector<unsigned char> buf(2 * n);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(2 * n));
        if (!in) raise(ErrorKind::IoError, path + ": truncated raster");
        for (size_t i = 0; i < n; ++i)
            data[i] = static_cast<double>((static_cast<unsigned>(buf[2 * i]) << 8) |
                                          buf[2 * i + 1]);
    }
    return ImageGrid(w, h, std::move(data));
}

/// Binary PGM (P5) writer. Values are rounded and clamped to [0, maxval];
/// maxval > 255 selects 16-bit big-endian samples.
inline void write_pgm(const std::string& path, const ImageGrid& img, int maxval = 255) {
    if (maxval < 1 || maxval > 65535)
        raise(ErrorKind::InvalidParams, "write_pgm: maxval out of range");
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorKind::IoError, "cannot write " + path);

    out << "P5\n" << img.width() << " " << img.height() << "\n" << maxval << "\n";
    const size_t n = img.pixel_count();
    if (maxval < 256) {
        std::vector<unsigned char> buf(n);
        for (size_t i = 0; i < n; ++i) {
            const long v = std::lround(img.data()[i]);
            buf[i] = static_cast<unsigned char>(std::clamp<long>(v, 0, maxval));
        }
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(n));
    } else {
        std::vector<unsigned char> buf(2 * n);
        for (size_t i = 0; i < n; ++i) {
            const long v = std::clamp<long>(std::lround(img.data()[i]), 0, maxval);
            buf[2 * i] = static_cast<unsigned char>((v >> 8) & 0xff);
            buf[2 * i + 1] = static_cast<unsigned char>(v & 0xff);
        }
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(2 * n));
    }
    if (!out) raise(ErrorKind::IoError, "short write to " + path);
}

/// Raw float container: magic "ELRG", u32-le width, u32-le height, then
/// width*height f64-le intensities, row-major. Lossless for double data.
inline void write_elrg(const std::string& path, const ImageGrid& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorKind::IoError, "cannot write " + path);
    out.write("ELRG", 4);
    detail::write_u32_le(out, static_cast<uint32_t>(img.width()));
    detail::write_u32_le(out, static_cast<uint32_t>(img.height()));
    for (double v : img.data()) detail::write_f64_le(out, v);
    if (!out) raise(ErrorKind::IoError, "short write to " + path);
}

inline ImageGrid read_elrg(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::IoError, "cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "ELRG")
        raise(ErrorKind::IoError, path + ": bad ELRG magic");
    const uint32_t w = detail::read_u32_le(in);
    const uint32_t h = detail::read_u32_le(in);
    if (!in || w < 1 || h < 1 || w > (1u << 20) || h > (1u << 20))
        raise(ErrorKind::IoError, path + ": bad ELRG header");
    std::vector<double> data(static_cast<size_t>(w) * h);
    for (double& v : data) v = detail::read_f64_le(in);
    if (!in) raise(ErrorKind::IoError, path + ": truncated ELRG data");
    return ImageGrid(static_cast<int>(w), static_cast<int>(h), std::move(data));
}

/// Deformation field container: magic "ELDF", u32-le width/height, then two
/// interleaved f64-le channels (ux, uy) per pixel, row-major.
inline void write_eldf(const std::string& path, const DeformationField& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorKind::IoError, "cannot write " + path);
    out.write("ELDF", 4);
    detail::write_u32_le(out, static_cast<uint32_t>(f.width()));
    detail::write_u32_le(out, static_cast<uint32_t>(f.height()));
    for (double v : f.data()) detail::write_f64_le(out, v);
    if (!out) raise(ErrorKind::IoError, "short write to " + path);
}

inline DeformationField read_eldf(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::IoError, "cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "ELDF")
        raise(ErrorKind::IoError, path + ": bad ELDF magic");
    const uint32_t w = detail::read_u32_le(in);
    const uint32_t h = detail::read_u32_le(in);
    if (!in || w < 1 || h < 1 || w > (1u << 20) || h > (1u << 20))
        raise(ErrorKind::IoError, path + ": bad ELDF header");
    std::vector<double> data(static_cast<size_t>(w) * h * 2);
    for (double& v : data) v = detail::read_f64_le(in);
    if (!in) raise(ErrorKind::IoError, path + ": truncated ELDF data");
    return DeformationField(static_cast<int>(w), static_cast<int>(h), std::move(data));
}

/// Plain-text transform file: a1..a6 on one line, whitespace-separated.
inline void write_affine_text(const std::string& path, const AffineParams& a) {
    std::ofstream out(path);
    if (!out) raise(ErrorKind::IoError, "cannot write " + path);
    out.precision(17);
    out << a.a1 << " " << a.a2 << " " << a.a3 << " " << a.a4 << " " << a.a5 << " "
        << a.a6 << "\n";
    if (!out) raise(ErrorKind::IoError, "short write to " + path);
}

inline AffineParams read_affine_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::IoError, "cannot open " + path);
    Vec6 v{};
    for (double& x : v)
        if (!(in >> x)) raise(ErrorKind::IoError, path + ": expected six parameters");
    return AffineParams::from_vec(v);
}

inline bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// Dispatch by extension: .pgm reads P5, .elrg reads the raw container.
inline ImageGrid read_image(const std::string& path) {
    if (has_suffix(path, ".elrg")) return read_elrg(path);
    return read_pgm(path);
}

inline void write_image(const std::string& path, const ImageGrid& img, int pgm_maxval = 255) {
    if (has_suffix(path, ".elrg"))
        write_elrg(path, img);
    else
        write_pgm(path, img, pgm_maxval);
}

} // namespace elreg

#pragma once

// MetaImage (.mha) reader/writer for the subset used by the pipeline:
// single-file, uncompressed, little-endian, identity orientation, 3D,
// MET_SHORT / MET_UCHAR / MET_FLOAT.

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>

#include "cac/volume.hpp"

namespace cac {

template <class T>
struct MetaElementType;
template <>
struct MetaElementType<std::int16_t> {
    static constexpr std::string_view name = "MET_SHORT";
};
template <>
struct MetaElementType<std::uint8_t> {
    static constexpr std::string_view name = "MET_UCHAR";
};
template <>
struct MetaElementType<float> {
    static constexpr std::string_view name = "MET_FLOAT";
};

using AnyVolume = std::variant<Volume<std::int16_t>, Volume<std::uint8_t>, Volume<float>>;

namespace metaimage_detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

/// Shortest round-trip decimal form.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::vector<double> parse_numbers(const std::string& key, const std::string& value, std::size_t expected) {
    std::vector<double> out;
    std::istringstream is(value);
    std::string tok;
    while (is >> tok) {
        double d = 0.0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), d);
        if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
            throw ParseError(ParseError::Kind::InvalidValue, key, "MetaImage key " + key + ": invalid number '" + tok + "'");
        }
        out.push_back(d);
    }
    if (out.size() != expected) {
        throw ParseError(ParseError::Kind::InvalidValue, key,
                         "MetaImage key " + key + ": expected " + std::to_string(expected) + " values");
    }
    return out;
}

inline bool is_true(const std::string& v) { return v == "True" || v == "true" || v == "TRUE" || v == "1"; }

template <class T>
void to_little_endian_inplace(std::vector<T>& data) {
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        for (auto& v : data) {
            auto* p = reinterpret_cast<unsigned char*>(&v);
            std::reverse(p, p + sizeof(T));
        }
    }
}

template <class T>
Volume<T> read_payload(std::istream& in, const Grid3& grid) {
    std::vector<T> data(grid.voxel_count());
    const auto want = static_cast<std::streamsize>(data.size() * sizeof(T));
    in.read(reinterpret_cast<char*>(data.data()), want);
    const std::streamsize got = in.gcount();
    if (got != want) {
        throw ParseError(ParseError::Kind::DataLength, "DimSize",
                         "MetaImage data length mismatch: DimSize requires " + std::to_string(want) +
                             " bytes, payload has " + std::to_string(got));
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw ParseError(ParseError::Kind::DataLength, "DimSize",
                         "MetaImage data length mismatch: payload longer than DimSize requires");
    }
    to_little_endian_inplace(data);
    return Volume<T>(grid, std::move(data));
}

}  // namespace metaimage_detail

/// Reads a MetaImage file. Header key order is irrelevant; the payload starts
/// right after the ElementDataFile line.
inline AnyVolume read_metaimage(const std::string& path) {
    using metaimage_detail::trim;
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError(ParseError::Kind::Io, "", "cannot open MetaImage file: " + path);
    }

    std::map<std::string, std::string> header;
    std::string line;
    bool data_key_seen = false;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (trim(line).empty()) {
                continue;
            }
            throw ParseError(ParseError::Kind::InvalidValue, trim(line), "malformed MetaImage header line: " + line);
        }
        std::string key = trim(std::string_view(line).substr(0, eq));
        std::string value = trim(std::string_view(line).substr(eq + 1));
        header[key] = value;
        if (key == "ElementDataFile") {
            data_key_seen = true;
            break;
        }
    }

    auto require = [&](const std::string& key) -> const std::string& {
        const auto it = header.find(key);
        if (it == header.end()) {
            throw ParseError(ParseError::Kind::MissingKey, key, "MetaImage header is missing mandatory key " + key);
        }
        return it->second;
    };

    if (require("ObjectType") != "Image") {
        throw ParseError(ParseError::Kind::UnsupportedValue, "ObjectType", "MetaImage ObjectType must be Image");
    }
    if (require("NDims") != "3") {
        throw ParseError(ParseError::Kind::UnsupportedValue, "NDims", "MetaImage NDims must be 3");
    }
    const auto dim = metaimage_detail::parse_numbers("DimSize", require("DimSize"), 3);
    const auto spacing = metaimage_detail::parse_numbers("ElementSpacing", require("ElementSpacing"), 3);
    const auto offset = metaimage_detail::parse_numbers("Offset", require("Offset"), 3);
    const std::string element_type = require("ElementType");
    if (!data_key_seen) {
        require("ElementDataFile");
    }
    if (header["ElementDataFile"] != "LOCAL") {
        throw ParseError(ParseError::Kind::UnsupportedValue, "ElementDataFile",
                         "only ElementDataFile = LOCAL is supported");
    }
    if (auto it = header.find("BinaryData"); it != header.end() && !metaimage_detail::is_true(it->second)) {
        throw ParseError(ParseError::Kind::UnsupportedValue, "BinaryData", "ASCII MetaImage payloads are not supported");
    }
    for (const char* key : {"BinaryDataByteOrderMSB", "ElementByteOrderMSB"}) {
        if (auto it = header.find(key); it != header.end() && metaimage_detail::is_true(it->second)) {
            throw ParseError(ParseError::Kind::UnsupportedValue, key, "big-endian MetaImage payloads are not supported");
        }
    }
    if (auto it = header.find("CompressedData"); it != header.end() && metaimage_detail::is_true(it->second)) {
        throw ParseError(ParseError::Kind::UnsupportedValue, "CompressedData", "compressed MetaImage payloads are not supported");
    }
    if (auto it = header.find("ElementNumberOfChannels"); it != header.end() && it->second != "1") {
        throw ParseError(ParseError::Kind::UnsupportedValue, "ElementNumberOfChannels",
                         "multi-channel MetaImage files are not supported");
    }
    for (const char* key : {"TransformMatrix", "Orientation", "Rotation"}) {
        if (auto it = header.find(key); it != header.end()) {
            const auto m = metaimage_detail::parse_numbers(key, it->second, 9);
            const std::array<double, 9> identity{1, 0, 0, 0, 1, 0, 0, 0, 1};
            for (int k = 0; k < 9; ++k) {
                if (std::abs(m[static_cast<std::size_t>(k)] - identity[static_cast<std::size_t>(k)]) > 1e-9) {
                    throw ParseError(ParseError::Kind::UnsupportedValue, key,
                                     std::string("non-identity ") + key + " is not supported");
                }
            }
        }
    }

    Index3 dims;
    for (int a = 0; a < 3; ++a) {
        const double d = dim[static_cast<std::size_t>(a)];
        if (d < 1 || d != std::floor(d) || d > std::numeric_limits<int>::max()) {
            throw ParseError(ParseError::Kind::InvalidValue, "DimSize", "MetaImage DimSize must be positive integers");
        }
        dims[a] = static_cast<int>(d);
    }
    Vec3 sp{spacing[0], spacing[1], spacing[2]};
    if (!(sp.x > 0 && sp.y > 0 && sp.z > 0)) {
        throw ParseError(ParseError::Kind::InvalidValue, "ElementSpacing", "MetaImage ElementSpacing must be > 0");
    }
    const Grid3 grid(dims, sp, {offset[0], offset[1], offset[2]});

    if (element_type == MetaElementType<std::int16_t>::name) {
        return metaimage_detail::read_payload<std::int16_t>(in, grid);
    }
    if (element_type == MetaElementType<std::uint8_t>::name) {
        return metaimage_detail::read_payload<std::uint8_t>(in, grid);
    }
    if (element_type == MetaElementType<float>::name) {
        return metaimage_detail::read_payload<float>(in, grid);
    }
    throw ParseError(ParseError::Kind::UnsupportedValue, "ElementType", "unsupported MetaImage ElementType " + element_type);
}

/// Reads a MetaImage file and requires a specific element type.
template <class T>
Volume<T> read_metaimage_as(const std::string& path) {
    AnyVolume any = read_metaimage(path);
    if (auto* v = std::get_if<Volume<T>>(&any)) {
        return std::move(*v);
    }
    throw ParseError(ParseError::Kind::UnsupportedValue, "ElementType",
                     path + ": expected ElementType " + std::string(MetaElementType<T>::name));
}

/// Header text (including the trailing newline after ElementDataFile).
template <class T>
std::string metaimage_header(const Grid3& g) {
    using metaimage_detail::format_double;
    std::ostringstream os;
    os << "ObjectType = Image\n"
       << "NDims = 3\n"
       << "BinaryData = True\n"
       << "BinaryDataByteOrderMSB = False\n"
       << "Offset = " << format_double(g.origin().x) << ' ' << format_double(g.origin().y) << ' '
       << format_double(g.origin().z) << '\n'
       << "ElementSpacing = " << format_double(g.spacing().x) << ' ' << format_double(g.spacing().y) << ' '
       << format_double(g.spacing().z) << '\n'
       << "DimSize = " << g.dims().x << ' ' << g.dims().y << ' ' << g.dims().z << '\n'
       << "ElementType = " << MetaElementType<T>::name << '\n'
       << "ElementDataFile = LOCAL\n";
    return os.str();
}

template <class T>
void write_metaimage(const Volume<T>& vol, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ParseError(ParseError::Kind::Io, "", "cannot open for writing: " + path);
    }
    const std::string header = metaimage_header<T>(vol.grid());
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    if constexpr (std::endian::native == std::endian::little || sizeof(T) == 1) {
        out.write(reinterpret_cast<const char*>(vol.storage().data()),
                  static_cast<std::streamsize>(vol.size() * sizeof(T)));
    } else {
        std::vector<T> copy = vol.storage();
        metaimage_detail::to_little_endian_inplace(copy);
        out.write(reinterpret_cast<const char*>(copy.data()), static_cast<std::streamsize>(copy.size() * sizeof(T)));
    }
    if (!out) {
        throw ParseError(ParseError::Kind::Io, "", "write failed: " + path);
    }
}

inline void write_metaimage(const AnyVolume& vol, const std::string& path) {
    std::visit([&](const auto& v) { write_metaimage(v, path); }, vol);
}

}  // namespace cac

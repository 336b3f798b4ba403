#include "spinenav/stl_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_map>

#include "spinenav/errors.hpp"

namespace spinenav {

namespace {

constexpr std::size_t kBinaryHeaderSize = 80;
constexpr std::size_t kBinaryRecordSize = 50;

std::uint32_t read_u32_le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

float read_f32_le(const std::uint8_t* p) {
    return std::bit_cast<float>(read_u32_le(p));
}

void append_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

void append_f32_le(std::vector<std::uint8_t>& out, float v) {
    append_u32_le(out, std::bit_cast<std::uint32_t>(v));
}

// Corner position key: the exact float32 bit patterns.
struct VertexKey {
    std::array<std::uint32_t, 3> bits;
    bool operator==(const VertexKey&) const = default;
};

struct VertexKeyHash {
    std::size_t operator()(const VertexKey& k) const {
        std::uint64_t h = 0x9e3779b97f4a7c15ull;
        for (std::uint32_t b : k.bits) {
            h ^= b + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        }
        return static_cast<std::size_t>(h);
    }
};

class MeshBuilder {
public:
    std::uint32_t add_vertex(float x, float y, float z) {
        const VertexKey key{{std::bit_cast<std::uint32_t>(x),
                             std::bit_cast<std::uint32_t>(y),
                             std::bit_cast<std::uint32_t>(z)}};
        auto [it, inserted] = index_.try_emplace(key, static_cast<std::uint32_t>(mesh_.vertices.size()));
        if (inserted) {
            mesh_.vertices.push_back(Vec3{x, y, z});
        }
        return it->second;
    }

    void add_face(std::uint32_t a, std::uint32_t b, std::uint32_t c, std::size_t offset) {
        if (a == b && b == c) {
            throw ParseError("degenerate STL triangle (all corners at one position) at byte offset " +
                             std::to_string(offset));
        }
        mesh_.faces.push_back({a, b, c});
    }

    TriangleMesh take() { return std::move(mesh_); }

private:
    TriangleMesh mesh_;
    std::unordered_map<VertexKey, std::uint32_t, VertexKeyHash> index_;
};

TriangleMesh parse_binary(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kBinaryHeaderSize + 4) {
        throw ParseError("truncated binary STL header: got " + std::to_string(bytes.size()) +
                         " bytes, need at least 84");
    }
    const std::uint32_t declared = read_u32_le(bytes.data() + kBinaryHeaderSize);
    const std::size_t expected = kBinaryHeaderSize + 4 +
                                 static_cast<std::size_t>(declared) * kBinaryRecordSize;
    if (bytes.size() < expected) {
        const std::size_t body = bytes.size() - kBinaryHeaderSize - 4;
        const std::size_t offset = kBinaryHeaderSize + 4 + (body / kBinaryRecordSize) * kBinaryRecordSize;
        throw ParseError("truncated binary STL record at byte offset " + std::to_string(offset) +
                         ": header declares " + std::to_string(declared) + " triangles");
    }
    if (bytes.size() > expected) {
        throw ParseError("binary STL triangle count mismatch: header declares " +
                         std::to_string(declared) + " triangles (" + std::to_string(expected) +
                         " bytes) but input has " + std::to_string(bytes.size()) + " bytes");
    }

    MeshBuilder builder;
    std::size_t offset = kBinaryHeaderSize + 4;
    for (std::uint32_t t = 0; t < declared; ++t, offset += kBinaryRecordSize) {
        const std::uint8_t* rec = bytes.data() + offset;
        // 12 bytes of stored normal skipped; normals are recomputed on write.
        std::array<std::uint32_t, 3> idx{};
        for (int c = 0; c < 3; ++c) {
            const std::uint8_t* v = rec + 12 + 12 * c;
            idx[c] = builder.add_vertex(read_f32_le(v), read_f32_le(v + 4), read_f32_le(v + 8));
        }
        builder.add_face(idx[0], idx[1], idx[2], offset);
    }
    return builder.take();
}

class AsciiTokenizer {
public:
    explicit AsciiTokenizer(std::span<const std::uint8_t> bytes)
        : text_(reinterpret_cast<const char*>(bytes.data()), bytes.size()) {}

    // Returns an empty view at end of input.
    std::string_view next() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
        token_offset_ = pos_;
        const std::size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
        return text_.substr(start, pos_ - start);
    }

    std::string_view expect(std::string_view keyword) {
        const std::string_view tok = next();
        if (tok != keyword) {
            throw ParseError("ASCII STL: expected \"" + std::string(keyword) + "\" but found \"" +
                             std::string(tok) + "\" at byte offset " + std::to_string(token_offset_));
        }
        return tok;
    }

    float expect_float() {
        const std::string_view tok = next();
        float value = 0.0f;
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (ec != std::errc() || ptr != tok.data() + tok.size()) {
            throw ParseError("ASCII STL: expected a number but found \"" + std::string(tok) +
                             "\" at byte offset " + std::to_string(token_offset_));
        }
        return value;
    }

    std::size_t token_offset() const { return token_offset_; }
    void skip_rest_of_line() {
        while (pos_ < text_.size() && text_[pos_] != '\n') {
            ++pos_;
        }
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t token_offset_ = 0;
};

TriangleMesh parse_ascii(std::span<const std::uint8_t> bytes) {
    AsciiTokenizer tok(bytes);
    tok.expect("solid");
    tok.skip_rest_of_line(); // solid name, may be empty or contain spaces

    MeshBuilder builder;
    for (;;) {
        const std::string_view word = tok.next();
        if (word == "endsolid" || word.empty()) {
            break;
        }
        if (word != "facet") {
            throw ParseError("ASCII STL: expected \"facet\" or \"endsolid\" but found \"" +
                             std::string(word) + "\" at byte offset " +
                             std::to_string(tok.token_offset()));
        }
        const std::size_t facet_offset = tok.token_offset();
        tok.expect("normal");
        tok.expect_float();
        tok.expect_float();
        tok.expect_float();
        tok.expect("outer");
        tok.expect("loop");
        std::array<std::uint32_t, 3> idx{};
        for (int c = 0; c < 3; ++c) {
            tok.expect("vertex");
            const float x = tok.expect_float();
            const float y = tok.expect_float();
            const float z = tok.expect_float();
            idx[c] = builder.add_vertex(x, y, z);
        }
        tok.expect("endloop");
        tok.expect("endfacet");
        builder.add_face(idx[0], idx[1], idx[2], facet_offset);
    }
    return builder.take();
}

bool contains_token(std::string_view text, std::string_view token) {
    return text.find(token) != std::string_view::npos;
}

void format_f32(std::string& out, float v) {
    // 9 significant digits reproduce any float32 exactly on reparse.
    std::array<char, 48> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                   std::chars_format::general, 9);
    out.append(buf.data(), res.ptr);
}

Vec3 face_normal(const TriangleMesh& mesh, std::size_t f) {
    const Vec3& a = mesh.vertices[mesh.faces[f][0]];
    const Vec3& b = mesh.vertices[mesh.faces[f][1]];
    const Vec3& c = mesh.vertices[mesh.faces[f][2]];
    const Vec3 n = (b - a).cross(c - a);
    const double len = n.norm();
    if (!(len > 0.0)) {
        return {0.0, 0.0, 0.0};
    }
    return n / len;
}

} // namespace

TriangleMesh parse_stl(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) {
        throw ParseError("empty STL input");
    }
    const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    const bool ascii = text.starts_with("solid") &&
                       (contains_token(text, "facet") || contains_token(text, "endsolid"));
    TriangleMesh mesh = ascii ? parse_ascii(bytes) : parse_binary(bytes);
    try {
        validate_mesh(mesh);
    } catch (const ConfigError& e) {
        throw ParseError(std::string("STL content violates mesh invariants: ") + e.what());
    }
    return mesh;
}

std::vector<std::uint8_t> write_stl(const TriangleMesh& mesh, StlFormat format) {
    validate_mesh(mesh);
    std::vector<std::uint8_t> out;

    if (format == StlFormat::Binary) {
        out.reserve(kBinaryHeaderSize + 4 + mesh.faces.size() * kBinaryRecordSize);
        static constexpr std::string_view header = "spinenav binary STL";
        out.assign(kBinaryHeaderSize, 0);
        std::memcpy(out.data(), header.data(), header.size());
        append_u32_le(out, static_cast<std::uint32_t>(mesh.faces.size()));
        for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
            const Vec3 n = face_normal(mesh, f);
            append_f32_le(out, static_cast<float>(n.x));
            append_f32_le(out, static_cast<float>(n.y));
            append_f32_le(out, static_cast<float>(n.z));
            for (int c = 0; c < 3; ++c) {
                const Vec3& v = mesh.vertices[mesh.faces[f][c]];
                append_f32_le(out, static_cast<float>(v.x));
                append_f32_le(out, static_cast<float>(v.y));
                append_f32_le(out, static_cast<float>(v.z));
            }
            out.push_back(0);
            out.push_back(0);
        }
        return out;
    }

    std::string text;
    text.reserve(64 + mesh.faces.size() * 160);
    text += "solid spinenav\n";
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const Vec3 n = face_normal(mesh, f);
        text += " facet normal ";
        format_f32(text, static_cast<float>(n.x));
        text += ' ';
        format_f32(text, static_cast<float>(n.y));
        text += ' ';
        format_f32(text, static_cast<float>(n.z));
        text += "\n  outer loop\n";
        for (int c = 0; c < 3; ++c) {
            const Vec3& v = mesh.vertices[mesh.faces[f][c]];
            text += "   vertex ";
            format_f32(text, static_cast<float>(v.x));
            text += ' ';
            format_f32(text, static_cast<float>(v.y));
            text += ' ';
            format_f32(text, static_cast<float>(v.z));
            text += '\n';
        }
        text += "  endloop\n endfacet\n";
    }
    text += "endsolid spinenav\n";
    out.assign(text.begin(), text.end());
    return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) {
        throw ConfigError("input file does not exist: " + path.string());
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open file for reading: " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw IoError("read failure on file: " + path.string());
    }
    return bytes;
}

void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot open file for writing: " + tmp.string());
        }
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw IoError("write failure on file: " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move temporary file into place at: " + path.string());
    }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
    write_file_atomic(path, std::span<const std::uint8_t>(
                                reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

TriangleMesh read_stl_file(const std::filesystem::path& path) {
    return parse_stl(read_file_bytes(path));
}

void write_stl_file(const TriangleMesh& mesh, const std::filesystem::path& path,
                    StlFormat format) {
    const std::vector<std::uint8_t> bytes = write_stl(mesh, format);
    write_file_atomic(path, std::span<const std::uint8_t>(bytes));
}

} // namespace spinenav

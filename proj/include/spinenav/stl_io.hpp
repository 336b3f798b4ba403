#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "spinenav/mesh.hpp"

namespace spinenav {

enum class StlFormat { Binary, Ascii };

/// Parses binary or ASCII STL bytes into an indexed mesh.
///
/// Duplicate corner positions are merged by exact bit equality of their
/// 32-bit float representation (STL's native precision); faces keep file
/// order. Facet normals stored in the file are ignored.
///
/// Format detection: input starting with "solid" and containing a "facet"
/// (or, for a facet-free solid, "endsolid") token is ASCII; everything else
/// is treated as binary. Throws ParseError with a byte offset on truncated
/// or malformed input.
TriangleMesh parse_stl(std::span<const std::uint8_t> bytes);

/// Serializes a mesh to STL. Output is byte-stable for identical input;
/// facet normals are recomputed from vertex winding. Coordinates are written
/// as 32-bit floats (binary) or their exact 9-significant-digit decimal form
/// (ASCII), so parse(write(m)) reproduces float32-representable meshes
/// bit-exactly.
std::vector<std::uint8_t> write_stl(const TriangleMesh& mesh, StlFormat format);

/// Reads and parses an STL file. Throws ConfigError when the file does not
/// exist, IoError on read failure.
TriangleMesh read_stl_file(const std::filesystem::path& path);

/// Writes atomically (temp file + rename). Throws IoError on failure.
void write_stl_file(const TriangleMesh& mesh, const std::filesystem::path& path,
                    StlFormat format = StlFormat::Binary);

/// Reads an entire file into memory. Throws ConfigError when missing,
/// IoError on read failure.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

/// Atomic whole-file write used by every exporter in this library: the data
/// lands under a temporary name in the target directory and is renamed into
/// place, so failures never leave partial output at `path`.
void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

} // namespace spinenav

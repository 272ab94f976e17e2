#pragma once

#include <filesystem>
#include <vector>

namespace vsphere {

/// Interleaved float image. Row 0 is the bottom row.
struct ImageBuffer {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<float> data;

    ImageBuffer() = default;
    ImageBuffer(int w, int h, int c);

    float& at(int i, int j, int c) { return data[index(i, j, c)]; }
    float at(int i, int j, int c) const { return data[index(i, j, c)]; }
    std::size_t index(int i, int j, int c) const {
        return (static_cast<std::size_t>(j) * static_cast<std::size_t>(width) + static_cast<std::size_t>(i)) *
                   static_cast<std::size_t>(channels) +
               static_cast<std::size_t>(c);
    }

    bool operator==(const ImageBuffer&) const = default;
};

/// PFM: 1 channel ("Pf") or 3 channels ("PF"), little-endian (scale -1).
void write_pfm(const std::filesystem::path& path, const ImageBuffer& img);
/// Accepts either byte order. Throws FormatError on malformed headers or
/// truncated data, IoError when the file cannot be opened.
ImageBuffer read_pfm(const std::filesystem::path& path);

/// Samples are clamped to [0, 1] and quantized to 8 or 16 bits.
void write_png(const std::filesystem::path& path, const ImageBuffer& img, int bit_depth = 8);
std::vector<unsigned char> encode_png(const ImageBuffer& img, int bit_depth = 8);
/// Decodes to floats in [0, 1] (1-4 channels, palette expanded).
ImageBuffer read_png(const std::filesystem::path& path);

}  // namespace vsphere

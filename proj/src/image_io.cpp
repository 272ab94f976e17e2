#include "vsphere/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "vsphere/error.hpp"

namespace vsphere {

ImageBuffer::ImageBuffer(int w, int h, int c) : width(w), height(h), channels(c) {
    if (w < 0 || h < 0 || c < 1 || c > 4) throw DomainError("invalid image dimensions");
    data.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * static_cast<std::size_t>(c), 0.0f);
}

// ---------------------------------------------------------------------------
// PFM

void write_pfm(const std::filesystem::path& path, const ImageBuffer& img) {
    if (img.channels != 1 && img.channels != 3) throw DomainError("PFM holds 1 or 3 channels");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << (img.channels == 3 ? "PF" : "Pf") << '\n' << img.width << ' ' << img.height << '\n' << "-1.0\n";
    static_assert(std::endian::native == std::endian::little, "PFM writer assumes a little-endian host");
    out.write(reinterpret_cast<const char*>(img.data.data()),
              static_cast<std::streamsize>(img.data.size() * sizeof(float)));
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

namespace {

std::string next_token(std::istream& in) {
    std::string tok;
    if (!(in >> tok)) throw FormatError("truncated PFM header");
    return tok;
}

}  // namespace

ImageBuffer read_pfm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    const std::string magic = next_token(in);
    int channels;
    if (magic == "PF") channels = 3;
    else if (magic == "Pf") channels = 1;
    else throw FormatError("not a PFM file: '" + path.string() + "'");
    int w, h;
    double scale;
    try {
        w = std::stoi(next_token(in));
        h = std::stoi(next_token(in));
        scale = std::stod(next_token(in));
    } catch (const std::logic_error&) {
        throw FormatError("malformed PFM header in '" + path.string() + "'");
    }
    if (w <= 0 || h <= 0 || scale == 0.0 || !std::isfinite(scale)) throw FormatError("invalid PFM header values");
    in.get();  // single whitespace byte after the scale
    ImageBuffer img(w, h, channels);
    in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(img.data.size() * sizeof(float)))
        throw FormatError("truncated PFM data in '" + path.string() + "'");
    const bool little = scale < 0.0;
    if (little != (std::endian::native == std::endian::little))
        for (float& f : img.data) {
            std::uint32_t u;
            std::memcpy(&u, &f, 4);
            u = __builtin_bswap32(u);
            std::memcpy(&f, &u, 4);
        }
    return img;
}

// ---------------------------------------------------------------------------
// PNG

namespace {

int color_type_for(int channels) {
    switch (channels) {
        case 1: return PNG_COLOR_TYPE_GRAY;
        case 2: return PNG_COLOR_TYPE_GRAY_ALPHA;
        case 3: return PNG_COLOR_TYPE_RGB;
        default: return PNG_COLOR_TYPE_RGBA;
    }
}

void png_error_fn(png_structp, png_const_charp msg) { throw IoError(std::string("libpng: ") + msg); }
void png_warning_fn(png_structp, png_const_charp) {}

void append_bytes(png_structp png, png_bytep data, png_size_t n) {
    auto* out = static_cast<std::vector<unsigned char>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + n);
}

void flush_noop(png_structp) {}

}  // namespace

std::vector<unsigned char> encode_png(const ImageBuffer& img, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16) throw DomainError("PNG bit depth must be 8 or 16");
    if (img.width <= 0 || img.height <= 0) throw DomainError("cannot encode an empty image");
    const int bytes = bit_depth / 8;
    const std::size_t stride = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.channels) * bytes;
    const double maxv = bit_depth == 8 ? 255.0 : 65535.0;
    std::vector<unsigned char> pixels(stride * static_cast<std::size_t>(img.height));
    for (int j = 0; j < img.height; ++j) {
        // PNG rows run top to bottom.
        unsigned char* row = pixels.data() + stride * static_cast<std::size_t>(img.height - 1 - j);
        for (int i = 0; i < img.width; ++i)
            for (int c = 0; c < img.channels; ++c) {
                const double v = std::clamp(static_cast<double>(img.at(i, j, c)), 0.0, 1.0);
                const auto q = static_cast<std::uint32_t>(std::lround(v * maxv));
                const std::size_t k = (static_cast<std::size_t>(i) * img.channels + c) * bytes;
                if (bytes == 1) {
                    row[k] = static_cast<unsigned char>(q);
                } else {
                    row[k] = static_cast<unsigned char>(q >> 8);
                    row[k + 1] = static_cast<unsigned char>(q & 0xff);
                }
            }
    }

    std::vector<unsigned char> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
    if (!png) throw IoError("libpng: cannot create write struct");
    png_infop info = png_create_info_struct(png);
    try {
        if (!info) throw IoError("libpng: cannot create info struct");
        png_set_write_fn(png, &out, append_bytes, flush_noop);
        png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), bit_depth,
                     color_type_for(img.channels), PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                     PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        for (int r = 0; r < img.height; ++r) png_write_row(png, pixels.data() + stride * static_cast<std::size_t>(r));
        png_write_end(png, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
    return out;
}

void write_png(const std::filesystem::path& path, const ImageBuffer& img, int bit_depth) {
    const std::vector<unsigned char> bytes = encode_png(img, bit_depth);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

ImageBuffer read_png(const std::filesystem::path& path) {
    FILE* fp = std::fopen(path.string().c_str(), "rb");
    if (!fp) throw IoError("cannot open '" + path.string() + "'");
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, fp) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
        std::fclose(fp);
        throw FormatError("not a PNG file: '" + path.string() + "'");
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    ImageBuffer img;
    try {
        if (!png || !info) throw IoError("libpng: cannot create read struct");
        png_init_io(png, fp);
        png_set_sig_bytes(png, 8);
        png_read_info(png, info);
        png_set_expand(png);
        png_read_update_info(png, info);
        const int w = static_cast<int>(png_get_image_width(png, info));
        const int h = static_cast<int>(png_get_image_height(png, info));
        const int channels = png_get_channels(png, info);
        const int depth = png_get_bit_depth(png, info);
        const std::size_t stride = png_get_rowbytes(png, info);
        std::vector<unsigned char> pixels(stride * static_cast<std::size_t>(h));
        std::vector<png_bytep> rows(static_cast<std::size_t>(h));
        for (int r = 0; r < h; ++r) rows[static_cast<std::size_t>(r)] = pixels.data() + stride * static_cast<std::size_t>(r);
        png_read_image(png, rows.data());
        img = ImageBuffer(w, h, channels);
        const double maxv = depth == 16 ? 65535.0 : 255.0;
        for (int r = 0; r < h; ++r) {
            const unsigned char* row = rows[static_cast<std::size_t>(r)];
            const int j = h - 1 - r;
            for (int i = 0; i < w; ++i)
                for (int c = 0; c < channels; ++c) {
                    const std::size_t k = static_cast<std::size_t>(i) * channels + c;
                    const unsigned v = depth == 16 ? (row[2 * k] << 8 | row[2 * k + 1]) : row[k];
                    img.at(i, j, c) = static_cast<float>(v / maxv);
                }
        }
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return img;
}

}  // namespace vsphere

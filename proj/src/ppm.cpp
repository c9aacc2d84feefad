#include "lwir/ppm.hpp"

#include <cmath>
#include <fstream>
#include <vector>

namespace lwir {

namespace {

// next integer token, skipping whitespace and '#' comments
int64_t read_header_int(std::istream& is, const std::string& path) {
    int c = is.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = is.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = is.get();
    }
    if (c == EOF || !std::isdigit(c)) throw Error("'" + path + "': malformed PNM header");
    int64_t v = 0;
    while (c != EOF && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        c = is.get();
    }
    if (c != EOF) is.unget();
    return v;
}

}  // namespace

Tensor read_ppm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open image '" + path + "'");
    char m0 = 0, m1 = 0;
    is.get(m0);
    is.get(m1);
    int64_t channels;
    if (m0 == 'P' && m1 == '6') channels = 3;
    else if (m0 == 'P' && m1 == '5') channels = 1;
    else throw Error("'" + path + "': not a binary PGM/PPM file (need P5 or P6)");
    const int64_t w = read_header_int(is, path);
    const int64_t h = read_header_int(is, path);
    const int64_t maxval = read_header_int(is, path);
    if (w < 1 || h < 1) throw Error("'" + path + "': degenerate image size");
    if (maxval != 255) throw Error("'" + path + "': only maxval 255 is supported");
    is.get();  // single whitespace after maxval

    std::vector<unsigned char> raw(static_cast<size_t>(w * h * channels));
    if (!is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
        throw Error("'" + path + "': truncated pixel data");

    Tensor t(Shape4{1, channels, h, w});
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x)
            for (int64_t c = 0; c < channels; ++c)
                t.at(0, c, y, x) =
                    static_cast<float>(raw[static_cast<size_t>((y * w + x) * channels + c)]) /
                    255.0f;
    return t;
}

void write_ppm(const std::string& path, const Tensor& t) {
    if (t.shape.n != 1 || (t.shape.c != 1 && t.shape.c != 3))
        throw Error("image write expects a [1, 1|3, H, W] tensor, got " + t.shape.str());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open '" + path + "' for writing");
    os << (t.shape.c == 3 ? "P6" : "P5") << "\n" << t.shape.w << " " << t.shape.h << "\n255\n";
    std::vector<unsigned char> raw(static_cast<size_t>(t.shape.c * t.shape.h * t.shape.w));
    for (int64_t y = 0; y < t.shape.h; ++y)
        for (int64_t x = 0; x < t.shape.w; ++x)
            for (int64_t c = 0; c < t.shape.c; ++c) {
                float v = t.at(0, c, y, x);
                v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
                raw[static_cast<size_t>((y * t.shape.w + x) * t.shape.c + c)] =
                    static_cast<unsigned char>(std::lround(v * 255.0f));
            }
    os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!os) throw Error("write error on '" + path + "'");
}

}  // namespace lwir

#include "fpd/image.hpp"

#include <cmath>
#include <fstream>

#include "fpd/error.hpp"
#include "fpd/fsutil.hpp"

namespace fpd {

namespace {

// Skips whitespace and '#' comments between PPM header tokens.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
        } else if (!std::isspace(c)) {
            tok.push_back(static_cast<char>(c));
            while ((c = in.get()) != EOF && !std::isspace(c)) tok.push_back(static_cast<char>(c));
            break;
        }
    }
    return tok;
}

}  // namespace

ImageU8 read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCategory::Io, "cannot open image " + path.string());
    if (next_token(in) != "P6")
        raise(ErrorCategory::Input, path.string() + ": not a binary PPM (P6)");
    ImageU8 img;
    try {
        img.width = std::stoul(next_token(in));
        img.height = std::stoul(next_token(in));
        if (std::stoul(next_token(in)) != 255)
            raise(ErrorCategory::Input, path.string() + ": PPM maxval must be 255");
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        raise(ErrorCategory::Input, path.string() + ": malformed PPM header");
    }
    if (img.width == 0 || img.height == 0)
        raise(ErrorCategory::Input, path.string() + ": empty image");
    img.rgb.resize(img.width * img.height * 3);
    in.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
    if (static_cast<std::size_t>(in.gcount()) != img.rgb.size())
        raise(ErrorCategory::Input, path.string() + ": truncated PPM payload");
    return img;
}

void write_ppm(const std::filesystem::path& path, const ImageU8& img) {
    ensure_parent_dir(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorCategory::Io, "cannot write image " + path.string());
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.rgb.data()),
              static_cast<std::streamsize>(img.rgb.size()));
    if (!out) raise(ErrorCategory::Io, "short write on image " + path.string());
}

Tensor<float> bilinear_resize(const Tensor<float>& chw, std::size_t out_h, std::size_t out_w) {
    if (chw.rank() != 3)
        raise(ErrorCategory::Shape, "bilinear_resize expects CxHxW, got " +
                                        shape_string(chw.shape()));
    const std::size_t C = chw.dim(0), H = chw.dim(1), W = chw.dim(2);
    if (out_h == H && out_w == W) return chw;

    Tensor<float> out({C, out_h, out_w});
    const double sh = static_cast<double>(H) / static_cast<double>(out_h);
    const double sw = static_cast<double>(W) / static_cast<double>(out_w);
    for (std::size_t c = 0; c < C; ++c) {
        const float* src = chw.data() + c * H * W;
        float* dst = out.data() + c * out_h * out_w;
        for (std::size_t oy = 0; oy < out_h; ++oy) {
            double fy = (static_cast<double>(oy) + 0.5) * sh - 0.5;
            fy = std::min(std::max(fy, 0.0), static_cast<double>(H - 1));
            const std::size_t y0 = static_cast<std::size_t>(fy);
            const std::size_t y1 = std::min(y0 + 1, H - 1);
            const double wy = fy - static_cast<double>(y0);
            for (std::size_t ox = 0; ox < out_w; ++ox) {
                double fx = (static_cast<double>(ox) + 0.5) * sw - 0.5;
                fx = std::min(std::max(fx, 0.0), static_cast<double>(W - 1));
                const std::size_t x0 = static_cast<std::size_t>(fx);
                const std::size_t x1 = std::min(x0 + 1, W - 1);
                const double wx = fx - static_cast<double>(x0);
                const double top = (1.0 - wx) * src[y0 * W + x0] + wx * src[y0 * W + x1];
                const double bot = (1.0 - wx) * src[y1 * W + x0] + wx * src[y1 * W + x1];
                dst[oy * out_w + ox] = static_cast<float>((1.0 - wy) * top + wy * bot);
            }
        }
    }
    return out;
}

Tensor<float> preprocess_rgb(const ImageU8& img, std::size_t target_side,
                             const std::optional<ChannelNorm>& norm) {
    if (img.width < 8 || img.height < 8 || img.rgb.empty())
        raise(ErrorCategory::Input, "rgb input must be at least 8x8");
    if (img.rgb.size() != img.width * img.height * 3)
        raise(ErrorCategory::Input, "rgb payload does not match dimensions");

    Tensor<float> chw({3, img.height, img.width});
    const float inv = 1.0f / 255.0f;
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t y = 0; y < img.height; ++y)
            for (std::size_t x = 0; x < img.width; ++x)
                chw.data()[(c * img.height + y) * img.width + x] =
                    static_cast<float>(img.at(x, y, c)) * inv;

    Tensor<float> resized = bilinear_resize(chw, target_side, target_side);
    if (norm.has_value()) {
        for (std::size_t c = 0; c < 3; ++c) {
            const float m = static_cast<float>(norm->mean[c]);
            const float s = static_cast<float>(norm->stddev[c]);
            float* base = resized.data() + c * target_side * target_side;
            for (std::size_t i = 0; i < target_side * target_side; ++i)
                base[i] = (base[i] - m) / s;
        }
    }
    return resized;
}

Tensor<float> raster_to_tensor(const BnwRaster& raster, std::size_t target_side) {
    Tensor<float> chw({3, raster.height, raster.width});
    for (std::size_t y = 0; y < raster.height; ++y)
        for (std::size_t x = 0; x < raster.width; ++x) {
            const float v = static_cast<float>(raster.at(x, y));
            for (std::size_t c = 0; c < 3; ++c)
                chw.data()[(c * raster.height + y) * raster.width + x] = v;
        }
    return bilinear_resize(chw, target_side, target_side);
}

}  // namespace fpd

#pragma once

// Decoding adapter between image files and the engine's RGB rasters.
// Backed by OpenCV's codecs; link the it2near_imageio target.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "errors.hpp"
#include "perceptual.hpp"

namespace it2near {

class DecodeError : public Error {
public:
    using Error::Error;
};

inline Image from_bgr(const cv::Mat& bgr) {
    Image img(bgr.cols, bgr.rows);
    for (int y = 0; y < bgr.rows; ++y) {
        const auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x) img.set(x, y, row[x][2], row[x][1], row[x][0]);
    }
    return img;
}

inline cv::Mat to_bgr(const Image& img) {
    cv::Mat m(img.height, img.width, CV_8UC3);
    for (int y = 0; y < img.height; ++y) {
        auto* row = m.ptr<cv::Vec3b>(y);
        for (int x = 0; x < img.width; ++x) {
            const auto* p = img.pixel(x, y);
            row[x] = cv::Vec3b(p[2], p[1], p[0]);
        }
    }
    return m;
}

inline Image decode_image_file(const std::filesystem::path& path) {
    const cv::Mat m = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (m.empty()) throw DecodeError("cannot decode image " + path.string());
    return from_bgr(m);
}

inline Image decode_image_bytes(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) throw DecodeError("empty image upload");
    const cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
    const cv::Mat m = cv::imdecode(buf, cv::IMREAD_COLOR);
    if (m.empty()) throw DecodeError("cannot decode uploaded image");
    return from_bgr(m);
}

inline void write_image_file(const std::filesystem::path& path, const Image& img) {
    if (!cv::imwrite(path.string(), to_bgr(img))) throw DecodeError("cannot write image " + path.string());
}

/// JPEG thumbnail whose longer side is at most `max_side` pixels.
inline std::vector<std::uint8_t> encode_thumbnail(const std::filesystem::path& path, int max_side = 128) {
    const cv::Mat m = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (m.empty()) throw DecodeError("cannot decode image " + path.string());
    const double scale = std::min(1.0, static_cast<double>(max_side) / std::max(m.cols, m.rows));
    cv::Mat small;
    cv::resize(m, small, cv::Size(), scale, scale, cv::INTER_AREA);
    std::vector<std::uint8_t> out;
    cv::imencode(".jpg", small, out, {cv::IMWRITE_JPEG_QUALITY, 85});
    return out;
}

}  // namespace it2near

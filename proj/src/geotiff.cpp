#include "fireclr/geotiff.hpp"

#include <tiffio.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <memory>
#include <string>

#include "fireclr/error.hpp"

namespace fireclr {

namespace {

constexpr ttag_t kModelPixelScaleTag = 33550;
constexpr ttag_t kModelTiepointTag = 33922;
constexpr ttag_t kGeoKeyDirectoryTag = 34735;

constexpr std::uint16_t kGTModelTypeGeoKey = 1024;
constexpr std::uint16_t kGTRasterTypeGeoKey = 1025;
constexpr std::uint16_t kGeographicTypeGeoKey = 2048;
constexpr std::uint16_t kProjectedCSTypeGeoKey = 3072;

const TIFFFieldInfo kGeoFieldInfo[] = {
    {kModelPixelScaleTag, -1, -1, TIFF_DOUBLE, FIELD_CUSTOM, 1, 1,
     const_cast<char*>("ModelPixelScaleTag")},
    {kModelTiepointTag, -1, -1, TIFF_DOUBLE, FIELD_CUSTOM, 1, 1,
     const_cast<char*>("ModelTiepointTag")},
    {kGeoKeyDirectoryTag, -1, -1, TIFF_SHORT, FIELD_CUSTOM, 1, 1,
     const_cast<char*>("GeoKeyDirectoryTag")},
};

TIFFExtendProc g_parent_extender = nullptr;

void geotiff_tag_extender(TIFF* tif) {
  TIFFMergeFieldInfo(tif, kGeoFieldInfo, sizeof(kGeoFieldInfo) / sizeof(kGeoFieldInfo[0]));
  if (g_parent_extender) g_parent_extender(tif);
}

thread_local std::string g_last_tiff_error;

void tiff_error_handler(const char* module, const char* fmt, va_list ap) {
  char buf[512];
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  g_last_tiff_error = (module ? std::string(module) + ": " : std::string()) + buf;
}

void tiff_warning_handler(const char*, const char*, va_list) {}

void install_libtiff_hooks() {
  static const bool installed = [] {
    g_parent_extender = TIFFSetTagExtender(geotiff_tag_extender);
    TIFFSetErrorHandler(tiff_error_handler);
    TIFFSetWarningHandler(tiff_warning_handler);
    return true;
  }();
  (void)installed;
}

struct TiffCloser {
  void operator()(TIFF* t) const { TIFFClose(t); }
};
using TiffPtr = std::unique_ptr<TIFF, TiffCloser>;

std::size_t sample_bytes(SampleType t) {
  switch (t) {
    case SampleType::u8: return 1;
    case SampleType::u16:
    case SampleType::i16: return 2;
    case SampleType::u32:
    case SampleType::f32: return 4;
    case SampleType::f64: return 8;
  }
  return 0;
}

double decode_sample(const unsigned char* p, SampleType t) {
  switch (t) {
    case SampleType::u8: return *p;
    case SampleType::u16: { std::uint16_t v; std::memcpy(&v, p, 2); return v; }
    case SampleType::i16: { std::int16_t v; std::memcpy(&v, p, 2); return v; }
    case SampleType::u32: { std::uint32_t v; std::memcpy(&v, p, 4); return v; }
    case SampleType::f32: { float v; std::memcpy(&v, p, 4); return v; }
    case SampleType::f64: { double v; std::memcpy(&v, p, 8); return v; }
  }
  return 0.0;
}

void encode_sample(unsigned char* p, double value, SampleType t) {
  switch (t) {
    case SampleType::u8: { auto v = static_cast<std::uint8_t>(value); std::memcpy(p, &v, 1); break; }
    case SampleType::u16: { auto v = static_cast<std::uint16_t>(value); std::memcpy(p, &v, 2); break; }
    case SampleType::i16: { auto v = static_cast<std::int16_t>(value); std::memcpy(p, &v, 2); break; }
    case SampleType::u32: { auto v = static_cast<std::uint32_t>(value); std::memcpy(p, &v, 4); break; }
    case SampleType::f32: { auto v = static_cast<float>(value); std::memcpy(p, &v, 4); break; }
    case SampleType::f64: std::memcpy(p, &value, 8); break;
  }
}

SampleType classify_format(std::uint16_t format, std::uint16_t bits, const std::string& path) {
  if (format == SAMPLEFORMAT_UINT && bits == 8) return SampleType::u8;
  if (format == SAMPLEFORMAT_UINT && bits == 16) return SampleType::u16;
  if (format == SAMPLEFORMAT_INT && bits == 16) return SampleType::i16;
  if (format == SAMPLEFORMAT_UINT && bits == 32) return SampleType::u32;
  if (format == SAMPLEFORMAT_IEEEFP && bits == 32) return SampleType::f32;
  if (format == SAMPLEFORMAT_IEEEFP && bits == 64) return SampleType::f64;
  throw DataError("unsupported sample format in " + path + " (format " + std::to_string(format) +
                  ", " + std::to_string(bits) + " bits)");
}

void read_georeferencing(TIFF* tif, RasterData& out) {
  std::uint16_t count = 0;
  double* scale = nullptr;
  if (TIFFGetField(tif, kModelPixelScaleTag, &count, &scale) && count >= 2) {
    if (std::abs(scale[0] - scale[1]) > 1e-9 * std::abs(scale[0]))
      throw DataError("non-square pixels are not supported");
    out.geo.pixel_size = scale[0];
  }
  double* tie = nullptr;
  if (TIFFGetField(tif, kModelTiepointTag, &count, &tie) && count >= 6) {
    out.geo.origin_x = tie[3] - tie[0] * out.geo.pixel_size;
    out.geo.origin_y = tie[4] + tie[1] * out.geo.pixel_size;
  }
  std::uint16_t* keys = nullptr;
  if (TIFFGetField(tif, kGeoKeyDirectoryTag, &count, &keys) && count >= 4) {
    const int nkeys = keys[3];
    for (int k = 0; k < nkeys && 4 + 4 * k + 3 < count; ++k) {
      const std::uint16_t* e = keys + 4 + 4 * k;
      if ((e[0] == kProjectedCSTypeGeoKey || e[0] == kGeographicTypeGeoKey) && e[1] == 0 &&
          e[3] != 0 && e[3] != 32767) {
        out.crs_id = "EPSG:" + std::to_string(e[3]);
        if (e[0] == kProjectedCSTypeGeoKey) break;
      }
    }
  }
}

}  // namespace

bool is_integer(SampleType t) { return t != SampleType::f32 && t != SampleType::f64; }

RasterData read_geotiff(const std::filesystem::path& path) {
  install_libtiff_hooks();
  if (!std::filesystem::exists(path)) throw DataError("missing file: " + path.string());
  g_last_tiff_error.clear();
  TiffPtr tif(TIFFOpen(path.string().c_str(), "r"));
  if (!tif) throw DataError("cannot open TIFF " + path.string() + ": " + g_last_tiff_error);

  std::uint32_t width = 0, height = 0;
  std::uint16_t spp = 1, bits = 8, format = SAMPLEFORMAT_UINT, planar = PLANARCONFIG_CONTIG;
  TIFFGetField(tif.get(), TIFFTAG_IMAGEWIDTH, &width);
  TIFFGetField(tif.get(), TIFFTAG_IMAGELENGTH, &height);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLESPERPIXEL, &spp);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_BITSPERSAMPLE, &bits);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLEFORMAT, &format);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_PLANARCONFIG, &planar);

  RasterData out;
  out.rows = static_cast<int>(height);
  out.cols = static_cast<int>(width);
  out.bands = spp;
  out.sample_type = classify_format(format, bits, path.string());
  if (out.rows < 1 || out.cols < 1) throw DataError("empty raster: " + path.string());
  out.values.assign(static_cast<std::size_t>(out.rows) * out.cols * out.bands, 0.0);

  char* desc = nullptr;
  if (TIFFGetField(tif.get(), TIFFTAG_IMAGEDESCRIPTION, &desc) && desc) out.description = desc;
  read_georeferencing(tif.get(), out);

  const std::size_t bps = sample_bytes(out.sample_type);
  const bool separate = planar == PLANARCONFIG_SEPARATE;
  auto store = [&](int band, int r, int c, const unsigned char* p) {
    out.values[(static_cast<std::size_t>(band) * out.rows + r) * out.cols + c] =
        decode_sample(p, out.sample_type);
  };

  if (TIFFIsTiled(tif.get())) {
    std::uint32_t tw = 0, th = 0;
    TIFFGetField(tif.get(), TIFFTAG_TILEWIDTH, &tw);
    TIFFGetField(tif.get(), TIFFTAG_TILELENGTH, &th);
    std::vector<unsigned char> buf(TIFFTileSize(tif.get()));
    const int planes = separate ? out.bands : 1;
    for (int plane = 0; plane < planes; ++plane) {
      for (std::uint32_t y0 = 0; y0 < height; y0 += th) {
        for (std::uint32_t x0 = 0; x0 < width; x0 += tw) {
          const ttile_t t = TIFFComputeTile(tif.get(), x0, y0, 0, static_cast<tsample_t>(plane));
          if (TIFFReadEncodedTile(tif.get(), t, buf.data(), buf.size()) < 0)
            throw DataError("truncated or corrupt tile in " + path.string());
          for (std::uint32_t y = 0; y < th && y0 + y < height; ++y) {
            for (std::uint32_t x = 0; x < tw && x0 + x < width; ++x) {
              if (separate) {
                store(plane, y0 + y, x0 + x, buf.data() + (y * tw + x) * bps);
              } else {
                for (int b = 0; b < out.bands; ++b)
                  store(b, y0 + y, x0 + x, buf.data() + ((y * tw + x) * out.bands + b) * bps);
              }
            }
          }
        }
      }
    }
  } else {
    std::vector<unsigned char> line(TIFFScanlineSize(tif.get()));
    const int planes = separate ? out.bands : 1;
    for (int plane = 0; plane < planes; ++plane) {
      for (int r = 0; r < out.rows; ++r) {
        if (TIFFReadScanline(tif.get(), line.data(), r, static_cast<tsample_t>(plane)) < 0)
          throw DataError("truncated or corrupt strip in " + path.string());
        for (int c = 0; c < out.cols; ++c) {
          if (separate) {
            store(plane, r, c, line.data() + c * bps);
          } else {
            for (int b = 0; b < out.bands; ++b) store(b, r, c, line.data() + (c * out.bands + b) * bps);
          }
        }
      }
    }
  }
  return out;
}

void write_geotiff(const std::filesystem::path& path, const RasterData& raster,
                   SampleType sample_type) {
  install_libtiff_hooks();
  if (raster.rows < 1 || raster.cols < 1 || raster.bands < 1)
    throw DataError("cannot write an empty raster");
  g_last_tiff_error.clear();
  TiffPtr tif(TIFFOpen(path.string().c_str(), "w"));
  if (!tif) throw DataError("cannot create " + path.string() + ": " + g_last_tiff_error);

  TIFF* t = tif.get();
  const std::size_t bps = sample_bytes(sample_type);
  TIFFSetField(t, TIFFTAG_IMAGEWIDTH, static_cast<std::uint32_t>(raster.cols));
  TIFFSetField(t, TIFFTAG_IMAGELENGTH, static_cast<std::uint32_t>(raster.rows));
  TIFFSetField(t, TIFFTAG_SAMPLESPERPIXEL, static_cast<std::uint16_t>(raster.bands));
  TIFFSetField(t, TIFFTAG_BITSPERSAMPLE, static_cast<std::uint16_t>(bps * 8));
  std::uint16_t format = SAMPLEFORMAT_UINT;
  if (sample_type == SampleType::i16) format = SAMPLEFORMAT_INT;
  if (!is_integer(sample_type)) format = SAMPLEFORMAT_IEEEFP;
  TIFFSetField(t, TIFFTAG_SAMPLEFORMAT, format);
  TIFFSetField(t, TIFFTAG_PLANARCONFIG, PLANARCONFIG_SEPARATE);
  TIFFSetField(t, TIFFTAG_PHOTOMETRIC, PHOTOMETRIC_MINISBLACK);
  TIFFSetField(t, TIFFTAG_COMPRESSION, COMPRESSION_NONE);
  TIFFSetField(t, TIFFTAG_ROWSPERSTRIP, static_cast<std::uint32_t>(1));
  if (raster.bands > 1) {
    std::vector<std::uint16_t> extra(raster.bands - 1, EXTRASAMPLE_UNSPECIFIED);
    TIFFSetField(t, TIFFTAG_EXTRASAMPLES, static_cast<std::uint16_t>(extra.size()), extra.data());
  }
  if (!raster.description.empty())
    TIFFSetField(t, TIFFTAG_IMAGEDESCRIPTION, raster.description.c_str());

  double scale[3] = {raster.geo.pixel_size, raster.geo.pixel_size, 0.0};
  TIFFSetField(t, kModelPixelScaleTag, static_cast<std::uint16_t>(3), scale);
  double tie[6] = {0.0, 0.0, 0.0, raster.geo.origin_x, raster.geo.origin_y, 0.0};
  TIFFSetField(t, kModelTiepointTag, static_cast<std::uint16_t>(6), tie);

  std::vector<std::uint16_t> keys = {1, 1, 0, 0};
  auto add_key = [&](std::uint16_t id, std::uint16_t value) {
    keys.insert(keys.end(), {id, 0, 1, value});
    ++keys[3];
  };
  std::uint16_t epsg = 0;
  if (raster.crs_id.rfind("EPSG:", 0) == 0) {
    try {
      const int code = std::stoi(raster.crs_id.substr(5));
      if (code > 0 && code < 65535) epsg = static_cast<std::uint16_t>(code);
    } catch (const std::exception&) {
    }
  }
  add_key(kGTModelTypeGeoKey, 1);   // projected
  add_key(kGTRasterTypeGeoKey, 1);  // pixel is area
  if (epsg != 0) add_key(kProjectedCSTypeGeoKey, epsg);
  TIFFSetField(t, kGeoKeyDirectoryTag, static_cast<std::uint16_t>(keys.size()), keys.data());

  std::vector<unsigned char> line(static_cast<std::size_t>(raster.cols) * bps);
  for (int b = 0; b < raster.bands; ++b) {
    for (int r = 0; r < raster.rows; ++r) {
      for (int c = 0; c < raster.cols; ++c) encode_sample(line.data() + c * bps, raster.at(b, r, c), sample_type);
      if (TIFFWriteScanline(t, line.data(), static_cast<std::uint32_t>(r), static_cast<tsample_t>(b)) < 0)
        throw DataError("failed writing " + path.string() + ": " + g_last_tiff_error);
    }
  }
}

}  // namespace fireclr

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "problems.hpp"

namespace lkqn {

namespace {

constexpr std::uint8_t kTypeUByte = 0x08;

std::string at_offset(std::size_t off) {
    return " at byte offset " + std::to_string(off);
}

std::uint32_t read_u32_be(std::istream& in, std::size_t offset, const char* what) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (in.gcount() != 4)
        throw IdxParseError(std::string("idx: truncated file while reading ") + what +
                            at_offset(offset));
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_u32_be(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<char*>(b), 4);
}

} // namespace

IdxTensor idx_read(std::istream& in) {
    std::uint32_t magic = read_u32_be(in, 0, "magic");
    std::uint8_t zero_hi = static_cast<std::uint8_t>(magic >> 24);
    std::uint8_t zero_lo = static_cast<std::uint8_t>(magic >> 16);
    std::uint8_t type = static_cast<std::uint8_t>(magic >> 8);
    std::uint8_t ndims = static_cast<std::uint8_t>(magic);
    if (zero_hi != 0 || zero_lo != 0)
        throw IdxParseError("idx: bad magic" + at_offset(0));
    if (type != kTypeUByte)
        throw IdxParseError("idx: unsupported element type 0x" +
                            [](unsigned t) {
                                std::ostringstream os;
                                os << std::hex << t;
                                return os.str();
                            }(type) +
                            at_offset(2));
    if (ndims == 0) throw IdxParseError("idx: zero-dimensional tensor" + at_offset(3));

    IdxTensor t;
    std::size_t count = 1;
    for (std::uint8_t d = 0; d < ndims; ++d) {
        std::uint32_t dim = read_u32_be(in, 4 + 4 * std::size_t(d), "dimension size");
        t.dims.push_back(dim);
        count *= dim;
    }
    t.bytes.resize(count);
    in.read(reinterpret_cast<char*>(t.bytes.data()), static_cast<std::streamsize>(count));
    if (static_cast<std::size_t>(in.gcount()) != count)
        throw IdxParseError("idx: truncated file while reading data" +
                            at_offset(4 + 4 * std::size_t(ndims) +
                                      static_cast<std::size_t>(std::max<std::streamsize>(in.gcount(), 0))));
    return t;
}

IdxTensor idx_read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IdxParseError("idx: cannot open '" + path + "'");
    return idx_read(in);
}

void idx_write(std::ostream& out, const IdxTensor& t) {
    if (t.dims.empty() || t.dims.size() > 255)
        throw std::invalid_argument("idx_write: need 1..255 dimensions");
    std::uint32_t magic = (std::uint32_t(kTypeUByte) << 8) |
                          static_cast<std::uint32_t>(t.dims.size());
    write_u32_be(out, magic);
    std::size_t count = 1;
    for (std::size_t d : t.dims) {
        write_u32_be(out, static_cast<std::uint32_t>(d));
        count *= d;
    }
    if (count != t.bytes.size())
        throw std::invalid_argument("idx_write: dims do not match payload size");
    out.write(reinterpret_cast<const char*>(t.bytes.data()),
              static_cast<std::streamsize>(t.bytes.size()));
}

void idx_write_file(const std::string& path, const IdxTensor& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IdxParseError("idx: cannot open '" + path + "' for writing");
    idx_write(out, t);
}

DataMatrix idx_images_to_matrix(const IdxTensor& t) {
    if (t.dims.size() != 3)
        throw IdxParseError("idx: expected a 3-D image tensor (magic 0x00000803), got " +
                            std::to_string(t.dims.size()) + " dims");
    std::size_t count = t.dims[0], h = t.dims[1], w = t.dims[2];
    DataMatrix m;
    m.rows = h * w;
    m.cols = count;
    m.provenance = DataMatrix::Provenance::idx_file;
    m.a.resize(m.rows * m.cols);
    // Each image becomes one column, scaled to [0, 1].
    for (std::size_t im = 0; im < count; ++im)
        for (std::size_t px = 0; px < h * w; ++px)
            m.a[px * count + im] = static_cast<double>(t.bytes[im * h * w + px]) / 255.0;
    return m;
}

std::vector<std::uint8_t> idx_labels(const IdxTensor& t) {
    if (t.dims.size() != 1)
        throw IdxParseError("idx: expected a 1-D label tensor (magic 0x00000801), got " +
                            std::to_string(t.dims.size()) + " dims");
    return t.bytes;
}

DataMatrix idx_load(const std::string& images_path) {
    return idx_images_to_matrix(idx_read_file(images_path));
}

DataMatrix idx_load_class(const std::string& images_path, const std::string& labels_path,
                          int digit) {
    IdxTensor imgs = idx_read_file(images_path);
    std::vector<std::uint8_t> labels = idx_labels(idx_read_file(labels_path));
    if (imgs.dims.size() != 3)
        throw IdxParseError("idx: expected a 3-D image tensor");
    if (labels.size() != imgs.dims[0])
        throw IdxParseError("idx: label count " + std::to_string(labels.size()) +
                            " does not match image count " + std::to_string(imgs.dims[0]));
    std::size_t h = imgs.dims[1], w = imgs.dims[2];
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == static_cast<std::uint8_t>(digit)) keep.push_back(i);
    DataMatrix m;
    m.rows = h * w;
    m.cols = keep.size();
    m.provenance = DataMatrix::Provenance::idx_file;
    m.a.resize(m.rows * m.cols);
    for (std::size_t c = 0; c < keep.size(); ++c)
        for (std::size_t px = 0; px < h * w; ++px)
            m.a[px * keep.size() + c] =
                static_cast<double>(imgs.bytes[keep[c] * h * w + px]) / 255.0;
    return m;
}

} // namespace lkqn

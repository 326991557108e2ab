#include "sfcorch/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace sfcorch {

namespace {

constexpr char kMagic[4] = {'S', 'F', 'C', 'K'};
constexpr uint32_t kVersion = 1;

uint64_t fnv1a(const std::string& bytes) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

template <typename T>
void put(std::string& out, const T& v) {
    const char* p = reinterpret_cast<const char*>(&v);
    out.append(p, sizeof(T));
}

template <typename T>
T take(const std::string& in, size_t& pos) {
    if (pos + sizeof(T) > in.size()) throw std::runtime_error("checkpoint: truncated file");
    T v;
    std::memcpy(&v, in.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<CheckpointTensor>& tensors) {
    std::string buf;
    buf.append(kMagic, 4);
    put(buf, kVersion);
    put(buf, static_cast<uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        put(buf, static_cast<uint32_t>(t.name.size()));
        buf.append(t.name);
        put(buf, static_cast<uint32_t>(t.dims.size()));
        size_t n = 1;
        for (uint32_t d : t.dims) {
            put(buf, d);
            n *= d;
        }
        if (n != t.data.size()) throw std::invalid_argument("checkpoint: dims/data mismatch");
        for (double v : t.data) put(buf, v);
    }
    put(buf, fnv1a(buf.substr(0, buf.size())));

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!f) throw std::runtime_error("checkpoint: write failed " + path);
}

std::vector<CheckpointTensor> load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    if (buf.size() < 4 + sizeof(uint32_t) * 2 + sizeof(uint64_t))
        throw std::runtime_error("checkpoint: truncated file");
    if (std::memcmp(buf.data(), kMagic, 4) != 0)
        throw std::runtime_error("checkpoint: bad magic");

    std::string payload = buf.substr(0, buf.size() - sizeof(uint64_t));
    size_t cpos = buf.size() - sizeof(uint64_t);
    uint64_t stored = take<uint64_t>(buf, cpos);
    if (stored != fnv1a(payload)) throw std::runtime_error("checkpoint: checksum mismatch");

    size_t pos = 4;
    uint32_t version = take<uint32_t>(buf, pos);
    if (version != kVersion) throw std::runtime_error("checkpoint: unsupported version");
    uint32_t count = take<uint32_t>(buf, pos);

    std::vector<CheckpointTensor> tensors;
    tensors.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        CheckpointTensor t;
        uint32_t nlen = take<uint32_t>(buf, pos);
        if (pos + nlen > payload.size()) throw std::runtime_error("checkpoint: truncated file");
        t.name = buf.substr(pos, nlen);
        pos += nlen;
        uint32_t ndims = take<uint32_t>(buf, pos);
        size_t n = 1;
        for (uint32_t d = 0; d < ndims; ++d) {
            t.dims.push_back(take<uint32_t>(buf, pos));
            n *= t.dims.back();
        }
        t.data.resize(n);
        for (size_t k = 0; k < n; ++k) t.data[k] = take<double>(buf, pos);
        tensors.push_back(std::move(t));
    }
    return tensors;
}

}  // namespace sfcorch

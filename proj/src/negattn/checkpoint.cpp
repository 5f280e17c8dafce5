#include "negattn/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace negattn {

namespace {
template <typename T>
void append_le(std::string& out, const double* src, int64_t count) {
    // Little-endian host assumed (x86-64 / aarch64); raw copy of IEEE-754.
    for (int64_t i = 0; i < count; ++i) {
        T v = static_cast<T>(src[i]);
        char buf[sizeof(T)];
        std::memcpy(buf, &v, sizeof(T));
        out.append(buf, sizeof(T));
    }
}
}  // namespace

void Checkpoint::save(const std::string& path, bool store_f32) const {
    const std::string dtype = store_f32 ? "f32" : "f64";
    const size_t elem = store_f32 ? 4 : 8;

    nlohmann::json header = nlohmann::json::object();
    uint64_t offset = 0;
    for (const auto& [name, t] : tensors) {
        const uint64_t nbytes = static_cast<uint64_t>(t.size()) * elem;
        header[name] = {{"dtype", dtype},
                        {"shape", t.shape()},
                        {"data_offsets", {offset, offset + nbytes}}};
        offset += nbytes;
    }
    header["__metadata__"] = metadata;

    const std::string header_str = header.dump();
    std::string blob;
    blob.reserve(offset);
    for (const auto& [name, t] : tensors) {
        if (store_f32) {
            append_le<float>(blob, t.data(), t.size());
        } else {
            append_le<double>(blob, t.data(), t.size());
        }
    }

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    const uint64_t hlen = header_str.size();
    char lenbuf[8];
    std::memcpy(lenbuf, &hlen, 8);
    f.write(lenbuf, 8);
    f.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    f.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!f) throw IoError("short write to '" + path + "'");
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "'");
    char lenbuf[8];
    f.read(lenbuf, 8);
    if (!f) throw IoError("'" + path + "': truncated header length");
    uint64_t hlen = 0;
    std::memcpy(&hlen, lenbuf, 8);
    std::string header_str(hlen, '\0');
    f.read(header_str.data(), static_cast<std::streamsize>(hlen));
    if (!f) throw IoError("'" + path + "': truncated header");

    nlohmann::json header = nlohmann::json::parse(header_str);
    std::string blob((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    Checkpoint ckpt;
    for (auto& [name, entry] : header.items()) {
        if (name == "__metadata__") {
            ckpt.metadata = entry;
            continue;
        }
        const std::string dtype = entry.at("dtype").get<std::string>();
        std::vector<int64_t> shape = entry.at("shape").get<std::vector<int64_t>>();
        const uint64_t begin = entry.at("data_offsets").at(0).get<uint64_t>();
        const uint64_t end = entry.at("data_offsets").at(1).get<uint64_t>();
        if (end > blob.size() || begin > end) {
            throw IoError("'" + path + "': tensor '" + name + "' offsets out of range");
        }
        const int64_t count = shape_numel(shape);
        Tensor t(std::move(shape));
        if (dtype == "f64") {
            if (end - begin != static_cast<uint64_t>(count) * 8) {
                throw IoError("'" + path + "': tensor '" + name + "' length mismatch");
            }
            std::memcpy(t.data(), blob.data() + begin, static_cast<size_t>(count) * 8);
        } else if (dtype == "f32") {
            if (end - begin != static_cast<uint64_t>(count) * 4) {
                throw IoError("'" + path + "': tensor '" + name + "' length mismatch");
            }
            for (int64_t i = 0; i < count; ++i) {
                float v;
                std::memcpy(&v, blob.data() + begin + static_cast<size_t>(i) * 4, 4);
                t[i] = static_cast<double>(v);
            }
        } else {
            throw IoError("'" + path + "': unsupported dtype '" + dtype + "'");
        }
        ckpt.tensors.emplace(name, std::move(t));
    }
    return ckpt;
}

const Tensor& Checkpoint::get(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw IoError("checkpoint: missing tensor '" + name + "'");
    return it->second;
}

}  // namespace negattn

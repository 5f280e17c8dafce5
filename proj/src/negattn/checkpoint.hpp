#ifndef NEGATTN_CHECKPOINT_HPP
#define NEGATTN_CHECKPOINT_HPP

#include <map>
#include <string>

#include <json.hpp>

#include "negattn/tensor.hpp"

namespace negattn {

// Single-file named-tensor container:
//   [u64 LE header length][UTF-8 JSON header][raw little-endian IEEE-754 blobs]
// The header maps tensor name -> {dtype, shape, data_offsets}, plus a
// "__metadata__" object. Offsets are relative to the end of the header.
// Tensors are laid out in name order, so save -> load -> save is
// byte-identical.
struct Checkpoint {
    std::map<std::string, Tensor> tensors;
    nlohmann::json metadata = nlohmann::json::object();

    // dtype "f64" by default; "f32" narrows storage (test mode keeps f64).
    void save(const std::string& path, bool store_f32 = false) const;
    static Checkpoint load(const std::string& path);

    const Tensor& get(const std::string& name) const;
};

}  // namespace negattn

#endif

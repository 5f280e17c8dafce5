#ifndef NEGATTN_TEXT_ENCODER_HPP
#define NEGATTN_TEXT_ENCODER_HPP

#include <string>
#include <unordered_map>
#include <vector>

#include "negattn/layers.hpp"
#include "negattn/rng.hpp"
#include "negattn/tensor.hpp"

namespace negattn {

// Whitespace-tokenized closed vocabulary. Id 0 is the reserved null
// (unconditional) token; "sks" is the reserved identifier and is never
// emitted by the dataset caption generator.
struct Vocabulary {
    std::vector<std::string> tokens;
    std::unordered_map<std::string, int64_t> ids;

    static constexpr int64_t kNullId = 0;

    static Vocabulary standard();
    static Vocabulary from_tokens(std::vector<std::string> toks);

    int64_t size() const { return static_cast<int64_t>(tokens.size()); }
    int64_t id(const std::string& tok) const;         // VocabularyError on miss
    bool contains(const std::string& tok) const { return ids.count(tok) > 0; }
    int64_t identifier_id() const { return id("sks"); }

    std::vector<int64_t> tokenize(const std::string& text) const;
    // Position of the identifier token, or -1.
    static int64_t find(const std::vector<int64_t>& seq, int64_t token_id);
};

// Embedding lookup plus learned positional embedding.
struct TextEncoder {
    Tensor token_emb;  // [V, d_cond]
    Tensor pos_emb;    // [max_len, d_cond]
    Tensor g_token, g_pos;
    int64_t d_cond = 0, max_len = 0;

    void init(int64_t vocab_size, int64_t d_cond_in, int64_t max_len_in, Rng& rng);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);

    // Empty input encodes as the single null token.
    Tensor encode(const std::vector<int64_t>& token_ids) const;  // [L, d_cond]
    void backward(const std::vector<int64_t>& token_ids, const Tensor& dcond);
};

}  // namespace negattn

#endif

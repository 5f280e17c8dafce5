#include "negattn/text_encoder.hpp"

#include <sstream>

namespace negattn {

Vocabulary Vocabulary::from_tokens(std::vector<std::string> toks) {
    Vocabulary v;
    v.tokens = std::move(toks);
    for (size_t i = 0; i < v.tokens.size(); ++i) {
        if (!v.ids.emplace(v.tokens[i], static_cast<int64_t>(i)).second) {
            throw VocabularyError("duplicate token '" + v.tokens[i] + "'");
        }
    }
    if (v.tokens.empty() || v.tokens[0] != "<null>") {
        throw VocabularyError("token id 0 must be the reserved <null> token");
    }
    return v;
}

Vocabulary Vocabulary::standard() {
    return from_tokens({
        "<null>", "a", "photo", "of", "on", "background", "with", "star",
        "circle", "square", "triangle",
        "red", "green", "blue", "yellow", "white", "black", "orange",
        "sks",
    });
}

int64_t Vocabulary::id(const std::string& tok) const {
    auto it = ids.find(tok);
    if (it == ids.end()) throw VocabularyError("unknown token '" + tok + "'");
    return it->second;
}

std::vector<int64_t> Vocabulary::tokenize(const std::string& text) const {
    std::vector<int64_t> out;
    std::istringstream is(text);
    std::string tok;
    while (is >> tok) out.push_back(id(tok));
    return out;
}

int64_t Vocabulary::find(const std::vector<int64_t>& seq, int64_t token_id) {
    for (size_t i = 0; i < seq.size(); ++i) {
        if (seq[i] == token_id) return static_cast<int64_t>(i);
    }
    return -1;
}

void TextEncoder::init(int64_t vocab_size, int64_t d_cond_in, int64_t max_len_in, Rng& rng) {
    d_cond = d_cond_in;
    max_len = max_len_in;
    token_emb = gaussian(rng, {vocab_size, d_cond});
    pos_emb = gaussian(rng, {max_len, d_cond});
    for (int64_t i = 0; i < token_emb.size(); ++i) token_emb[i] *= 0.5;
    for (int64_t i = 0; i < pos_emb.size(); ++i) pos_emb[i] *= 0.1;
    g_token = Tensor({vocab_size, d_cond});
    g_pos = Tensor({max_len, d_cond});
}

void TextEncoder::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".token_emb", &token_emb, &g_token});
    out.push_back({prefix + ".pos_emb", &pos_emb, &g_pos});
}

Tensor TextEncoder::encode(const std::vector<int64_t>& token_ids) const {
    std::vector<int64_t> seq = token_ids;
    if (seq.empty()) seq.push_back(Vocabulary::kNullId);
    const int64_t l = static_cast<int64_t>(seq.size());
    if (l > max_len) {
        throw DimensionError("encode: prompt length " + std::to_string(l) + " exceeds max_len " +
                             std::to_string(max_len));
    }
    Tensor c({l, d_cond});
    for (int64_t i = 0; i < l; ++i) {
        const int64_t tok = seq[static_cast<size_t>(i)];
        if (tok < 0 || tok >= token_emb.dim(0)) {
            throw VocabularyError("encode: token id " + std::to_string(tok) + " out of range");
        }
        for (int64_t j = 0; j < d_cond; ++j) {
            c.at(i, j) = token_emb.at(tok, j) + pos_emb.at(i, j);
        }
    }
    return c;
}

void TextEncoder::backward(const std::vector<int64_t>& token_ids, const Tensor& dcond) {
    std::vector<int64_t> seq = token_ids;
    if (seq.empty()) seq.push_back(Vocabulary::kNullId);
    const int64_t l = static_cast<int64_t>(seq.size());
    for (int64_t i = 0; i < l; ++i) {
        const int64_t tok = seq[static_cast<size_t>(i)];
        for (int64_t j = 0; j < d_cond; ++j) {
            g_token.at(tok, j) += dcond.at(i, j);
            g_pos.at(i, j) += dcond.at(i, j);
        }
    }
}

}  // namespace negattn

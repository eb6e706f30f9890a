#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "pca.hpp"
#include "tsne.hpp"
#include "types.hpp"

namespace vsumm {

enum class ReducerKind { Pca, Tsne };

struct ReducerStep {
    ReducerKind kind = ReducerKind::Pca;
    Index dim = 2;

    bool operator==(const ReducerStep&) const = default;
};

using ReducerChain = std::vector<ReducerStep>;

/// Accepted chains: empty, pca:d, tsne:{2,3}, pca:d+tsne:{2,3}.
inline void validate_chain(const ReducerChain& chain) {
    auto bad = [](const std::string& why) { throw ValidationError("invalid reducer chain: " + why); };
    if (chain.size() > 2) bad("at most two steps");
    for (const auto& step : chain) {
        if (step.dim < 1) bad("dimension must be positive");
        if (step.kind == ReducerKind::Tsne && step.dim != 2 && step.dim != 3) bad("t-SNE output must be 2 or 3");
    }
    if (chain.size() == 2 && !(chain[0].kind == ReducerKind::Pca && chain[1].kind == ReducerKind::Tsne))
        bad("two-step chains must be PCA followed by t-SNE");
}

/// Parses "pca:34+tsne:2"; "none" or "" is the empty chain.
inline ReducerChain parse_chain(const std::string& text) {
    ReducerChain chain;
    if (text.empty() || text == "none") return chain;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, '+')) {
        const auto colon = part.find(':');
        if (colon == std::string::npos) throw ValidationError("invalid reducer step '" + part + "', expected name:dim");
        const std::string name = part.substr(0, colon);
        ReducerStep step;
        if (name == "pca")
            step.kind = ReducerKind::Pca;
        else if (name == "tsne")
            step.kind = ReducerKind::Tsne;
        else
            throw ValidationError("unknown reducer '" + name + "' (accepted: pca, tsne)");
        try {
            std::size_t used = 0;
            step.dim = std::stoll(part.substr(colon + 1), &used);
            if (used != part.size() - colon - 1) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ValidationError("invalid reducer dimension in '" + part + "'");
        }
        chain.push_back(step);
    }
    validate_chain(chain);
    return chain;
}

inline std::string format_chain(const ReducerChain& chain) {
    if (chain.empty()) return "none";
    std::string out;
    for (const auto& s : chain) {
        if (!out.empty()) out += "+";
        out += (s.kind == ReducerKind::Pca ? "pca:" : "tsne:") + std::to_string(s.dim);
    }
    return out;
}

/// Human-readable setting label, e.g. "Euclidean PCA (34) + t-SNE (2)".
inline std::string setting_name(const std::string& distance, const ReducerChain& chain) {
    std::string out = distance;
    if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
    if (chain.empty()) return out + " (no reduction)";
    for (std::size_t i = 0; i < chain.size(); ++i) {
        out += i == 0 ? " " : " + ";
        out += (chain[i].kind == ReducerKind::Pca ? "PCA (" : "t-SNE (") + std::to_string(chain[i].dim) + ")";
    }
    return out;
}

struct ReducedEmbeddingSet {
    EmbeddingSet set;
    Index input_dim = 0;
    ReducerChain applied;  // dims as actually used
    Index intermediate_dim = 0;  // D' when PCA precedes t-SNE, else 0
};

/**
 * Applies the chain left to right. PCA dimensions larger than min(samples, dim)
 * are clamped; the clamped value is what `applied` records.
 */
inline ReducedEmbeddingSet reduce_chain(const EmbeddingSet& input, const ReducerChain& chain,
                                        const TsneConfig& tsne_cfg = {}) {
    validate_chain(chain);
    ReducedEmbeddingSet out;
    out.set = input;
    out.input_dim = input.dim();
    for (const auto& step : chain) {
        ReducerStep used = step;
        if (step.kind == ReducerKind::Pca) {
            used.dim = std::min<Index>(step.dim, std::min(out.set.embeddings.rows(), out.set.embeddings.cols()));
            out.set.embeddings = pca_fit_transform(out.set.embeddings, used.dim).projected;
        } else {
            TsneConfig cfg = tsne_cfg;
            cfg.output_dim = static_cast<int>(step.dim);
            out.set.embeddings = tsne(out.set.embeddings, cfg).embedding;
        }
        out.applied.push_back(used);
    }
    if (out.applied.size() == 2) out.intermediate_dim = out.applied[0].dim;
    return out;
}

}  // namespace vsumm

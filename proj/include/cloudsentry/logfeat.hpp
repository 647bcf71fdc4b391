#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cloudsentry/logsynth.hpp"

namespace cloudsentry {

using Sentence = std::vector<std::string>;

/// Token index. Kept tokens are ordered by (count desc, token asc); the UNK
/// entry is always last and absorbs every token below min_count.
class Vocabulary {
public:
    static constexpr const char* kUnknown = "<unk>";

    static Vocabulary build(const std::vector<Sentence>& sentences, int min_count);

    int size() const noexcept { return static_cast<int>(tokens_.size()); }
    int unknown_index() const noexcept { return size() - 1; }
    /// Index of `token`, or the UNK index.
    int lookup(const std::string& token) const;
    const std::string& token(int index) const { return tokens_.at(static_cast<std::size_t>(index)); }
    long long count(int index) const { return counts_.at(static_cast<std::size_t>(index)); }
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }

    std::vector<int> encode(const Sentence& sentence) const;

private:
    std::vector<std::string> tokens_;
    std::vector<long long> counts_;
    std::unordered_map<std::string, int> index_;
};

/// One sentence per (vertex, step): the tokens a system logged in that step.
std::vector<Sentence> corpus_sentences(const LogCorpus& corpus);

Vocabulary build_vocab(const LogCorpus& corpus, int min_count);

/// (center, context) for every pair of positions at distance 1..w.
std::vector<std::pair<int, int>> extract_pairs(std::span<const int> sequence, int window);

struct SkipGramConfig {
    int dim = 16;
    int window = 2;
    int negatives = 5;
    double learning_rate = 0.025;
    int epochs = 5;
    int min_count = 1;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Token vectors f_NL: one row per vocabulary entry (UNK last).
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    EmbeddingTable(std::vector<std::string> tokens, Eigen::MatrixXd vectors);

    int size() const noexcept { return static_cast<int>(tokens_.size()); }
    int dim() const noexcept { return static_cast<int>(vectors_.cols()); }
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }
    const Eigen::MatrixXd& vectors() const noexcept { return vectors_; }
    Eigen::MatrixXd& vectors() noexcept { return vectors_; }
    /// Row of `token`, falling back to the UNK row.
    int row(const std::string& token) const;
    Eigen::VectorXd vector(const std::string& token) const { return vectors_.row(row(token)).transpose(); }

    bool operator==(const EmbeddingTable& other) const;

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
    Eigen::MatrixXd vectors_;
};

/// Seeded uniform(-0.5/d, 0.5/d) input vectors, as training starts from.
EmbeddingTable initial_embeddings(const Vocabulary& vocab, const SkipGramConfig& config);

struct PairLoss {
    double loss = 0.0;
    Eigen::VectorXd grad_center;                 // d loss / d v_c
    Eigen::VectorXd grad_context;                // d loss / d u_o
    std::vector<Eigen::VectorXd> grad_negatives; // d loss / d u_neg
};

/// -log sigma(u_o . v_c) - sum_k log sigma(-u_k . v_c) and its gradient.
PairLoss negative_sampling_loss(const Eigen::VectorXd& center, const Eigen::VectorXd& context,
                                const std::vector<Eigen::VectorXd>& negatives);

struct TrainedEmbeddings {
    EmbeddingTable table;
    std::vector<double> epoch_loss;  // mean pair loss per epoch
};

TrainedEmbeddings train_embeddings(const std::vector<Sentence>& sentences, const Vocabulary& vocab,
                                   const SkipGramConfig& config);
TrainedEmbeddings train_embeddings(const LogCorpus& corpus, const SkipGramConfig& config);

inline constexpr int kDefaultFeatureWindow = 256;

/// Mean of the input vectors of the last min(window, len) tokens.
Eigen::VectorXd featurize_vertex(std::span<const std::string> tokens, const EmbeddingTable& table,
                                 int window = kDefaultFeatureWindow);

/// Row v = featurize_vertex(tokens of v).
Eigen::MatrixXd featurize_all(const LogCorpus& corpus, const EmbeddingTable& table,
                              int window = kDefaultFeatureWindow);

std::string format_embeddings(const EmbeddingTable& table);
EmbeddingTable parse_embeddings(const std::string& text);
void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path);
EmbeddingTable load_embeddings(const std::filesystem::path& path);

}  // namespace cloudsentry

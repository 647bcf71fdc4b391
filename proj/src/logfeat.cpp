#include "cloudsentry/logfeat.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "cloudsentry/error.hpp"
#include "cloudsentry/textio.hpp"

namespace cloudsentry {

Vocabulary Vocabulary::build(const std::vector<Sentence>& sentences, int min_count) {
    if (min_count < 1) throw InvalidArgument("min_count must be >= 1");
    std::map<std::string, long long> counts;
    for (const auto& s : sentences)
        for (const auto& tok : s) ++counts[tok];
    if (counts.empty()) throw InvalidArgument("cannot build a vocabulary from an empty corpus");

    std::vector<std::pair<std::string, long long>> kept;
    long long unknown = 0;
    for (const auto& [tok, c] : counts) {
        if (c >= min_count) {
            kept.emplace_back(tok, c);
        } else {
            unknown += c;
        }
    }
    if (kept.empty()) {
        throw InvalidArgument("corpus is empty after filtering with min_count=" + std::to_string(min_count));
    }
    // std::map iteration is token-ascending, so a stable sort on count keeps the tie-break.
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

    Vocabulary vocab;
    for (auto& [tok, c] : kept) {
        vocab.index_.emplace(tok, static_cast<int>(vocab.tokens_.size()));
        vocab.tokens_.push_back(tok);
        vocab.counts_.push_back(c);
    }
    vocab.tokens_.emplace_back(kUnknown);
    vocab.counts_.push_back(unknown);
    return vocab;
}

int Vocabulary::lookup(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? unknown_index() : it->second;
}

std::vector<int> Vocabulary::encode(const Sentence& sentence) const {
    std::vector<int> out;
    out.reserve(sentence.size());
    for (const auto& tok : sentence) out.push_back(lookup(tok));
    return out;
}

std::vector<Sentence> corpus_sentences(const LogCorpus& corpus) {
    std::vector<Sentence> out;
    for (const auto& entries : corpus.entries) {
        for (std::size_t i = 0; i < entries.size();) {
            Sentence s;
            const int step = entries[i].step;
            for (; i < entries.size() && entries[i].step == step; ++i)
                s.insert(s.end(), entries[i].tokens.begin(), entries[i].tokens.end());
            out.push_back(std::move(s));
        }
    }
    return out;
}

Vocabulary build_vocab(const LogCorpus& corpus, int min_count) {
    return Vocabulary::build(corpus_sentences(corpus), min_count);
}

std::vector<std::pair<int, int>> extract_pairs(std::span<const int> sequence, int window) {
    if (window < 1) throw InvalidArgument("skip-gram window must be >= 1");
    std::vector<std::pair<int, int>> pairs;
    const auto len = static_cast<std::ptrdiff_t>(sequence.size());
    for (std::ptrdiff_t i = 0; i < len; ++i) {
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - window);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(len - 1, i + window);
        for (std::ptrdiff_t j = lo; j <= hi; ++j)
            if (j != i) pairs.emplace_back(sequence[static_cast<std::size_t>(i)], sequence[static_cast<std::size_t>(j)]);
    }
    return pairs;
}

void SkipGramConfig::validate() const {
    if (dim < 2) throw InvalidArgument("embedding dim must be >= 2");
    if (window < 1) throw InvalidArgument("skip-gram window must be >= 1");
    if (negatives < 1) throw InvalidArgument("negatives must be >= 1");
    if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
    if (epochs < 0) throw InvalidArgument("epochs must be >= 0");
    if (min_count < 1) throw InvalidArgument("min_count must be >= 1");
}

EmbeddingTable::EmbeddingTable(std::vector<std::string> tokens, Eigen::MatrixXd vectors)
    : tokens_(std::move(tokens)), vectors_(std::move(vectors)) {
    if (static_cast<Eigen::Index>(tokens_.size()) != vectors_.rows()) {
        throw InvalidArgument("embedding table has " + std::to_string(tokens_.size()) + " tokens but " +
                              std::to_string(vectors_.rows()) + " rows");
    }
    if (tokens_.empty() || tokens_.back() != Vocabulary::kUnknown) {
        throw InvalidArgument(std::string("embedding table must end with the ") + Vocabulary::kUnknown + " row");
    }
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
            throw InvalidArgument("duplicate token '" + tokens_[i] + "' in embedding table");
        }
    }
}

int EmbeddingTable::row(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? size() - 1 : it->second;
}

bool EmbeddingTable::operator==(const EmbeddingTable& other) const {
    return tokens_ == other.tokens_ && vectors_.rows() == other.vectors_.rows() &&
           vectors_.cols() == other.vectors_.cols() && vectors_ == other.vectors_;
}

EmbeddingTable initial_embeddings(const Vocabulary& vocab, const SkipGramConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    const double half = 0.5 / config.dim;
    std::uniform_real_distribution<double> init(-half, half);
    Eigen::MatrixXd vectors(vocab.size(), config.dim);
    for (Eigen::Index r = 0; r < vectors.rows(); ++r)
        for (Eigen::Index c = 0; c < vectors.cols(); ++c) vectors(r, c) = init(rng);
    return EmbeddingTable(vocab.tokens(), std::move(vectors));
}

namespace {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// log(sigma(x)) without overflow.
double log_sigmoid(double x) {
    return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

}  // namespace

PairLoss negative_sampling_loss(const Eigen::VectorXd& center, const Eigen::VectorXd& context,
                                const std::vector<Eigen::VectorXd>& negatives) {
    PairLoss out;
    const double s_pos = context.dot(center);
    const double g_pos = sigmoid(s_pos) - 1.0;
    out.loss = -log_sigmoid(s_pos);
    out.grad_center = g_pos * context;
    out.grad_context = g_pos * center;
    out.grad_negatives.reserve(negatives.size());
    for (const auto& neg : negatives) {
        const double s = neg.dot(center);
        const double g = sigmoid(s);
        out.loss -= log_sigmoid(-s);
        out.grad_center += g * neg;
        out.grad_negatives.push_back(g * center);
    }
    return out;
}

TrainedEmbeddings train_embeddings(const std::vector<Sentence>& sentences, const Vocabulary& vocab,
                                   const SkipGramConfig& config) {
    config.validate();
    int usable = 0;
    for (int i = 0; i < vocab.size(); ++i)
        if (vocab.count(i) > 0) ++usable;
    if (usable < 2) {
        throw InvalidArgument("vocabulary too small for negative sampling: " + std::to_string(usable) +
                              " token(s) with nonzero count");
    }

    TrainedEmbeddings out{initial_embeddings(vocab, config), {}};
    Eigen::MatrixXd& input = out.table.vectors();
    Eigen::MatrixXd output = Eigen::MatrixXd::Zero(vocab.size(), config.dim);

    // Noise distribution: unigram counts raised to 3/4.
    std::vector<double> noise(static_cast<std::size_t>(vocab.size()));
    for (int i = 0; i < vocab.size(); ++i) noise[static_cast<std::size_t>(i)] = std::pow(static_cast<double>(vocab.count(i)), 0.75);
    std::discrete_distribution<int> draw_noise(noise.begin(), noise.end());
    std::mt19937_64 rng(config.seed ^ 0x6e6567617469766bULL);

    std::vector<std::vector<std::pair<int, int>>> pairs;
    std::size_t total_pairs = 0;
    for (const auto& s : sentences) {
        const auto encoded = vocab.encode(s);
        pairs.push_back(extract_pairs(encoded, config.window));
        total_pairs += pairs.back().size();
    }
    if (total_pairs == 0 && config.epochs > 0) throw InvalidArgument("corpus yields no skip-gram pairs");

    const double total_updates = static_cast<double>(total_pairs) * config.epochs;
    std::size_t done = 0;
    std::vector<int> neg_ids;
    std::vector<Eigen::VectorXd> neg_vecs;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        double loss_sum = 0.0;
        for (const auto& sentence_pairs : pairs) {
            for (const auto& [center, context] : sentence_pairs) {
                // Linear decay to 1e-4 of the initial rate, as in word2vec.
                const double lr = config.learning_rate * std::max(1e-4, 1.0 - static_cast<double>(done) / total_updates);
                ++done;
                neg_ids.clear();
                neg_vecs.clear();
                for (int k = 0; k < config.negatives; ++k) {
                    const int id = draw_noise(rng);
                    if (id == context) continue;
                    neg_ids.push_back(id);
                    neg_vecs.push_back(output.row(id).transpose());
                }
                const Eigen::VectorXd v_c = input.row(center).transpose();
                const auto result = negative_sampling_loss(v_c, output.row(context).transpose(), neg_vecs);
                loss_sum += result.loss;
                output.row(context) -= lr * result.grad_context.transpose();
                for (std::size_t k = 0; k < neg_ids.size(); ++k)
                    output.row(neg_ids[k]) -= lr * result.grad_negatives[k].transpose();
                input.row(center) -= lr * result.grad_center.transpose();
            }
        }
        const double mean = loss_sum / static_cast<double>(total_pairs);
        if (!std::isfinite(mean) || !input.allFinite()) {
            throw NumericError("skip-gram loss became non-finite in epoch " + std::to_string(epoch + 1));
        }
        out.epoch_loss.push_back(mean);
    }
    return out;
}

TrainedEmbeddings train_embeddings(const LogCorpus& corpus, const SkipGramConfig& config) {
    const auto sentences = corpus_sentences(corpus);
    return train_embeddings(sentences, Vocabulary::build(sentences, config.min_count), config);
}

Eigen::VectorXd featurize_vertex(std::span<const std::string> tokens, const EmbeddingTable& table, int window) {
    if (tokens.empty()) throw InvalidArgument("empty log sequence: no features for this vertex");
    if (window < 1) throw InvalidArgument("feature window must be >= 1");
    const std::size_t take = std::min(tokens.size(), static_cast<std::size_t>(window));
    Eigen::VectorXd r = Eigen::VectorXd::Zero(table.dim());
    for (std::size_t i = tokens.size() - take; i < tokens.size(); ++i) r += table.vectors().row(table.row(tokens[i])).transpose();
    return r / static_cast<double>(take);
}

Eigen::MatrixXd featurize_all(const LogCorpus& corpus, const EmbeddingTable& table, int window) {
    Eigen::MatrixXd features(corpus.size(), table.dim());
    for (VertexId v = 0; v < corpus.size(); ++v) {
        const auto tokens = corpus.tokens(v);
        if (tokens.empty()) throw InvalidArgument("vertex " + std::to_string(v) + " has no logs");
        features.row(v) = featurize_vertex(tokens, table, window).transpose();
    }
    return features;
}

std::string format_embeddings(const EmbeddingTable& table) {
    std::ostringstream out;
    out << table.size() << ' ' << table.dim() << '\n';
    for (int r = 0; r < table.size(); ++r) {
        out << table.tokens()[static_cast<std::size_t>(r)];
        for (int c = 0; c < table.dim(); ++c) out << ' ' << format_double(table.vectors()(r, c));
        out << '\n';
    }
    return out.str();
}

EmbeddingTable parse_embeddings(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("embedding file is empty");
    std::istringstream header(line);
    long rows = 0, dim = 0;
    if (!(header >> rows >> dim) || rows < 1 || dim < 1) throw FormatError("embedding header must be '<rows> <dim>'");
    std::vector<std::string> tokens;
    Eigen::MatrixXd vectors(rows, dim);
    for (long r = 0; r < rows; ++r) {
        if (!std::getline(in, line)) throw FormatError("embedding file truncated at row " + std::to_string(r));
        std::istringstream fields(line);
        std::string tok;
        fields >> tok;
        tokens.push_back(tok);
        for (long c = 0; c < dim; ++c) {
            std::string num;
            double value = 0.0;
            if (!(fields >> num) || !parse_double(num, value)) {
                throw FormatError("embedding line " + std::to_string(r + 2) + ": bad value in column " +
                                  std::to_string(c));
            }
            vectors(r, c) = value;
        }
    }
    try {
        return EmbeddingTable(std::move(tokens), std::move(vectors));
    } catch (const InvalidArgument& e) {
        throw FormatError(e.what());
    }
}

void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path) {
    write_text_file(path, format_embeddings(table));
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
    return parse_embeddings(read_text_file(path));
}

}  // namespace cloudsentry

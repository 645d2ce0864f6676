#include "xmtf/scorers.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "xmtf/error.hpp"
#include "xmtf/rng.hpp"
#include "xmtf/utf8.hpp"

namespace xmtf {
namespace {

// Length-prefixed feed so ("ab", "c") and ("a", "bc") hash differently.
void hash_piece(Fnv1a64& h, std::string_view piece) {
  std::uint64_t n = piece.size();
  for (int i = 0; i < 8; ++i) h.update_byte(static_cast<std::uint8_t>(n >> (8 * i)));
  h.update(piece);
}

bool is_ascii_space(char32_t cp) {
  return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' ||
         cp == U'\f' || cp == U'\v';
}

}  // namespace

// ---------------------------------------------------------------------------
// TableScorer

void TableScorer::set(const std::string& context,
                      const std::string& continuation, double ll) {
  table_[{context, continuation}] = ll;
}

double TableScorer::loglikelihood(const std::string& context,
                                  const std::string& continuation) {
  auto it = table_.find({context, continuation});
  return it == table_.end() ? default_ll_ : it->second;
}

std::string TableScorer::generate(const std::string&, const GenParams&) {
  throw ScorerError("TableScorer does not support generation");
}

TableScorer TableScorer::from_json(const json& config) {
  if (!config.is_object()) {
    throw ValidationError("table scorer config must be an object");
  }
  TableScorer scorer(config.value("default", -1e9));
  if (config.contains("entries")) {
    const json& entries = config.at("entries");
    if (!entries.is_array()) {
      throw ValidationError("table scorer entries must be an array");
    }
    for (const json& e : entries) {
      if (!e.is_object() || !e.contains("context") ||
          !e.contains("continuation") || !e.contains("loglikelihood")) {
        throw ValidationError(
            "table scorer entry needs context, continuation, loglikelihood");
      }
      scorer.set(e.at("context").get<std::string>(),
                 e.at("continuation").get<std::string>(),
                 e.at("loglikelihood").get<double>());
    }
  }
  return scorer;
}

TableScorer TableScorer::load(const std::string& path) {
  return from_json(read_json_file(path));
}

// ---------------------------------------------------------------------------
// NGramScorer

NGramScorer::NGramScorer(std::size_t order, double alpha)
    : order_(order), alpha_(alpha) {
  if (order_ < 1) throw ValidationError("ngram order must be >= 1");
  if (!(alpha_ > 0.0)) throw ValidationError("ngram alpha must be > 0");
}

std::vector<std::string> NGramScorer::tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  for (char32_t cp : decode_utf8(text)) {
    if (is_ascii_space(cp)) continue;
    tokens.push_back(encode_utf8(cp));
  }
  return tokens;
}

std::string NGramScorer::history_key(
    const std::vector<std::string>& history) const {
  const std::size_t keep = order_ - 1;
  const std::size_t start = history.size() > keep ? history.size() - keep : 0;
  std::string key;
  for (std::size_t i = start; i < history.size(); ++i) {
    // Tokens are single code points (<= 4 bytes); prefix with the byte
    // length so keys cannot collide across token boundaries.
    key.push_back(static_cast<char>(history[i].size()));
    key += history[i];
  }
  return key;
}

void NGramScorer::fit(const std::vector<std::string>& corpus) {
  for (const std::string& text : corpus) {
    const std::vector<std::string> tokens = tokenize(text);
    std::vector<std::string> history;
    for (const std::string& token : tokens) {
      const std::string key = history_key(history);
      counts_[key][token] += 1;
      totals_[key] += 1;
      vocab_.insert(token);
      history.push_back(token);
    }
  }
}

double NGramScorer::token_probability(const std::vector<std::string>& history,
                                      const std::string& token) const {
  if (vocab_.empty()) throw ScorerError("ngram scorer has an empty corpus");
  const std::string key = history_key(history);
  std::uint64_t total = 0;
  std::uint64_t count = 0;
  auto total_it = totals_.find(key);
  if (total_it != totals_.end()) {
    total = total_it->second;
    const auto& row = counts_.at(key);
    auto count_it = row.find(token);
    if (count_it != row.end()) count = count_it->second;
  }
  const double denom =
      static_cast<double>(total) + alpha_ * static_cast<double>(vocab_.size());
  return (static_cast<double>(count) + alpha_) / denom;
}

std::vector<std::pair<std::string, double>> NGramScorer::next_distribution(
    const std::vector<std::string>& history) const {
  std::vector<std::pair<std::string, double>> dist;
  dist.reserve(vocab_.size());
  for (const std::string& token : vocab_) {
    dist.emplace_back(token, token_probability(history, token));
  }
  return dist;
}

double NGramScorer::loglikelihood(const std::string& context,
                                  const std::string& continuation) {
  std::vector<std::string> history = tokenize(context);
  const std::vector<std::string> cont = tokenize(continuation);
  double ll = 0.0;
  for (const std::string& token : cont) {
    ll += std::log(token_probability(history, token));
    history.push_back(token);
  }
  return ll;
}

std::optional<std::string> NGramScorer::next_token(
    const std::string& context, const std::vector<std::string>& generated,
    bool /*allow_eos*/, const GenParams& params) {
  // The model has no end-of-sequence event; generation length is bounded by
  // max_new_tokens and stop sequences.
  std::vector<std::string> history = tokenize(context);
  history.insert(history.end(), generated.begin(), generated.end());
  std::vector<std::pair<std::string, double>> dist = next_distribution(history);
  if (dist.empty()) throw ScorerError("ngram scorer has an empty corpus");

  if (params.temperature == 0.0) {
    // Greedy; ties resolve to the lexicographically smallest token because
    // the distribution is emitted in sorted order.
    const auto best = std::max_element(
        dist.begin(), dist.end(),
        [](const auto& a, const auto& b) { return a.second < b.second; });
    return best->first;
  }

  // Restrict to the top_k most probable tokens (ties again lexicographic),
  // then sample with temperature-scaled weights.
  if (params.top_k > 0 && params.top_k < dist.size()) {
    std::stable_sort(dist.begin(), dist.end(),
                     [](const auto& a, const auto& b) {
                       return a.second > b.second;
                     });
    dist.resize(params.top_k);
  }
  double total = 0.0;
  for (auto& [token, p] : dist) {
    p = std::pow(p, 1.0 / params.temperature);
    total += p;
  }

  Fnv1a64 h;
  hash_piece(h, context);
  for (const std::string& token : generated) hash_piece(h, token);
  std::uint64_t state = params.seed ^ h.digest();
  std::mt19937_64 rng(splitmix64(state));
  const double u = uniform_unit(rng) * total;

  double cum = 0.0;
  for (const auto& [token, p] : dist) {
    cum += p;
    if (u < cum) return token;
  }
  return dist.back().first;
}

std::string NGramScorer::detokenize(
    const std::vector<std::string>& tokens) const {
  std::string out;
  for (const std::string& token : tokens) out += token;
  return out;
}

std::string NGramScorer::generate(const std::string& context,
                                  const GenParams& params) {
  return generate_text(*this, context, params);
}

// ---------------------------------------------------------------------------
// RandomScorer

double RandomScorer::loglikelihood(const std::string& context,
                                   const std::string& continuation) {
  Fnv1a64 h;
  hash_piece(h, context);
  hash_piece(h, continuation);
  std::uint64_t state = seed_ ^ h.digest();
  const std::uint64_t bits = splitmix64(state);
  // Uniform in (0, 1] so the log is finite.
  const double u = static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
  return std::log(u);
}

std::string RandomScorer::generate(const std::string&, const GenParams&) {
  throw ScorerError("RandomScorer does not support generation");
}

// ---------------------------------------------------------------------------
// FixedSequenceScorer

FixedSequenceScorer::FixedSequenceScorer(std::vector<std::string> tokens,
                                         std::string fallback)
    : tokens_(std::move(tokens)), fallback_(std::move(fallback)) {
  if (fallback_.empty()) {
    throw ValidationError("fixed sequence fallback token must be non-empty");
  }
}

double FixedSequenceScorer::loglikelihood(const std::string&,
                                          const std::string& continuation) {
  return continuation == detokenize(tokens_) ? 0.0 : -1e9;
}

std::optional<std::string> FixedSequenceScorer::next_token(
    const std::string&, const std::vector<std::string>& generated,
    bool allow_eos, const GenParams&) {
  if (generated.size() < tokens_.size()) return tokens_[generated.size()];
  if (allow_eos) return std::nullopt;
  return fallback_;
}

std::string FixedSequenceScorer::generate(const std::string& context,
                                          const GenParams& params) {
  return generate_text(*this, context, params);
}

NGramScorer ngram_train(const std::string& text, std::size_t order,
                        double alpha) {
  if (NGramScorer::tokenize(text).empty()) {
    throw ValidationError("ngram training text is empty");
  }
  NGramScorer scorer(order, alpha);
  scorer.fit({text});
  return scorer;
}

// ---------------------------------------------------------------------------
// Factory

std::unique_ptr<Scorer> scorer_from_json(const json& config) {
  if (!config.is_object() || !config.contains("type")) {
    throw ValidationError("scorer config must be an object with a type field");
  }
  const std::string type = config.at("type").get<std::string>();
  if (type == "table") {
    if (config.contains("path")) {
      return std::make_unique<TableScorer>(
          TableScorer::load(config.at("path").get<std::string>()));
    }
    return std::make_unique<TableScorer>(TableScorer::from_json(config));
  }
  if (type == "ngram") {
    auto scorer = std::make_unique<NGramScorer>(
        config.value("order", std::size_t{2}), config.value("alpha", 1.0));
    std::vector<std::string> corpus;
    if (config.contains("corpus")) {
      for (const json& text : config.at("corpus")) {
        corpus.push_back(text.get<std::string>());
      }
    } else if (config.contains("corpus_path")) {
      corpus.push_back(read_text_file(config.at("corpus_path").get<std::string>()));
    } else {
      throw ValidationError("ngram scorer config needs corpus or corpus_path");
    }
    scorer->fit(corpus);
    return scorer;
  }
  if (type == "random") {
    return std::make_unique<RandomScorer>(config.value("seed", std::uint64_t{0}));
  }
  if (type == "fixed") {
    std::vector<std::string> tokens;
    if (config.contains("tokens")) {
      for (const json& t : config.at("tokens")) {
        tokens.push_back(t.get<std::string>());
      }
    }
    return std::make_unique<FixedSequenceScorer>(
        std::move(tokens), config.value("fallback", std::string("<pad>")));
  }
  throw ValidationError("unknown scorer type: " + type);
}

std::unique_ptr<Scorer> load_scorer(const std::string& path) {
  return scorer_from_json(read_json_file(path));
}

}  // namespace xmtf

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace emsa {

// The six response-emotion categories. The declaration order doubles as the
// deterministic tie-break order for classification.
enum class Emotion : uint8_t { Happy = 0, Angry, Disgust, Sad, Like, Neutral };

inline constexpr int kNumEmotions = 6;

std::string_view to_string(Emotion e);
std::optional<Emotion> parse_emotion(std::string_view name);
std::span<const Emotion> all_emotions();

using TokenId = uint32_t;
using TokenSeq = std::vector<TokenId>;

// Splits text into tokens: whitespace-delimited words with punctuation split
// off as single-character tokens, and CJK characters emitted one token per
// character. ASCII and Latin-1 letters are lowercased; other scripts are
// kept as-is. Operates on code points as given (no canonical normalization
// pass); invalid UTF-8 bytes become single-byte tokens.
std::vector<std::string> tokenize(std::string_view text);

// Joins tokens with single spaces.
std::string detokenize(std::span<const std::string> tokens);

// A tokenized post/response pair before vocabulary encoding.
struct RawPair {
  std::vector<std::string> post;
  std::vector<std::string> response;
  Emotion label = Emotion::Neutral;
};

enum class CorpusFormat { Tsv, Jsonl };

std::optional<CorpusFormat> parse_format(std::string_view name);

// Reads labeled dialogue data. TSV records are `post TAB response TAB
// emotion`; JSONL records are objects with keys "post", "response",
// "emotion". Both UTF-8. Blank lines are skipped. Malformed records and
// unknown emotion labels raise DataError carrying the line number.
std::vector<RawPair> load_corpus(const std::filesystem::path& path,
                                 CorpusFormat format);

// Token/id bijection with four reserved ids. Reserved tokens can never be
// produced by tokenize(), so raw text always encodes to non-reserved ids
// (or UNK). Immutable once built; safe for concurrent reads.
class Vocabulary {
 public:
  static constexpr TokenId kUnk = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kPad = 3;
  static constexpr TokenId kNumReserved = 4;

  Vocabulary();

  // Tokens with corpus frequency < min_count are excluded and encode as UNK.
  // Ids are assigned by frequency (descending), ties broken lexicographically,
  // so identical corpora always produce identical vocabularies.
  static Vocabulary build(std::span<const RawPair> pairs, int min_count);

  TokenId id(std::string_view token) const;  // kUnk when absent
  const std::string& token(TokenId id) const;
  bool contains(std::string_view token) const;
  static bool is_reserved(TokenId id) { return id < kNumReserved; }

  size_t size() const { return tokens_.size(); }
  size_t num_words() const { return tokens_.size() - kNumReserved; }
  // Tokens that may appear in an encoded utterance: words plus UNK.
  size_t num_scorable() const { return tokens_.size() - 3; }
  // Next-token prediction events: scorable tokens plus EOS.
  size_t num_events() const { return tokens_.size() - 2; }

  TokenSeq encode(std::span<const std::string> tokens) const;
  std::vector<std::string> decode(std::span<const TokenId> ids) const;

  // One `token TAB id` line per entry, ordered by id.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// A vocabulary-encoded training or evaluation example.
struct DialoguePair {
  TokenSeq post;
  TokenSeq response;
  Emotion label = Emotion::Neutral;
};

DialoguePair encode_pair(const Vocabulary& vocab, const RawPair& pair);
std::vector<DialoguePair> encode_pairs(const Vocabulary& vocab,
                                       std::span<const RawPair> pairs);

}  // namespace emsa

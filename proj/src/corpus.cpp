#include "emsa/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "emsa/errors.hpp"

namespace emsa {

namespace {

constexpr std::array<Emotion, 6> kAllEmotions = {
    Emotion::Happy, Emotion::Angry, Emotion::Disgust,
    Emotion::Sad,   Emotion::Like,  Emotion::Neutral};

constexpr std::array<std::string_view, 6> kEmotionNames = {
    "happy", "angry", "disgust", "sad", "like", "neutral"};

const std::array<std::string, 4> kReservedTokens = {"<unk>", "<s>", "</s>",
                                                    "<pad>"};

bool is_space_cp(char32_t c) {
  return (c >= 0x09 && c <= 0x0D) || c == 0x20 || c == 0x85 || c == 0xA0 ||
         c == 0x1680 || (c >= 0x2000 && c <= 0x200A) || c == 0x2028 ||
         c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000;
}

// Scripts written without whitespace word boundaries; tokenized one
// character at a time. Covers CJK ideographs, kana, Hangul and the
// compatibility blocks.
bool is_cjk_cp(char32_t c) {
  return (c >= 0x2E80 && c <= 0x9FFF) || (c >= 0xA000 && c <= 0xA4CF) ||
         (c >= 0xAC00 && c <= 0xD7A3) || (c >= 0xF900 && c <= 0xFAFF) ||
         (c >= 0x20000 && c <= 0x2FA1F);
}

bool is_punct_cp(char32_t c) {
  if (c < 0x80) {
    return std::ispunct(static_cast<unsigned char>(c)) != 0;
  }
  return (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E) ||
         (c >= 0xFF01 && c <= 0xFF0F) || (c >= 0xFF1A && c <= 0xFF20) ||
         (c >= 0xFF3B && c <= 0xFF40) || (c >= 0xFF5B && c <= 0xFF65);
}

char32_t lowercase_cp(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 32;
  // Latin-1 capital letters, skipping the multiplication sign.
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
  return c;
}

// Decodes the code point at byte offset i, advancing i. Invalid sequences
// yield the single raw byte value so tokenization never fails.
char32_t decode_utf8(std::string_view s, size_t& i) {
  const auto byte = [&](size_t k) { return static_cast<unsigned char>(s[k]); };
  const unsigned char b0 = byte(i);
  size_t len = 0;
  char32_t cp = 0;
  if (b0 < 0x80) {
    i += 1;
    return b0;
  } else if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    i += 1;
    return b0;
  }
  if (i + len > s.size()) {
    i += 1;
    return b0;
  }
  for (size_t k = 1; k < len; ++k) {
    const unsigned char bk = byte(i + k);
    if ((bk & 0xC0) != 0x80) {
      i += 1;
      return b0;
    }
    cp = (cp << 6) | (bk & 0x3F);
  }
  i += len;
  return cp;
}

void append_utf8(std::string& out, char32_t c) {
  if (c < 0x80) {
    out.push_back(static_cast<char>(c));
  } else if (c < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (c >> 6)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else if (c < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (c >> 12)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (c >> 18)));
    out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  }
}

Emotion parse_label_or_throw(std::string_view name, size_t line_no) {
  auto e = parse_emotion(name);
  if (!e) {
    throw DataError("line " + std::to_string(line_no) + ": unknown label \"" +
                    std::string(name) + "\"");
  }
  return *e;
}

std::vector<std::string> tokenize_field_or_throw(std::string_view text,
                                                 std::string_view field,
                                                 size_t line_no) {
  auto toks = tokenize(text);
  if (toks.empty()) {
    throw DataError("line " + std::to_string(line_no) + ": empty " +
                    std::string(field));
  }
  return toks;
}

}  // namespace

std::string_view to_string(Emotion e) {
  return kEmotionNames[static_cast<size_t>(e)];
}

std::optional<Emotion> parse_emotion(std::string_view name) {
  for (size_t i = 0; i < kEmotionNames.size(); ++i) {
    if (name == kEmotionNames[i]) return kAllEmotions[i];
  }
  return std::nullopt;
}

std::span<const Emotion> all_emotions() { return kAllEmotions; }

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string word;
  const auto flush = [&] {
    if (!word.empty()) {
      out.push_back(word);
      word.clear();
    }
  };
  size_t i = 0;
  while (i < text.size()) {
    const char32_t cp = decode_utf8(text, i);
    if (is_space_cp(cp)) {
      flush();
    } else if (is_cjk_cp(cp) || is_punct_cp(cp)) {
      flush();
      std::string tok;
      append_utf8(tok, cp);
      out.push_back(std::move(tok));
    } else {
      append_utf8(word, lowercase_cp(cp));
    }
  }
  flush();
  return out;
}

std::string detokenize(std::span<const std::string> tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::optional<CorpusFormat> parse_format(std::string_view name) {
  if (name == "tsv") return CorpusFormat::Tsv;
  if (name == "jsonl") return CorpusFormat::Jsonl;
  return std::nullopt;
}

std::vector<RawPair> load_corpus(const std::filesystem::path& path,
                                 CorpusFormat format) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path.string());

  std::vector<RawPair> pairs;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::string post_text, response_text, label_text;
    if (format == CorpusFormat::Tsv) {
      const size_t t1 = line.find('\t');
      const size_t t2 = t1 == std::string::npos ? std::string::npos
                                                : line.find('\t', t1 + 1);
      if (t1 == std::string::npos || t2 == std::string::npos ||
          line.find('\t', t2 + 1) != std::string::npos) {
        throw DataError("line " + std::to_string(line_no) +
                        ": expected 3 tab-separated fields");
      }
      post_text = line.substr(0, t1);
      response_text = line.substr(t1 + 1, t2 - t1 - 1);
      label_text = line.substr(t2 + 1);
    } else {
      nlohmann::json rec;
      try {
        rec = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw DataError("line " + std::to_string(line_no) +
                        ": invalid JSON: " + e.what());
      }
      if (!rec.is_object() || !rec.contains("post") ||
          !rec.contains("response") || !rec.contains("emotion") ||
          !rec["post"].is_string() || !rec["response"].is_string() ||
          !rec["emotion"].is_string()) {
        throw DataError("line " + std::to_string(line_no) +
                        ": expected string fields post/response/emotion");
      }
      post_text = rec["post"].get<std::string>();
      response_text = rec["response"].get<std::string>();
      label_text = rec["emotion"].get<std::string>();
    }

    RawPair pair;
    pair.post = tokenize_field_or_throw(post_text, "post", line_no);
    pair.response = tokenize_field_or_throw(response_text, "response", line_no);
    pair.label = parse_label_or_throw(label_text, line_no);
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

Vocabulary::Vocabulary() {
  for (TokenId i = 0; i < kNumReserved; ++i) {
    tokens_.push_back(kReservedTokens[i]);
    index_.emplace(kReservedTokens[i], i);
  }
}

Vocabulary Vocabulary::build(std::span<const RawPair> pairs, int min_count) {
  if (pairs.empty()) throw DataError("cannot build vocabulary: empty corpus");
  if (min_count < 1) throw UsageError("min_count must be >= 1");

  std::unordered_map<std::string, uint64_t> freq;
  for (const RawPair& p : pairs) {
    for (const auto& t : p.post) ++freq[t];
    for (const auto& t : p.response) ++freq[t];
  }

  std::vector<std::pair<std::string, uint64_t>> kept;
  kept.reserve(freq.size());
  for (auto& [tok, n] : freq) {
    if (n >= static_cast<uint64_t>(min_count)) kept.emplace_back(tok, n);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  for (auto& [tok, n] : kept) {
    const TokenId id = static_cast<TokenId>(v.tokens_.size());
    v.index_.emplace(tok, id);
    v.tokens_.push_back(tok);
  }
  return v;
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) {
    throw InternalError("token id " + std::to_string(id) +
                        " out of range (vocabulary size " +
                        std::to_string(tokens_.size()) + ")");
  }
  return tokens_[id];
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.count(std::string(token)) > 0;
}

TokenSeq Vocabulary::encode(std::span<const std::string> tokens) const {
  TokenSeq ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(
    std::span<const TokenId> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId i : ids) out.push_back(token(i));
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocabulary file: " + path.string());
  for (size_t i = 0; i < tokens_.size(); ++i) {
    out << tokens_[i] << '\t' << i << '\n';
  }
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary file: " + path.string());
  std::map<TokenId, std::string> by_id;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const size_t t = line.rfind('\t');
    if (t == std::string::npos) {
      throw DataError("vocabulary line " + std::to_string(line_no) +
                      ": expected `token TAB id`");
    }
    TokenId id = 0;
    try {
      id = static_cast<TokenId>(std::stoul(line.substr(t + 1)));
    } catch (const std::exception&) {
      throw DataError("vocabulary line " + std::to_string(line_no) +
                      ": bad id");
    }
    if (!by_id.emplace(id, line.substr(0, t)).second) {
      throw DataError("vocabulary line " + std::to_string(line_no) +
                      ": duplicate id");
    }
  }

  Vocabulary v;
  for (auto& [id, tok] : by_id) {
    if (id < kNumReserved) {
      if (tok != kReservedTokens[id]) {
        throw DataError("vocabulary file: reserved id " + std::to_string(id) +
                        " must map to " + kReservedTokens[id]);
      }
      continue;
    }
    if (id != v.tokens_.size()) {
      throw DataError("vocabulary file: ids must be contiguous from 0");
    }
    if (!v.index_.emplace(tok, id).second) {
      throw DataError("vocabulary file: duplicate token \"" + tok + "\"");
    }
    v.tokens_.push_back(tok);
  }
  return v;
}

DialoguePair encode_pair(const Vocabulary& vocab, const RawPair& pair) {
  return DialoguePair{vocab.encode(pair.post), vocab.encode(pair.response),
                      pair.label};
}

std::vector<DialoguePair> encode_pairs(const Vocabulary& vocab,
                                       std::span<const RawPair> pairs) {
  std::vector<DialoguePair> out;
  out.reserve(pairs.size());
  for (const RawPair& p : pairs) out.push_back(encode_pair(vocab, p));
  return out;
}

}  // namespace emsa

#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace hedmod {

inline constexpr const char* kPad = "<pad>";
inline constexpr const char* kUnk = "<unk>";
inline constexpr const char* kBos = "<bos>";
inline constexpr const char* kEos = "<eos>";
inline constexpr const char* kHead = "$hed$";
inline constexpr const char* kModifier = "$mod$";

/// Token <-> id map. Ids are dense and follow insertion order.
class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(const std::vector<std::string>& tokens);

  int add(const std::string& token);
  bool contains(const std::string& token) const { return index_.count(token) > 0; }
  /// Id of `token`, falling back to <unk> (or -1 if the vocab has none).
  int id(const std::string& token) const;
  /// -1 when absent.
  int find(const std::string& token) const;
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  int unk() const { return find(kUnk); }

  /// One token per line; line number is the id.
  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace hedmod

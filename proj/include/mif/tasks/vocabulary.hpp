#pragma once

#include "mif/tasks/dataset.hpp"

#include <string>
#include <unordered_map>
#include <vector>

namespace mif::tasks {

// Token <-> index table. Index 0 is the reserved unknown-word entry.
class Vocabulary {
 public:
  static constexpr int kUnknown = 0;
  static constexpr const char* kUnknownToken = "<unk>";

  Vocabulary();
  // `words` must not contain the unknown token; order is preserved.
  explicit Vocabulary(const std::vector<std::string>& words);

  // Sorted set of every instruction token in the episodes.
  static Vocabulary from_episodes(const std::vector<const Episode*>& episodes);
  static Vocabulary from_episodes(const std::vector<Episode>& episodes);

  int id(const std::string& word) const;
  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  std::size_t size() const noexcept { return words_.size(); }
  const std::string& word(int id) const { return words_.at(std::size_t(id)); }
  const std::vector<std::string>& words() const noexcept { return words_; }

  // One word per line, unknown token first.
  std::string to_text() const;
  static Vocabulary from_text(const std::string& text);
  std::uint64_t hash() const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.words_ == b.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace mif::tasks

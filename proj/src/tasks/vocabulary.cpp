#include "mif/tasks/vocabulary.hpp"

#include "mif/errors.hpp"
#include "mif/numerics/checkpoint.hpp"

#include <set>
#include <sstream>

namespace mif::tasks {

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& words) {
  words_.push_back(kUnknownToken);
  index_[kUnknownToken] = kUnknown;
  for (const auto& w : words) {
    if (w.empty() || w.find('\n') != std::string::npos) throw DataError("vocabulary word '" + w + "' is malformed");
    if (!index_.emplace(w, int(words_.size())).second) throw DataError("vocabulary word '" + w + "' is repeated");
    words_.push_back(w);
  }
}

Vocabulary Vocabulary::from_episodes(const std::vector<const Episode*>& episodes) {
  std::set<std::string> seen;
  for (const auto* e : episodes) seen.insert(e->tokens.begin(), e->tokens.end());
  seen.erase(kUnknownToken);
  return Vocabulary(std::vector<std::string>(seen.begin(), seen.end()));
}

Vocabulary Vocabulary::from_episodes(const std::vector<Episode>& episodes) {
  std::vector<const Episode*> ptrs;
  for (const auto& e : episodes) ptrs.push_back(&e);
  return from_episodes(ptrs);
}

int Vocabulary::id(const std::string& word) const {
  const auto it = index_.find(word);
  return it == index_.end() ? kUnknown : it->second;
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

std::string Vocabulary::to_text() const {
  std::string out;
  for (const auto& w : words_) out += w + '\n';
  return out;
}

Vocabulary Vocabulary::from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kUnknownToken) throw DataError("vocabulary text must start with " + std::string(kUnknownToken));
  std::vector<std::string> words;
  while (std::getline(in, line)) words.push_back(line);
  return Vocabulary(words);
}

std::uint64_t Vocabulary::hash() const { return fnv1a(to_text()); }

}  // namespace mif::tasks

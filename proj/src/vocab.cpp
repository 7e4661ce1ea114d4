#include "hedmod/vocab.hpp"

#include <fstream>

#include "hedmod/error.hpp"

namespace hedmod {

Vocab::Vocab(const std::vector<std::string>& tokens) {
  for (const auto& t : tokens) add(t);
}

int Vocab::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

int Vocab::find(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? -1 : it->second;
}

int Vocab::id(const std::string& token) const {
  const int found = find(token);
  return found >= 0 ? found : unk();
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "vocab id " + std::to_string(id) + " outside " + std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write vocab " + path);
  for (const auto& t : tokens_) out << t << '\n';
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read vocab " + path);
  Vocab v;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (v.contains(line)) {
      throw Error(ErrorKind::kParse,
                  path + ":" + std::to_string(lineno) + ": duplicate token '" + line + "'");
    }
    v.add(line);
  }
  return v;
}

}  // namespace hedmod

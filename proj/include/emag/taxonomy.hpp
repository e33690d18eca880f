#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace emag {

struct Category {
  std::string path;                   // "technology/mobile"
  std::vector<std::string> triggers;  // lowercase

  std::string name() const;  // last path segment
};

/// Category tree addressed by '/'-separated paths. Parents must be added
/// before their children.
class Taxonomy {
 public:
  void add(std::string path, std::vector<std::string> triggers);

  bool empty() const { return nodes_.empty(); }
  bool contains(std::string_view path) const;
  const Category* find(std::string_view path) const;
  std::vector<const Category*> children(std::string_view path) const;
  const std::vector<Category>& categories() const { return nodes_; }

  static Taxonomy builtin();

 private:
  std::vector<Category> nodes_;
};

void to_json(nlohmann::json& j, const Taxonomy& t);
void from_json(const nlohmann::json& j, Taxonomy& t);

/// Case-insensitive containment of phrase in text where the match is
/// bounded by non-alphanumeric characters (or the ends of text).
bool contains_word(std::string_view text, std::string_view phrase);

std::string to_lower(std::string_view s);

}  // namespace emag

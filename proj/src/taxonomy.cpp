#include "emag/taxonomy.hpp"

#include <algorithm>
#include <cctype>

#include "emag/error.hpp"

namespace emag {

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string parent_of(std::string_view path) {
  auto slash = path.rfind('/');
  return slash == std::string_view::npos ? std::string{} : std::string(path.substr(0, slash));
}

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool contains_word(std::string_view text, std::string_view phrase) {
  if (phrase.empty()) return false;
  auto hay = to_lower(text);
  auto needle = to_lower(phrase);
  for (std::size_t pos = hay.find(needle); pos != std::string::npos;
       pos = hay.find(needle, pos + 1)) {
    bool left = pos == 0 || !is_word_char(hay[pos - 1]);
    std::size_t end = pos + needle.size();
    bool right = end == hay.size() || !is_word_char(hay[end]);
    if (left && right) return true;
  }
  return false;
}

std::string Category::name() const {
  auto slash = path.rfind('/');
  return slash == std::string::npos ? path : path.substr(slash + 1);
}

void Taxonomy::add(std::string path, std::vector<std::string> triggers) {
  if (path.empty() || path.front() == '/' || path.back() == '/' ||
      path.find("//") != std::string::npos)
    fail(ErrorKind::invalid_argument, "bad category path '" + path + "'");
  if (contains(path)) fail(ErrorKind::conflict, "duplicate category '" + path + "'");
  auto parent = parent_of(path);
  if (!parent.empty() && !contains(parent))
    fail(ErrorKind::invalid_argument, "category '" + path + "' has no parent '" + parent + "'");
  for (auto& t : triggers) t = to_lower(t);
  nodes_.push_back({std::move(path), std::move(triggers)});
}

bool Taxonomy::contains(std::string_view path) const { return find(path) != nullptr; }

const Category* Taxonomy::find(std::string_view path) const {
  for (const auto& n : nodes_)
    if (n.path == path) return &n;
  return nullptr;
}

std::vector<const Category*> Taxonomy::children(std::string_view path) const {
  std::vector<const Category*> out;
  for (const auto& n : nodes_)
    if (parent_of(n.path) == path && n.path != path) out.push_back(&n);
  return out;
}

Taxonomy Taxonomy::builtin() {
  Taxonomy t;
  t.add("technology", {"technology", "software", "internet", "computer"});
  t.add("technology/mobile", {"android", "iphone", "smartphone", "mobile"});
  t.add("technology/ai", {"artificial intelligence", "machine learning", "robot"});
  t.add("sports", {"sports", "tournament", "championship"});
  t.add("sports/cricket", {"cricket", "sachin tendulkar", "wicket", "ipl"});
  t.add("sports/golf", {"golf", "pga"});
  t.add("sports/football", {"football", "soccer", "fifa"});
  t.add("entertainment", {"entertainment", "celebrity"});
  t.add("entertainment/movies", {"movies", "film", "cinema", "bollywood"});
  t.add("entertainment/music", {"music", "album", "concert"});
  t.add("lifestyle", {"lifestyle", "fashion", "travel", "food"});
  t.add("recreation", {"recreation", "hiking", "camping"});
  t.add("business", {"business", "economy", "stocks", "market"});
  return t;
}

void to_json(nlohmann::json& j, const Taxonomy& t) {
  j = nlohmann::json::array();
  for (const auto& c : t.categories())
    j.push_back({{"path", c.path}, {"triggers", c.triggers}});
}

void from_json(const nlohmann::json& j, Taxonomy& t) {
  t = Taxonomy{};
  for (const auto& c : j)
    t.add(c.at("path").get<std::string>(),
          c.value("triggers", std::vector<std::string>{}));
}

}  // namespace emag

#include "elba/lexicon.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

#include "elba/rng.hpp"

namespace elba {

namespace {

struct CategoryInfo {
    std::string id;
    std::string word;
    std::string plural;
    bool movable;
    bool container;
    bool openable;
    bool toggleable;
    bool sliceable;
    std::string prep;  // empty when not a container
    std::vector<Color> colors;
    std::vector<Material> materials;
};

const std::array<CategoryInfo, kCategoryCount>& table() {
    using C = Color;
    using M = Material;
    static const std::array<CategoryInfo, kCategoryCount> t = {{
        {"Potato", "potato", "potatoes", true, false, false, false, true, "",
         {C::Brown, C::Yellow}, {M::Organic}},
        {"Tomato", "tomato", "tomatoes", true, false, false, false, true, "",
         {C::Red, C::Green}, {M::Organic}},
        {"Mug", "mug", "mugs", true, false, false, false, false, "",
         {C::Red, C::Blue, C::White, C::Black}, {M::Ceramic, M::Glass}},
        {"Cup", "cup", "cups", true, false, false, false, false, "",
         {C::Blue, C::Green, C::White}, {M::Plastic, M::Glass, M::Ceramic}},
        {"Knife", "knife", "knives", true, false, false, false, false, "",
         {C::Silver, C::Black}, {M::Metal}},
        {"Plate", "plate", "plates", true, false, false, false, false, "",
         {C::White, C::Blue}, {M::Ceramic, M::Glass}},
        {"SaltShaker", "salt shaker", "salt shakers", true, false, false, false, false, "",
         {C::White, C::Silver}, {M::Glass, M::Metal, M::Plastic}},
        {"PepperShaker", "pepper shaker", "pepper shakers", true, false, false, false, false, "",
         {C::Black, C::Silver}, {M::Glass, M::Metal, M::Plastic}},
        {"Pot", "pot", "pots", false, true, false, false, false, "in",
         {C::Silver, C::Black}, {M::Metal}},
        {"Table", "table", "tables", false, true, false, false, false, "on",
         {C::Brown, C::White, C::Black}, {M::Wood}},
        {"Desk", "desk", "desks", false, true, false, false, false, "on",
         {C::Brown, C::Black}, {M::Wood}},
        {"Countertop", "countertop", "countertops", false, true, false, false, false, "on",
         {C::White, C::Brown}, {M::Wood, M::Metal}},
        {"Cabinet", "cabinet", "cabinets", false, true, true, false, false, "in",
         {C::Brown, C::White}, {M::Wood}},
        {"Fridge", "fridge", "fridges", false, true, true, false, false, "in",
         {C::White, C::Silver}, {M::Metal}},
        {"Sink", "sink", "sinks", false, true, false, true, false, "in",
         {C::Silver, C::White}, {M::Metal, M::Ceramic}},
        {"CoffeeMachine", "coffee machine", "coffee machines", false, true, false, true, false, "in",
         {C::Black, C::Silver, C::Red}, {M::Metal, M::Plastic}},
        {"Stove", "stove", "stoves", false, true, false, true, false, "on",
         {C::Black, C::Silver}, {M::Metal}},
        {"Shelf", "shelf", "shelves", false, true, false, false, false, "on",
         {C::Brown, C::White}, {M::Wood}},
    }};
    return t;
}

const CategoryInfo& info(Category c) { return table()[static_cast<size_t>(c)]; }

const std::array<std::string, kColorCount> kColorWords = {
    "red", "blue", "green", "yellow", "white", "black", "brown", "silver"};

const std::array<std::string, kMaterialCount> kMaterialWords = {
    "metal", "wood", "ceramic", "plastic", "glass", "organic"};

const std::array<std::string, kActionKindCount> kActionIds = {
    "Forward", "TurnLeft", "TurnRight", "PanLeft", "PanRight",
    "Pickup", "Place", "Slice", "Open", "Close", "ToggleOn", "ToggleOff",
    "Stop"};

// Every non-lexicon word the templates can emit (dialog, hints, oracle QA,
// generated questions, sub-goal renders).
const std::vector<std::string>& template_words() {
    static const std::vector<std::string> w = {
        // dialog instructions
        "please", "put", "all", "in", "one", "slice", "a", "boil", "make",
        "coffee", "clean", "the",
        // hints
        "now", "you", "should",
        // sub-goal verbs
        "find", "pickup", "place", "open", "close", "toggle", "on",
        // QA templates
        "where", "is", "what", "does", "look", "like", "which", "direction",
        "turn", "to", "your", "left", "right", "front", "behind", "floor",
        "made", "of", "don", "t", "need", "move", "current", "next", "sub",
        "goal", "my", "step", "do", "with", "i",
    };
    return w;
}

std::vector<std::string> build_vocab() {
    std::vector<std::string> vocab = {"<pad>", "<unk>", "<q>", "<a>"};
    std::set<std::string> words;
    for (const auto& ci : table()) {
        for (const auto& text : {ci.word, ci.plural}) {
            std::istringstream ss(text);
            std::string w;
            while (ss >> w) words.insert(w);
        }
    }
    for (const auto& w : kColorWords) words.insert(w);
    for (const auto& w : kMaterialWords) words.insert(w);
    for (const auto& w : template_words()) words.insert(w);
    vocab.insert(vocab.end(), words.begin(), words.end());
    return vocab;
}

const std::map<std::string, int, std::less<>>& vocab_index() {
    static const std::map<std::string, int, std::less<>> idx = [] {
        std::map<std::string, int, std::less<>> m;
        const auto& v = token_vocab();
        for (int i = 0; i < static_cast<int>(v.size()); ++i) m.emplace(v[i], i);
        return m;
    }();
    return idx;
}

}  // namespace

const std::string& category_id(Category c) { return info(c).id; }
const std::string& category_word(Category c) { return info(c).word; }
const std::string& category_plural(Category c) { return info(c).plural; }
const std::string& color_word(Color c) { return kColorWords[static_cast<size_t>(c)]; }
const std::string& material_word(Material m) { return kMaterialWords[static_cast<size_t>(m)]; }
const std::string& action_kind_id(ActionKind k) { return kActionIds[static_cast<size_t>(k)]; }

std::optional<Category> category_from_id(std::string_view id) {
    for (int i = 0; i < kCategoryCount; ++i) {
        if (table()[i].id == id) return static_cast<Category>(i);
    }
    return std::nullopt;
}

std::optional<ActionKind> action_kind_from_id(std::string_view id) {
    for (int i = 0; i < kActionKindCount; ++i) {
        if (kActionIds[i] == id) return static_cast<ActionKind>(i);
    }
    return std::nullopt;
}

bool is_movable(Category c) { return info(c).movable; }
bool is_container(Category c) { return info(c).container; }
bool is_openable(Category c) { return info(c).openable; }
bool is_toggleable(Category c) { return info(c).toggleable; }
bool is_sliceable(Category c) { return info(c).sliceable; }
const std::string& container_preposition(Category c) { return info(c).prep; }

uint8_t allowed_flags(Category c) {
    uint8_t f = 0;
    if (is_sliceable(c)) f |= static_cast<uint8_t>(Flag::Sliced);
    if (is_openable(c)) f |= static_cast<uint8_t>(Flag::Open);
    if (is_toggleable(c)) f |= static_cast<uint8_t>(Flag::ToggledOn);
    if (c == Category::Potato || c == Category::Tomato) f |= static_cast<uint8_t>(Flag::Boiled);
    if (c == Category::Mug || c == Category::Cup) f |= static_cast<uint8_t>(Flag::Cooked);
    return f;
}

const std::vector<Color>& color_pool(Category c) { return info(c).colors; }
const std::vector<Material>& material_pool(Category c) { return info(c).materials; }

std::vector<Category> all_categories() {
    std::vector<Category> out;
    for (int i = 0; i < kCategoryCount; ++i) out.push_back(static_cast<Category>(i));
    return out;
}

std::vector<Category> movable_categories() {
    std::vector<Category> out;
    for (Category c : all_categories())
        if (is_movable(c)) out.push_back(c);
    return out;
}

std::vector<Category> container_categories() {
    std::vector<Category> out;
    for (Category c : all_categories())
        if (is_container(c)) out.push_back(c);
    return out;
}

const std::vector<std::string>& token_vocab() {
    static const std::vector<std::string> v = build_vocab();
    return v;
}

int vocab_size() { return static_cast<int>(token_vocab().size()); }

int token_id(std::string_view word) {
    const auto& idx = vocab_index();
    auto it = idx.find(word);
    return it == idx.end() ? kUnkToken : it->second;
}

const std::string& token_text(int id) {
    static const std::string unk = "<unk>";
    const auto& v = token_vocab();
    if (id < 0 || id >= static_cast<int>(v.size())) return unk;
    return v[static_cast<size_t>(id)];
}

uint64_t vocab_hash() {
    static const uint64_t h = [] {
        std::string joined;
        for (const auto& w : token_vocab()) {
            joined += w;
            joined += '\n';
        }
        return Rng::hash_name(joined);
    }();
    return h;
}

std::vector<std::string> tokenize_words(std::string_view text) {
    std::vector<std::string> words;
    std::string cur;
    for (char raw : text) {
        unsigned char ch = static_cast<unsigned char>(raw);
        if (std::isalnum(ch)) {
            cur.push_back(static_cast<char>(std::tolower(ch)));
        } else if (!cur.empty()) {
            words.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

std::vector<int> tokenize(std::string_view text) {
    std::vector<int> ids;
    for (const auto& w : tokenize_words(text)) ids.push_back(token_id(w));
    return ids;
}

std::string detokenize(const std::vector<int>& ids) {
    std::string out;
    for (int id : ids) {
        if (!out.empty()) out += ' ';
        out += token_text(id);
    }
    return out;
}

std::vector<Category> extract_categories(const std::vector<std::string>& words) {
    // Category words are at most two tokens; try the 2-gram first.
    std::vector<Category> found;
    auto push = [&](Category c) {
        if (std::find(found.begin(), found.end(), c) == found.end()) found.push_back(c);
    };
    for (size_t i = 0; i < words.size(); ++i) {
        bool matched = false;
        if (i + 1 < words.size()) {
            std::string two = words[i] + " " + words[i + 1];
            for (Category c : all_categories()) {
                if (category_word(c) == two || category_plural(c) == two) {
                    push(c);
                    ++i;
                    matched = true;
                    break;
                }
            }
        }
        if (matched) continue;
        for (Category c : all_categories()) {
            if (category_word(c) == words[i] || category_plural(c) == words[i]) {
                push(c);
                break;
            }
        }
    }
    return found;
}

}  // namespace elba

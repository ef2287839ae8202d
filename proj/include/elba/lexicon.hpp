#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace elba {

// Closed object lexicon. Order is part of the serialized contracts
// (object head indices, observation symbols), do not reorder.
enum class Category : int {
    Potato, Tomato, Mug, Cup, Knife, Plate, SaltShaker, PepperShaker,
    Pot, Table, Desk, Countertop, Cabinet, Fridge, Sink, CoffeeMachine,
    Stove, Shelf,
};
constexpr int kCategoryCount = 18;

enum class Color : int { Red, Blue, Green, Yellow, White, Black, Brown, Silver };
constexpr int kColorCount = 8;

enum class Material : int { Metal, Wood, Ceramic, Plastic, Glass, Organic };
constexpr int kMaterialCount = 6;

enum class Flag : uint8_t { Sliced = 1, Cooked = 2, Boiled = 4, Open = 8, ToggledOn = 16 };

enum class ActionKind : int {
    Forward, TurnLeft, TurnRight, PanLeft, PanRight,
    Pickup, Place, Slice, Open, Close, ToggleOn, ToggleOff,
    Stop,
};
constexpr int kActionKindCount = 13;

inline bool is_navigation(ActionKind k) {
    return static_cast<int>(k) <= static_cast<int>(ActionKind::PanRight);
}
inline bool is_interaction(ActionKind k) {
    int i = static_cast<int>(k);
    return i >= static_cast<int>(ActionKind::Pickup) &&
           i <= static_cast<int>(ActionKind::ToggleOff);
}

const std::string& category_id(Category c);        // "SaltShaker"
const std::string& category_word(Category c);      // "salt shaker"
const std::string& category_plural(Category c);    // "salt shakers"
const std::string& color_word(Color c);
const std::string& material_word(Material m);
const std::string& action_kind_id(ActionKind k);   // "TurnLeft"

std::optional<Category> category_from_id(std::string_view id);
std::optional<ActionKind> action_kind_from_id(std::string_view id);

bool is_movable(Category c);
bool is_container(Category c);
bool is_openable(Category c);
bool is_toggleable(Category c);
bool is_sliceable(Category c);
// "in" for enclosing containers, "on" for surfaces.
const std::string& container_preposition(Category c);
// Flags an instance of this category may carry.
uint8_t allowed_flags(Category c);

// Attribute pools the generator draws from.
const std::vector<Color>& color_pool(Category c);
const std::vector<Material>& material_pool(Category c);

std::vector<Category> all_categories();
std::vector<Category> movable_categories();
std::vector<Category> container_categories();

// ---------------------------------------------------------------------------
// Token vocabulary. Fixed and closed: every word any template, dialog line or
// sub-goal render can produce is enumerated here, so episode text never grows
// the vocabulary. Reserved ids: 0 <pad>, 1 <unk>, 2 <q>, 3 <a>.
// ---------------------------------------------------------------------------
constexpr int kPadToken = 0;
constexpr int kUnkToken = 1;
constexpr int kQToken = 2;
constexpr int kAToken = 3;

const std::vector<std::string>& token_vocab();
int vocab_size();
int token_id(std::string_view word);               // <unk> if absent
const std::string& token_text(int id);
uint64_t vocab_hash();

// Lowercases and splits on any non-alphanumeric byte ("don't" -> don, t).
std::vector<std::string> tokenize_words(std::string_view text);
std::vector<int> tokenize(std::string_view text);
std::string detokenize(const std::vector<int>& ids);

// Longest lexicon match ("salt shaker" before "salt") over a word sequence.
// Returns the categories in order of first appearance.
std::vector<Category> extract_categories(const std::vector<std::string>& words);

}  // namespace elba

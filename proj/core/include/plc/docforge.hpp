#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "plc/codecs.hpp"
#include "plc/error.hpp"
#include "plc/ragcore.hpp"

namespace plc::forge {

enum class Category { DangerousBehavior, ChemicalMisuse, IllegalDiscrimination };

inline constexpr std::array<Category, 3> kAllCategories = {
    Category::DangerousBehavior,
    Category::ChemicalMisuse,
    Category::IllegalDiscrimination,
};

std::string_view category_name(Category category);   // catalog file token
std::string_view category_label(Category category);  // report column label
std::optional<Category> category_from_name(std::string_view name);

/// Recovery marker planted in every payload in place of harmful content;
/// judging keys on this token, so nothing harmful ever needs to exist.
std::string sentinel_for(std::string_view recipe_id);
inline constexpr std::string_view kSentinelPrefix = "PLC-SENTINEL-";

/// One poisoning unit, following the composition grammar
/// role-play + trigger keywords + requirements + disguised payload.
struct AttackRecipe {
    std::string id;
    Category category = Category::DangerousBehavior;
    std::string role_play;
    std::vector<std::string> trigger_keywords;  // lowercase, at least one
    std::string requirements;
    std::string payload;  // contains sentinel_for(id) exactly once
    codecs::ObfuscationScheme scheme = codecs::ObfuscationScheme::None;
};

struct RecipeCatalog {
    std::vector<AttackRecipe> recipes;

    const AttackRecipe* find(std::string_view id) const;
    std::vector<const AttackRecipe*> in_category(Category category) const;
    std::vector<Category> categories_present() const;  // kAllCategories order
};

inline constexpr std::size_t kRecipesPerCategory = 10;

/// Deterministic document body: role_play, a "KEYWORDS: ..." line, the
/// requirements, then the payload run through obfuscate() with the recipe's
/// scheme; sections separated by blank lines.
std::string compose(const AttackRecipe& recipe, const codecs::TabooLexicon& lexicon);

/// Same section layout with the payload left in the clear (scheme None).
/// This is what the direct-baseline mode sends, and what the censor
/// differential uses as the taboo-bearing body.
std::string compose_raw(const AttackRecipe& recipe);

/// The everyday question wired to a recipe: a fixed phrasing around its
/// first trigger keyword, so that asking it trips exactly this recipe's
/// trigger rule.
std::string designated_query(const AttackRecipe& recipe);

/// Text catalog: one field-per-line record per recipe, records separated by
/// a "---" line (see fixtures/catalog.txt). Enforces every catalog
/// invariant, including the default 3-categories-by-10 shape, and throws a
/// ValidationError listing all violations.
RecipeCatalog load_catalog(const std::filesystem::path& path);

/// All catalog violations (empty means valid). `require_default_shape`
/// additionally demands exactly kRecipesPerCategory recipes per category.
std::vector<std::string> catalog_violations(const RecipeCatalog& catalog,
                                            bool require_default_shape);

/// One rule per recipe: the recipe's keywords point at the forged document
/// (doc id == recipe id); priority is catalog order.
std::vector<rag::TriggerRule> derive_trigger_rules(const RecipeCatalog& catalog);

}  // namespace plc::forge

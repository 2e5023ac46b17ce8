#include "plc/docforge.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "plc/text.hpp"

namespace plc::forge {

namespace {

std::string trim(std::string_view s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && (s[begin] == ' ' || s[begin] == '\t')) ++begin;
    while (end > begin && (s[end - 1] == ' ' || s[end - 1] == '\t' || s[end - 1] == '\r')) --end;
    return std::string(s.substr(begin, end - begin));
}

std::vector<std::string> split_csv_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t comma = s.find(',', pos);
        if (comma == std::string_view::npos) comma = s.size();
        std::string item = trim(s.substr(pos, comma - pos));
        if (!item.empty()) out.push_back(std::move(item));
        pos = comma + 1;
    }
    return out;
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return 0;
    std::size_t count = 0;
    std::size_t pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string_view::npos) {
        ++count;
        ++pos;
    }
    return count;
}

}  // namespace

std::string_view category_name(Category category) {
    switch (category) {
        case Category::DangerousBehavior: return "dangerous_behavior";
        case Category::ChemicalMisuse: return "chemical_misuse";
        case Category::IllegalDiscrimination: return "illegal_discrimination";
    }
    return "dangerous_behavior";
}

std::string_view category_label(Category category) {
    switch (category) {
        case Category::DangerousBehavior: return "dangerous behaviors";
        case Category::ChemicalMisuse: return "chemical misuse";
        case Category::IllegalDiscrimination: return "illegal discrimination";
    }
    return "dangerous behaviors";
}

std::optional<Category> category_from_name(std::string_view name) {
    for (Category category : kAllCategories) {
        if (category_name(category) == name) return category;
    }
    return std::nullopt;
}

std::string sentinel_for(std::string_view recipe_id) {
    return std::string(kSentinelPrefix) + std::string(recipe_id);
}

const AttackRecipe* RecipeCatalog::find(std::string_view id) const {
    for (const auto& recipe : recipes) {
        if (recipe.id == id) return &recipe;
    }
    return nullptr;
}

std::vector<const AttackRecipe*> RecipeCatalog::in_category(Category category) const {
    std::vector<const AttackRecipe*> out;
    for (const auto& recipe : recipes) {
        if (recipe.category == category) out.push_back(&recipe);
    }
    return out;
}

std::vector<Category> RecipeCatalog::categories_present() const {
    std::vector<Category> out;
    for (Category category : kAllCategories) {
        if (!in_category(category).empty()) out.push_back(category);
    }
    return out;
}

std::string compose(const AttackRecipe& recipe, const codecs::TabooLexicon& lexicon) {
    std::string keywords_line = "KEYWORDS: ";
    for (std::size_t i = 0; i < recipe.trigger_keywords.size(); ++i) {
        if (i > 0) keywords_line += ", ";
        keywords_line += recipe.trigger_keywords[i];
    }
    std::string body = recipe.role_play;
    body += "\n\n";
    body += keywords_line;
    body += "\n\n";
    body += recipe.requirements;
    body += "\n\n";
    body += codecs::obfuscate(recipe.payload, lexicon, recipe.scheme);
    return body;
}

std::string compose_raw(const AttackRecipe& recipe) {
    AttackRecipe clear = recipe;
    clear.scheme = codecs::ObfuscationScheme::None;
    return compose(clear, codecs::TabooLexicon{});
}

std::string designated_query(const AttackRecipe& recipe) {
    return "Any advice about " + recipe.trigger_keywords.front() + "?";
}

std::vector<std::string> catalog_violations(const RecipeCatalog& catalog,
                                            bool require_default_shape) {
    std::vector<std::string> violations;
    if (catalog.recipes.empty()) violations.push_back("catalog contains no recipes");

    std::set<std::string> ids;
    std::map<std::string, std::string> keyword_owner;
    std::map<Category, std::size_t> per_category;

    for (const auto& recipe : catalog.recipes) {
        const std::string where = "recipe '" + (recipe.id.empty() ? "<missing id>" : recipe.id) + "'";
        if (recipe.id.empty()) {
            violations.push_back("recipe with empty id");
        } else if (!ids.insert(recipe.id).second) {
            violations.push_back("duplicate recipe id '" + recipe.id + "'");
        }
        per_category[recipe.category] += 1;

        if (recipe.trigger_keywords.empty()) {
            violations.push_back(where + ": no trigger keywords");
        }
        std::set<std::string> seen_keywords;
        for (const auto& keyword : recipe.trigger_keywords) {
            bool well_formed = !keyword.empty();
            for (char c : keyword) {
                if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'))) well_formed = false;
            }
            if (!well_formed) {
                violations.push_back(where + ": keyword '" + keyword +
                                     "' must be lowercase alphanumeric");
                continue;
            }
            if (!seen_keywords.insert(keyword).second) {
                violations.push_back(where + ": duplicate keyword '" + keyword + "'");
                continue;
            }
            auto [it, inserted] = keyword_owner.emplace(keyword, recipe.id);
            if (!inserted) {
                violations.push_back("trigger keyword '" + keyword + "' is shared by recipes '" +
                                     it->second + "' and '" + recipe.id + "'");
            }
        }

        std::size_t sentinel_count = count_occurrences(recipe.payload, sentinel_for(recipe.id));
        if (sentinel_count != 1) {
            violations.push_back(where + ": payload must contain " + sentinel_for(recipe.id) +
                                 " exactly once (found " + std::to_string(sentinel_count) + ")");
        }
        if (recipe.role_play.empty()) violations.push_back(where + ": empty role_play");
        if (recipe.requirements.empty()) violations.push_back(where + ": empty requirements");
    }

    if (require_default_shape) {
        for (Category category : kAllCategories) {
            std::size_t count = per_category[category];
            if (count != kRecipesPerCategory) {
                violations.push_back("category '" + std::string(category_name(category)) +
                                     "' has " + std::to_string(count) + " recipes, expected " +
                                     std::to_string(kRecipesPerCategory));
            }
        }
    }
    return violations;
}

RecipeCatalog load_catalog(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open catalog: " + path.string());

    RecipeCatalog catalog;
    std::vector<std::string> violations;

    std::map<std::string, std::string> fields;
    int record_no = 1;
    int line_no = 0;

    auto flush_record = [&]() {
        if (fields.empty()) return;
        AttackRecipe recipe;
        auto take = [&](const char* name) -> std::optional<std::string> {
            auto it = fields.find(name);
            if (it == fields.end()) {
                violations.push_back("record " + std::to_string(record_no) + ": missing field '" +
                                     name + "'");
                return std::nullopt;
            }
            std::string value = it->second;
            fields.erase(it);
            return value;
        };
        if (auto v = take("id")) recipe.id = *v;
        if (auto v = take("category")) {
            if (auto category = category_from_name(*v)) {
                recipe.category = *category;
            } else {
                violations.push_back("record " + std::to_string(record_no) +
                                     ": unknown category '" + *v + "'");
            }
        }
        if (auto v = take("role_play")) recipe.role_play = *v;
        if (auto v = take("triggers")) recipe.trigger_keywords = split_csv_list(*v);
        if (auto v = take("requirements")) recipe.requirements = *v;
        if (auto v = take("payload")) recipe.payload = *v;
        if (auto v = take("scheme")) {
            if (auto scheme = codecs::scheme_from_name(*v)) {
                recipe.scheme = *scheme;
            } else {
                violations.push_back("record " + std::to_string(record_no) +
                                     ": unknown scheme '" + *v + "'");
            }
        }
        for (const auto& [name, value] : fields) {
            violations.push_back("record " + std::to_string(record_no) + ": unknown field '" +
                                 name + "'");
        }
        fields.clear();
        catalog.recipes.push_back(std::move(recipe));
        ++record_no;
    };

    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (line == "---") {
            flush_record();
            continue;
        }
        std::size_t colon = line.find(':');
        if (colon == std::string::npos) {
            violations.push_back("line " + std::to_string(line_no) +
                                 ": expected 'field: value' or '---'");
            continue;
        }
        std::string name = trim(line.substr(0, colon));
        std::string value = trim(line.substr(colon + 1));
        if (!fields.emplace(name, value).second) {
            violations.push_back("record " + std::to_string(record_no) + ": repeated field '" +
                                 name + "'");
        }
    }
    flush_record();

    auto structural = catalog_violations(catalog, /*require_default_shape=*/true);
    violations.insert(violations.end(), structural.begin(), structural.end());
    if (!violations.empty()) throw ValidationError(std::move(violations));
    return catalog;
}

std::vector<rag::TriggerRule> derive_trigger_rules(const RecipeCatalog& catalog) {
    std::vector<rag::TriggerRule> rules;
    rules.reserve(catalog.recipes.size());
    for (std::size_t i = 0; i < catalog.recipes.size(); ++i) {
        const auto& recipe = catalog.recipes[i];
        rules.push_back(rag::TriggerRule{recipe.trigger_keywords, recipe.id,
                                         static_cast<int>(i)});
    }
    return rules;
}

}  // namespace plc::forge

#include "lclfqa/templates.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "lclfqa/error.hpp"

namespace lclfqa {

namespace detail {
const std::map<std::string, std::string>& builtin_templates();
}

namespace {

bool is_name_char(char c) noexcept {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

/// Length of a `{name}` placeholder starting at s[i], or 0.
std::size_t placeholder_length(std::string_view s, std::size_t i) {
    if (s[i] != '{') return 0;
    std::size_t j = i + 1;
    while (j < s.size() && is_name_char(s[j])) ++j;
    if (j == i + 1 || j >= s.size() || s[j] != '}') return 0;
    return j - i + 1;
}

}  // namespace

std::string render_text(std::string_view tmpl, const Bindings& bindings) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        const auto len = placeholder_length(tmpl, i);
        if (len == 0) {
            out.push_back(tmpl[i++]);
            continue;
        }
        const auto name = tmpl.substr(i + 1, len - 2);
        auto it = bindings.find(name);
        if (it == bindings.end()) {
            throw RenderError("unbound placeholder {" + std::string(name) + "}");
        }
        out.append(it->second);
        i += len;
    }
    return out;
}

std::vector<std::string> placeholders(std::string_view tmpl) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
        if (const auto len = placeholder_length(tmpl, i)) {
            std::string name(tmpl.substr(i + 1, len - 2));
            if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(std::move(name));
            i += len - 1;
        }
    }
    return names;
}

TemplateStore::TemplateStore() {
    for (const auto& [name, text] : detail::builtin_templates()) templates_.emplace(name, text);
}

TemplateStore TemplateStore::with_overrides(const std::filesystem::path& dir) {
    TemplateStore store;
    if (!std::filesystem::is_directory(dir)) {
        throw ConfigError("templates directory not found: " + dir.string());
    }
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        store.set(entry.path().stem().string(), ss.str());
    }
    return store;
}

bool TemplateStore::contains(std::string_view name) const { return templates_.find(name) != templates_.end(); }

const std::string& TemplateStore::get(std::string_view name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw RenderError("unknown template " + std::string(name));
    return it->second;
}

std::vector<std::string> TemplateStore::names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : templates_) out.push_back(name);
    return out;
}

void TemplateStore::set(std::string name, std::string text) { templates_[std::move(name)] = std::move(text); }

std::string TemplateStore::render(std::string_view name, const Bindings& bindings) const {
    const auto& tmpl = get(name);
    try {
        return render_text(tmpl, bindings);
    } catch (const RenderError& e) {
        throw RenderError(std::string("template ") + std::string(name) + ": " + e.what());
    }
}

void TemplateStore::dump(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    for (const auto& [name, text] : templates_) {
        std::ofstream out(dir / (name + ".txt"), std::ios::binary);
        out << text;
        if (!out) throw StoreError("cannot write template " + name);
    }
}

}  // namespace lclfqa

#include "dagcrew/jsonpath.hpp"

#include <cctype>
#include <variant>

namespace dagcrew::planner {

using nlohmann::json;

namespace {

struct MemberStep { std::string name; };
struct IndexStep { std::size_t index; };
struct WildcardStep {};
using Step = std::variant<MemberStep, IndexStep, WildcardStep>;

[[noreturn]] void bad_path(const std::string& expr, const std::string& why) {
    throw ParseError("invalid path expression '" + expr + "': " + why);
}

std::vector<Step> compile(const std::string& expr) {
    std::size_t i = 0;
    if (expr.empty() || expr[0] != '$') bad_path(expr, "must start with $");
    ++i;
    std::vector<Step> steps;
    while (i < expr.size()) {
        const char c = expr[i];
        if (c == '.') {
            ++i;
            if (i < expr.size() && expr[i] == '*') {
                steps.push_back(WildcardStep{});
                ++i;
                continue;
            }
            std::size_t start = i;
            while (i < expr.size() && expr[i] != '.' && expr[i] != '[') ++i;
            if (i == start) bad_path(expr, "empty member name");
            steps.push_back(MemberStep{expr.substr(start, i - start)});
        } else if (c == '[') {
            ++i;
            if (i >= expr.size()) bad_path(expr, "unterminated bracket");
            if (expr[i] == '*') {
                ++i;
                if (i >= expr.size() || expr[i] != ']') {
                    bad_path(expr, "unterminated bracket");
                }
                ++i;
                steps.push_back(WildcardStep{});
            } else if (expr[i] == '\'' || expr[i] == '"') {
                const char quote = expr[i];
                ++i;
                std::size_t start = i;
                while (i < expr.size() && expr[i] != quote) ++i;
                if (i >= expr.size()) bad_path(expr, "unterminated string");
                steps.push_back(MemberStep{expr.substr(start, i - start)});
                ++i;
                if (i >= expr.size() || expr[i] != ']') {
                    bad_path(expr, "unterminated bracket");
                }
                ++i;
            } else if (std::isdigit(static_cast<unsigned char>(expr[i]))) {
                std::size_t start = i;
                while (i < expr.size() &&
                       std::isdigit(static_cast<unsigned char>(expr[i]))) {
                    ++i;
                }
                if (i >= expr.size() || expr[i] != ']') {
                    bad_path(expr, "unterminated bracket");
                }
                steps.push_back(
                    IndexStep{std::stoul(expr.substr(start, i - start))});
                ++i;
            } else {
                bad_path(expr, "unsupported bracket content");
            }
        } else {
            bad_path(expr, std::string("unexpected character '") + c + "'");
        }
    }
    return steps;
}

void apply(const json& value, const std::vector<Step>& steps, std::size_t at,
           std::vector<json>& out) {
    if (at == steps.size()) {
        out.push_back(value);
        return;
    }
    const Step& step = steps[at];
    if (std::holds_alternative<MemberStep>(step)) {
        const auto& name = std::get<MemberStep>(step).name;
        if (value.is_object() && value.contains(name)) {
            apply(value.at(name), steps, at + 1, out);
        }
    } else if (std::holds_alternative<IndexStep>(step)) {
        const std::size_t idx = std::get<IndexStep>(step).index;
        if (value.is_array() && idx < value.size()) {
            apply(value.at(idx), steps, at + 1, out);
        }
    } else {
        if (value.is_array() || value.is_object()) {
            for (const auto& child : value) {
                apply(child, steps, at + 1, out);
            }
        }
    }
}

}  // namespace

std::vector<json> jsonpath_evaluate(const json& document,
                                    const std::string& expression) {
    const std::vector<Step> steps = compile(expression);
    std::vector<json> out;
    apply(document, steps, 0, out);
    return out;
}

}  // namespace dagcrew::planner

#pragma once

#include <string>
#include <utility>
#include <vector>

namespace vexel::xml {

/// One XML element. Attribute order is preserved; text content is collected
/// (whitespace-trimmed) but markup inside it is not.
struct Node {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attrs;
    std::vector<Node> children;
    std::string text;

    const std::string* attr(const std::string& key) const;
};

/// Parses a standalone XML document. Declarations, comments, DOCTYPE and
/// processing instructions are skipped. Throws Error(malformed_xml).
Node parse(const std::string& text);

} // namespace vexel::xml

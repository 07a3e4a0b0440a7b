#include "vexel/xml.hpp"

#include "vexel/common.hpp"

#include <cctype>

namespace vexel::xml {

const std::string* Node::attr(const std::string& key) const {
    for (const auto& [k, v] : attrs) {
        if (k == key) return &v;
    }
    return nullptr;
}

namespace {

struct Cursor {
    const std::string& s;
    std::size_t pos = 0;

    bool eof() const { return pos >= s.size(); }
    char peek() const { return eof() ? '\0' : s[pos]; }
    bool starts_with(const char* lit) const { return s.compare(pos, std::string::traits_type::length(lit), lit) == 0; }

    [[noreturn]] void error(const std::string& msg) const {
        std::size_t line = 1;
        for (std::size_t i = 0; i < pos && i < s.size(); ++i) {
            if (s[i] == '\n') ++line;
        }
        fail(Errc::malformed_xml, msg + " (line " + std::to_string(line) + ")");
    }

    void skip_ws() {
        while (!eof() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }

    void expect(char c) {
        if (peek() != c) error(std::string("expected '") + c + "'");
        ++pos;
    }
};

bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':' || c == '.';
}

std::string read_name(Cursor& cur) {
    std::size_t start = cur.pos;
    while (!cur.eof() && is_name_char(cur.s[cur.pos])) ++cur.pos;
    if (cur.pos == start) cur.error("expected name");
    return cur.s.substr(start, cur.pos - start);
}

std::string decode_entities(const std::string& raw, Cursor& cur) {
    if (raw.find('&') == std::string::npos) return raw;
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] != '&') {
            out += raw[i];
            continue;
        }
        std::size_t semi = raw.find(';', i);
        if (semi == std::string::npos) cur.error("unterminated entity");
        std::string ent = raw.substr(i + 1, semi - i - 1);
        if (ent == "amp") out += '&';
        else if (ent == "lt") out += '<';
        else if (ent == "gt") out += '>';
        else if (ent == "quot") out += '"';
        else if (ent == "apos") out += '\'';
        else if (!ent.empty() && ent[0] == '#') {
            long code = 0;
            if (ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X'))
                code = std::strtol(ent.c_str() + 2, nullptr, 16);
            else
                code = std::strtol(ent.c_str() + 1, nullptr, 10);
            if (code <= 0 || code > 0x10FFFF) cur.error("bad character reference");
            // UTF-8 encode
            if (code < 0x80) {
                out += static_cast<char>(code);
            } else if (code < 0x800) {
                out += static_cast<char>(0xC0 | (code >> 6));
                out += static_cast<char>(0x80 | (code & 0x3F));
            } else if (code < 0x10000) {
                out += static_cast<char>(0xE0 | (code >> 12));
                out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
                out += static_cast<char>(0x80 | (code & 0x3F));
            } else {
                out += static_cast<char>(0xF0 | (code >> 18));
                out += static_cast<char>(0x80 | ((code >> 12) & 0x3F));
                out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
                out += static_cast<char>(0x80 | (code & 0x3F));
            }
        } else {
            cur.error("unknown entity &" + ent + ";");
        }
        i = semi;
    }
    return out;
}

// Skips comments, PIs, DOCTYPE. Returns true if something was skipped.
bool skip_misc(Cursor& cur) {
    if (cur.starts_with("<!--")) {
        std::size_t end = cur.s.find("-->", cur.pos + 4);
        if (end == std::string::npos) cur.error("unterminated comment");
        cur.pos = end + 3;
        return true;
    }
    if (cur.starts_with("<?")) {
        std::size_t end = cur.s.find("?>", cur.pos + 2);
        if (end == std::string::npos) cur.error("unterminated processing instruction");
        cur.pos = end + 2;
        return true;
    }
    if (cur.starts_with("<!DOCTYPE") || cur.starts_with("<!doctype")) {
        // DOCTYPE may contain a bracketed internal subset.
        int depth = 0;
        while (!cur.eof()) {
            char c = cur.s[cur.pos++];
            if (c == '[') ++depth;
            else if (c == ']') --depth;
            else if (c == '>' && depth == 0) return true;
        }
        cur.error("unterminated DOCTYPE");
    }
    return false;
}

void append_text(Node& node, const std::string& chunk) {
    std::size_t a = chunk.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return;
    std::size_t b = chunk.find_last_not_of(" \t\r\n");
    if (!node.text.empty()) node.text += ' ';
    node.text += chunk.substr(a, b - a + 1);
}

Node parse_element(Cursor& cur) {
    cur.expect('<');
    Node node;
    node.name = read_name(cur);
    // attributes
    for (;;) {
        cur.skip_ws();
        char c = cur.peek();
        if (c == '>' || c == '/') break;
        std::string key = read_name(cur);
        cur.skip_ws();
        cur.expect('=');
        cur.skip_ws();
        char q = cur.peek();
        if (q != '"' && q != '\'') cur.error("expected quoted attribute value");
        ++cur.pos;
        std::size_t end = cur.s.find(q, cur.pos);
        if (end == std::string::npos) cur.error("unterminated attribute value");
        std::string raw = cur.s.substr(cur.pos, end - cur.pos);
        cur.pos = end + 1;
        node.attrs.emplace_back(key, decode_entities(raw, cur));
    }
    if (cur.peek() == '/') {
        ++cur.pos;
        cur.expect('>');
        return node;
    }
    cur.expect('>');
    // children and text until matching close tag
    for (;;) {
        if (cur.eof()) cur.error("unexpected end of input inside <" + node.name + ">");
        if (cur.peek() != '<') {
            std::size_t lt = cur.s.find('<', cur.pos);
            if (lt == std::string::npos) cur.error("unexpected end of input inside <" + node.name + ">");
            append_text(node, decode_entities(cur.s.substr(cur.pos, lt - cur.pos), cur));
            cur.pos = lt;
            continue;
        }
        if (cur.starts_with("</")) {
            cur.pos += 2;
            std::string close = read_name(cur);
            if (close != node.name) cur.error("mismatched close tag </" + close + "> for <" + node.name + ">");
            cur.skip_ws();
            cur.expect('>');
            return node;
        }
        if (cur.starts_with("<![CDATA[")) {
            std::size_t end = cur.s.find("]]>", cur.pos + 9);
            if (end == std::string::npos) cur.error("unterminated CDATA");
            append_text(node, cur.s.substr(cur.pos + 9, end - cur.pos - 9));
            cur.pos = end + 3;
            continue;
        }
        if (skip_misc(cur)) continue;
        node.children.push_back(parse_element(cur));
    }
}

} // namespace

Node parse(const std::string& text) {
    Cursor cur{text};
    for (;;) {
        cur.skip_ws();
        if (cur.eof()) cur.error("no root element");
        if (cur.peek() != '<') cur.error("text outside root element");
        if (skip_misc(cur)) continue;
        break;
    }
    Node root = parse_element(cur);
    cur.skip_ws();
    while (!cur.eof()) {
        if (!skip_misc(cur)) cur.error("trailing content after root element");
        cur.skip_ws();
    }
    return root;
}

} // namespace vexel::xml

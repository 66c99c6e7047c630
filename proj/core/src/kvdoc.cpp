#include "tcq/kvdoc.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "tcq/errors.hpp"

namespace tcq {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

std::string format_double(double v) {
    char buf[64];
    // Try increasing precision until the value round-trips exactly.
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return buf;
}

KvDoc KvDoc::parse(const std::string& text) {
    KvDoc doc;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw config_error("kvdoc: line " + std::to_string(line_no) + " has no '='");
        const std::string key = trim(t.substr(0, eq));
        if (key.empty())
            throw config_error("kvdoc: line " + std::to_string(line_no) + " has an empty key");
        doc.entries_.emplace_back(key, trim(t.substr(eq + 1)));
    }
    return doc;
}

KvDoc KvDoc::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string KvDoc::serialize() const {
    std::string out;
    for (const auto& [k, v] : entries_) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    }
    return out;
}

void KvDoc::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path.string());
    out << serialize();
    if (!out) throw io_error("write failed for " + path.string());
}

const std::string* KvDoc::find(const std::string& key) const {
    for (const auto& [k, v] : entries_)
        if (k == key) return &v;
    return nullptr;
}

bool KvDoc::has(const std::string& key) const { return find(key) != nullptr; }

std::vector<std::string> KvDoc::keys() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [k, v] : entries_) out.push_back(k);
    return out;
}

void KvDoc::set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : entries_) {
        if (k == key) {
            v = value;
            return;
        }
    }
    entries_.emplace_back(key, value);
}

void KvDoc::set(const std::string& key, double value) { set(key, format_double(value)); }

void KvDoc::set(const std::string& key, std::int64_t value) { set(key, std::to_string(value)); }

void KvDoc::set(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }

void KvDoc::set(const std::string& key, bool value) {
    set(key, std::string(value ? "on" : "off"));
}

void KvDoc::set_array(const std::string& key, const std::vector<std::string>& items) {
    std::string v = "[";
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) v += ", ";
        v += items[i];
    }
    v += "]";
    set(key, v);
}

std::string KvDoc::get_str(const std::string& key) const {
    const std::string* v = find(key);
    if (!v) throw config_error("missing key '" + key + "'");
    return *v;
}

std::string KvDoc::get_str(const std::string& key, const std::string& fallback) const {
    const std::string* v = find(key);
    return v ? *v : fallback;
}

double KvDoc::get_f64(const std::string& key) const {
    const std::string v = get_str(key);
    char* end = nullptr;
    const double out = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw config_error("key '" + key + "': '" + v + "' is not a number");
    return out;
}

double KvDoc::get_f64(const std::string& key, double fallback) const {
    return has(key) ? get_f64(key) : fallback;
}

std::int64_t KvDoc::get_i64(const std::string& key) const {
    const std::string v = get_str(key);
    char* end = nullptr;
    const long long out = std::strtoll(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw config_error("key '" + key + "': '" + v + "' is not an integer");
    return out;
}

std::int64_t KvDoc::get_i64(const std::string& key, std::int64_t fallback) const {
    return has(key) ? get_i64(key) : fallback;
}

std::uint64_t KvDoc::get_u64(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get_str(key);
    char* end = nullptr;
    const unsigned long long out = std::strtoull(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw config_error("key '" + key + "': '" + v + "' is not an unsigned integer");
    return out;
}

bool KvDoc::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get_str(key);
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    throw config_error("key '" + key + "': '" + v + "' is not a flag (on/off)");
}

std::vector<std::string> KvDoc::get_array(const std::string& key) const {
    const std::string v = get_str(key);
    if (v.size() < 2 || v.front() != '[' || v.back() != ']')
        throw config_error("key '" + key + "': expected a bracketed array, got '" + v + "'");
    std::vector<std::string> items;
    std::string body = v.substr(1, v.size() - 2);
    std::size_t pos = 0;
    while (pos <= body.size()) {
        std::size_t comma = body.find(',', pos);
        if (comma == std::string::npos) comma = body.size();
        const std::string item = trim(body.substr(pos, comma - pos));
        if (!item.empty()) items.push_back(item);
        pos = comma + 1;
    }
    return items;
}

} // namespace tcq

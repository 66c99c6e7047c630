#ifndef TCQ_KVDOC_HPP
#define TCQ_KVDOC_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tcq {

/// Minimal ordered key/value text document:
///
///   # comment
///   blocks_per_cell = 500
///   qp_list = [22, 27, 32, 37]
///
/// Values are plain tokens or bracketed comma-separated arrays. Serialization
/// preserves insertion order, so emit/parse round-trips are byte-stable.
class KvDoc {
public:
    KvDoc() = default;

    static KvDoc parse(const std::string& text);
    static KvDoc load(const std::filesystem::path& path); // throws io_error

    std::string serialize() const;
    void save(const std::filesystem::path& path) const; // throws io_error

    bool has(const std::string& key) const;
    std::vector<std::string> keys() const;

    void set(const std::string& key, const std::string& value);
    void set(const std::string& key, const char* value) { set(key, std::string(value)); }
    void set(const std::string& key, double value);
    void set(const std::string& key, std::int64_t value);
    void set(const std::string& key, std::uint64_t value);
    void set(const std::string& key, int value) { set(key, static_cast<std::int64_t>(value)); }
    void set(const std::string& key, bool value);
    void set_array(const std::string& key, const std::vector<std::string>& items);

    std::string get_str(const std::string& key) const;               // throws config_error
    std::string get_str(const std::string& key, const std::string& fallback) const;
    double get_f64(const std::string& key) const;
    double get_f64(const std::string& key, double fallback) const;
    std::int64_t get_i64(const std::string& key) const;
    std::int64_t get_i64(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::string> get_array(const std::string& key) const;

    friend bool operator==(const KvDoc& a, const KvDoc& b) { return a.entries_ == b.entries_; }

private:
    const std::string* find(const std::string& key) const;
    std::vector<std::pair<std::string, std::string>> entries_;
};

/// Shortest-exact formatting used across every emitted file: doubles print
/// with enough digits to parse back bit-identical.
std::string format_double(double v);

} // namespace tcq

#endif

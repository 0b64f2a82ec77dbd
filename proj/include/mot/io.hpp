#pragma once

// File plumbing shared by every artifact writer: whole-file IO, SHA-256
// checksums, JSONL iteration and the self-describing header line.

#include <openssl/evp.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "mot/errors.hpp"

namespace mot {

inline constexpr const char* tool_name = "mot";
inline constexpr const char* tool_version = "0.1.0";

class io_error : public data_error {
public:
    explicit io_error(const std::string& what) : data_error("IOError: " + what) {}
};

class schema_error : public data_error {
public:
    schema_error(const std::string& file, std::size_t line, const std::string& what)
        : data_error("SchemaError: " + file + ":" + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class checksum_mismatch : public data_error {
public:
    explicit checksum_mismatch(const std::string& what) : data_error("ChecksumMismatch: " + what) {}
};

inline std::string read_text_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw io_error("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::filesystem::path& p, std::string_view text) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot write " + p.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw io_error("short write to " + p.string());
}

inline std::string sha256_hex(std::string_view data) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
        throw error(error_family::internal, "sha256 failed");
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return hex.str();
}

inline std::string checksum_tag(std::string_view data) { return "sha256:" + sha256_hex(data); }

inline std::string file_checksum(const std::filesystem::path& p) { return checksum_tag(read_text_file(p)); }

// First line of every artifact: {"_header": {tool, version, kind, ...fields}}.
inline nlohmann::ordered_json make_header(const std::string& kind, const nlohmann::ordered_json& fields = {}) {
    nlohmann::ordered_json h;
    h["tool"] = tool_name;
    h["version"] = tool_version;
    h["kind"] = kind;
    if (fields.is_object())
        for (const auto& [k, v] : fields.items()) h[k] = v;
    nlohmann::ordered_json line;
    line["_header"] = std::move(h);
    return line;
}

inline bool is_header(const nlohmann::json& j) { return j.is_object() && j.contains("_header"); }

// Calls `fn(line_number, record)` for every non-blank, non-header line.
inline void for_each_jsonl(const std::filesystem::path& p,
                           const std::function<void(std::size_t, const nlohmann::json&)>& fn) {
    std::istringstream in(read_text_file(p));
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error&) {
            throw schema_error(p.string(), line_no, "malformed JSON");
        }
        if (is_header(j)) continue;
        fn(line_no, j);
    }
}

// Header plus one JSON document per line.
class jsonl_writer {
public:
    jsonl_writer(const std::string& kind, const nlohmann::ordered_json& fields = {}) {
        out_ << make_header(kind, fields).dump() << '\n';
    }
    template <class Json>
    void add(const Json& record) { out_ << record.dump() << '\n'; }
    std::string str() const { return out_.str(); }
    void write(const std::filesystem::path& p) const { write_text_file(p, out_.str()); }

private:
    std::ostringstream out_;
};

}  // namespace mot

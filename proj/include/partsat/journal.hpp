#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace partsat {

// Journal files hold one JSON object per line. Every object carries a "crc"
// field: the CRC-32 (as 8 lowercase hex digits) of the object's compact
// serialization without that field. Keys serialize in sorted order, so the
// serialization is canonical.

class JournalError : public std::runtime_error {
public:
    JournalError(const std::string& what, std::size_t line) : std::runtime_error(what), line_(line) {}
    std::size_t line() const { return line_; }  // 1-based; 0 when not tied to a line

private:
    std::size_t line_;
};

std::uint32_t crc32(std::string_view bytes);

// Serialized record with its checksum, without the trailing newline.
std::string seal_record(nlohmann::json record);
// Parses one line and verifies its checksum; returns the record without
// "crc". Throws JournalError (line 0) on malformed JSON or bad checksum.
nlohmann::json open_record(std::string_view line);

struct JournalScan {
    std::vector<nlohmann::json> records;
    bool torn_tail = false;          // last line was incomplete and has been ignored
    std::uintmax_t valid_bytes = 0;  // length of the prefix holding complete records
};

// Reads a journal. A final line without its newline is a torn write and is
// dropped (records are always written together with their newline); any
// other bad line throws JournalError with its line number.
JournalScan scan_journal(const std::filesystem::path& path);

class JournalWriter {
public:
    // Opens for appending; `truncate_to` cuts the file first (used to drop a
    // torn tail before resuming).
    explicit JournalWriter(const std::filesystem::path& path, std::optional<std::uintmax_t> truncate_to = {});

    void append(const nlohmann::json& record);
    void flush();

private:
    std::ofstream out_;
};

}  // namespace partsat

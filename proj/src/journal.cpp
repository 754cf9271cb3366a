#include "partsat/journal.hpp"

#include <boost/crc.hpp>
#include <cstdio>
#include <iomanip>
#include <sstream>

namespace partsat {

std::uint32_t crc32(std::string_view bytes) {
    boost::crc_32_type crc;
    crc.process_bytes(bytes.data(), bytes.size());
    return crc.checksum();
}

namespace {

std::string hex8(std::uint32_t v) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", v);
    return buf;
}

}  // namespace

std::string seal_record(nlohmann::json record) {
    record.erase("crc");
    const std::string body = record.dump();
    record["crc"] = hex8(crc32(body));
    return record.dump();
}

nlohmann::json open_record(std::string_view line) {
    nlohmann::json record = nlohmann::json::parse(line.begin(), line.end(), nullptr, false);
    if (record.is_discarded() || !record.is_object()) throw JournalError("record is not a JSON object", 0);
    auto it = record.find("crc");
    if (it == record.end() || !it->is_string()) throw JournalError("record has no checksum", 0);
    const std::string stored = it->get<std::string>();
    record.erase("crc");
    if (hex8(crc32(record.dump())) != stored) throw JournalError("checksum mismatch", 0);
    return record;
}

JournalScan scan_journal(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw JournalError("cannot open journal " + path.string(), 0);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();

    JournalScan scan;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        ++line_no;
        const std::size_t nl = text.find('\n', pos);
        const bool complete = nl != std::string::npos;
        if (!complete) {
            scan.torn_tail = true;
            break;
        }
        const std::string_view line(text.data() + pos, nl - pos);
        if (!line.empty()) {
            try {
                scan.records.push_back(open_record(line));
            } catch (const JournalError& e) {
                throw JournalError(path.string() + ":" + std::to_string(line_no) + ": " + e.what(), line_no);
            }
        }
        pos = nl + 1;
        scan.valid_bytes = pos;
    }
    return scan;
}

JournalWriter::JournalWriter(const std::filesystem::path& path, std::optional<std::uintmax_t> truncate_to) {
    if (truncate_to && std::filesystem::exists(path)) {
        const auto size = std::filesystem::file_size(path);
        if (*truncate_to < size) std::filesystem::resize_file(path, *truncate_to);
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::app);
    if (!out_) throw JournalError("cannot open journal " + path.string() + " for writing", 0);
}

void JournalWriter::append(const nlohmann::json& record) {
    out_ << seal_record(record) << '\n';
    out_.flush();
    if (!out_) throw JournalError("journal write failed", 0);
}

void JournalWriter::flush() { out_.flush(); }

}  // namespace partsat

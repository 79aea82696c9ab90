#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "zwsim/types.hpp"
#include "zwsim/wire.hpp"

namespace zwsim::sniff {

enum class TraceStatus { Delivered, Lost, CrcError, IgnoredNotIncluded, QueuedBehindSlot, DecryptFailed };

std::string_view to_string(TraceStatus s);
TraceStatus status_from_string(std::string_view s);

/// One sniffer line per medium transmission.
struct TraceRecord {
  std::uint64_t line_no = 0;
  SimTime time{};
  HomeId home;
  NodeId src;
  NodeId dst;
  std::string command;
  TraceStatus status = TraceStatus::Delivered;
  std::string note;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

class Trace {
 public:
  /// Appends a record with the next line number (numbering starts at 1).
  const TraceRecord& record(const wire::MacFrame& frame, TraceStatus outcome, SimTime now, std::string note = {});

  /// Receiver-side outcome for an already recorded line.
  void annotate(std::uint64_t line_no, TraceStatus status, std::string_view note = {});
  void append_note(std::uint64_t line_no, std::string_view note);

  const std::vector<TraceRecord>& records() const { return records_; }
  const TraceRecord& at(std::uint64_t line_no) const { return records_.at(line_no - 1); }
  std::size_t size() const { return records_.size(); }

 private:
  std::vector<TraceRecord> records_;
};

inline constexpr std::string_view kCsvHeader = "line_no,time,home,src,dst,command,status,note";

/// CSV text: header line, one row per record, LF endings. Notes containing
/// commas or quotes are double-quoted.
std::string to_csv(const std::vector<TraceRecord>& records);
std::vector<TraceRecord> from_csv(std::string_view text);

/// Throws std::runtime_error if the file cannot be written.
void export_csv(const std::vector<TraceRecord>& records, const std::filesystem::path& path);
std::vector<TraceRecord> import_csv(const std::filesystem::path& path);

}  // namespace zwsim::sniff
